#include "textseg/toy_data.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "textseg/rng.hpp"

namespace textseg {

namespace {

constexpr int kLatentDim = 16;
constexpr int kBlocks = 8;       // image rendered as 8x8 intensity blocks
constexpr int kVocab = 64;

std::vector<std::string> make_vocab() {
  static const char* syllables[8] = {"ka", "ri", "mo", "ta", "ne", "su", "lo", "vi"};
  std::vector<std::string> vocab;
  vocab.reserve(kVocab);
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) vocab.push_back(std::string(syllables[a]) + syllables[b]);
  return vocab;
}

Eigen::MatrixXd gaussian_matrix(Rng& rng, int rows, int cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

}  // namespace

PairCorpus make_two_cluster_corpus(int n, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x70795f70ULL));
  const auto vocab = make_vocab();
  // Fixed render and captioning maps for this corpus instance.
  const Eigen::MatrixXd render = gaussian_matrix(rng, kBlocks * kBlocks, kLatentDim, 1.0);
  const Eigen::MatrixXd caption_map = gaussian_matrix(rng, kVocab, kLatentDim, 1.0);

  PairCorpus corpus;
  corpus.images.reserve(n);
  corpus.prompts.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int cls = i % 2;
    Eigen::VectorXd z(kLatentDim);
    for (int k = 0; k < kLatentDim; ++k) z(k) = rng.normal();
    // Orthogonal cluster centers on the first two latent axes.
    z(0) += cls == 0 ? 2.0 : 0.0;
    z(1) += cls == 0 ? 0.0 : 2.0;

    const Eigen::VectorXd blocks = render * z;
    ImageTensor img(16, 16, 3);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c) {
        const int b = (r / 2) * kBlocks + (c / 2);
        const double v = std::clamp(0.5 + 0.1 * blocks(b), 0.02, 0.98);
        for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = v;
      }

    const Eigen::VectorXd codes = caption_map * z;
    std::string caption = cls == 0 ? "alpha" : "beta";
    for (int j = 0; j < kVocab; ++j)
      if (codes(j) > 0.0) caption += " " + vocab[j];

    corpus.images.push_back(std::move(img));
    corpus.prompts.push_back({caption, cls == 0 ? "alpha" : "beta", "P0"});
  }
  return corpus;
}

std::vector<ShapeSample> make_shape_dataset(int n, int side, std::uint64_t seed) {
  std::vector<ShapeSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng rng(mix_seed(seed, 0x73686170ULL + i));
    ShapeSample s;
    s.image = ImageTensor(side, side, 3);
    s.mask = BinaryMask(side, side, 0);

    const bool disk = rng.uniform() < 0.5;
    const int extent = rng.uniform_int(side / 4, side / 2);
    const int cr = rng.uniform_int(extent / 2 + 1, side - extent / 2 - 2);
    const int cc = rng.uniform_int(extent / 2 + 1, side - extent / 2 - 2);

    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        bool inside;
        if (disk) {
          const double dr = r - cr, dc = c - cc;
          inside = dr * dr + dc * dc <= 0.25 * extent * extent;
        } else {
          inside = std::abs(r - cr) <= extent / 2 && std::abs(c - cc) <= extent / 2;
        }
        s.mask(r, c) = inside ? 1 : 0;
        const double base = inside ? 0.8 : 0.2;
        const double v = std::clamp(base + 0.05 * rng.normal(), 0.0, 1.0);
        for (int ch = 0; ch < 3; ++ch) s.image.at(r, c, ch) = v;
      }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace textseg
