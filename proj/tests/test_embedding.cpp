#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "textseg/encoder.hpp"
#include "textseg/image.hpp"
#include "textseg/rng.hpp"
#include "textseg/synthetic_encoder.hpp"
#include "textseg/text.hpp"
#include "textseg/toy_data.hpp"

using namespace textseg;

namespace {

ImageTensor constant_image(int h, int w, double v) {
  ImageTensor img(h, w, 3);
  for (auto& p : img.pixels) p = v;
  return img;
}

ImageTensor noise_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  ImageTensor img(h, w, 3);
  for (auto& p : img.pixels) p = rng.uniform();
  return img;
}

}  // namespace

TEST_CASE("preprocess: constant image standardizes per channel") {
  const ImageTensor out = preprocess_image(constant_image(64, 64, 0.5), 224);
  CHECK(out.height == 224);
  CHECK(out.width == 224);
  for (int ch = 0; ch < 3; ++ch) {
    const double expected = (0.5 - kChannelMean[ch]) / kChannelStd[ch];
    CHECK(out.at(100, 37, ch) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("preprocess: exact 2x downscale preserves constant blocks") {
  // 448x448 built from 2x2 constant blocks -> each 224 output pixel equals its block.
  ImageTensor src(448, 448, 3);
  Rng rng(3);
  std::vector<double> blocks(224 * 224);
  for (auto& b : blocks) b = rng.uniform();
  for (int r = 0; r < 448; ++r)
    for (int c = 0; c < 448; ++c)
      for (int ch = 0; ch < 3; ++ch) src.at(r, c, ch) = blocks[(r / 2) * 224 + (c / 2)];
  const ImageTensor out = preprocess_image(src, 224);
  for (int i : {0, 1000, 20011, 224 * 224 - 1}) {
    const int r = i / 224, c = i % 224;
    const double expected = (blocks[i] - kChannelMean[0]) / kChannelStd[0];
    CHECK(out.at(r, c, 0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("preprocess: channel mismatch and determinism") {
  ImageTensor gray(8, 8, 1, 0.5);
  CHECK_THROWS_WITH_AS(preprocess_image(gray, 224), "channel mismatch",
                       std::invalid_argument);

  const ImageTensor img = noise_image(50, 37, 5);
  const ImageTensor a = preprocess_image(img, 32);
  const ImageTensor b = preprocess_image(img, 32);
  CHECK(a.pixels == b.pixels);
}

TEST_CASE("clean_caption filters and is idempotent") {
  CHECK_FALSE(clean_caption("  Chest X-ray!!  ").has_value());
  const auto kept = clean_caption("Axial CT of the thorax showing fibrosis.");
  REQUIRE(kept.has_value());
  CHECK(*kept == "Axial CT of the thorax showing fibrosis.");

  // Exactly 19 characters fails the boundary; 20 passes.
  CHECK_FALSE(clean_caption("abcdefghijklmnopqrs").has_value());
  CHECK(clean_caption("abcdefghijklmnopqrst").has_value());

  const auto once = clean_caption("A scan with @@special## characters removed here");
  REQUIRE(once.has_value());
  const auto twice = clean_caption(*once);
  REQUIRE(twice.has_value());
  CHECK(*once == *twice);
}

TEST_CASE("encode_batch: unit rows, determinism, batch of 50") {
  const auto enc = make_synthetic_encoder(42, 16);
  std::vector<ImageTensor> images;
  std::vector<TextPrompt> prompts;
  for (int i = 0; i < 50; ++i) {
    images.push_back(noise_image(16, 16, 100 + i));
    prompts.push_back({"sample caption number " + std::to_string(i), "", "P0"});
  }

  const EmbeddingBatch batch = encode_batch(*enc, images, prompts);
  CHECK(batch.batch_size() == 50);
  CHECK(batch.dim() == 16);
  CHECK(batch.normalized);
  for (int r = 0; r < 50; ++r) {
    CHECK(std::abs(batch.image_embeddings.row(r).norm() - 1.0) < 1e-6);
    CHECK(std::abs(batch.text_embeddings.row(r).norm() - 1.0) < 1e-6);
  }

  const EmbeddingBatch again = encode_batch(*enc, images, prompts);
  CHECK(batch.image_embeddings == again.image_embeddings);
  CHECK(batch.text_embeddings == again.text_embeddings);

  const EmbeddingBatch single = encode_batch(
      *enc, std::vector<ImageTensor>{images[0]}, std::vector<TextPrompt>{prompts[0]});
  CHECK(single.batch_size() == 1);

  CHECK_THROWS(encode_batch(*enc, std::vector<ImageTensor>{}, std::vector<TextPrompt>{}));
}

TEST_CASE("ensemble_prompt_embedding: mean then renormalize") {
  const auto enc = make_synthetic_encoder(7, 16);
  const TextPrompt p{"an example prompt", "", "P4"};

  const Eigen::VectorXd one = ensemble_prompt_embedding(*enc, {p});
  const Eigen::VectorXd dup = ensemble_prompt_embedding(*enc, {p, p});
  CHECK((one - dup).norm() < 1e-12);

  std::vector<TextPrompt> twenty;
  for (int i = 0; i < 20; ++i)
    twenty.push_back({"prompt variant " + std::to_string(i), "", "P4"});
  const Eigen::VectorXd ens = ensemble_prompt_embedding(*enc, twenty);
  CHECK(std::abs(ens.norm() - 1.0) < 1e-12);

  // Permutation invariance.
  std::vector<TextPrompt> shuffled(twenty.rbegin(), twenty.rend());
  CHECK((ensemble_prompt_embedding(*enc, shuffled) - ens).norm() < 1e-12);

  CHECK_THROWS(ensemble_prompt_embedding(*enc, {}));
}

TEST_CASE("orthogonal ensemble math on a stub encoder") {
  // Two orthogonal unit embeddings average to (e1+e2)/sqrt(2).
  struct StubEncoder : Encoder {
    int dim() const override { return 4; }
    std::string params_version() const override { return "stub"; }
    std::pair<int, int> patch_grid() const override { return {0, 0}; }
    Eigen::MatrixXd patch_embeddings(const ImageTensor&) const override {
      throw std::runtime_error("attribution requires patch-level features");
    }
    Eigen::VectorXd image_embedding(const ImageTensor&) const override {
      return Eigen::VectorXd::Unit(4, 0);
    }
    Eigen::VectorXd text_embedding(const TextPrompt& p) const override {
      return p.text == "a" ? Eigen::VectorXd::Unit(4, 0) : Eigen::VectorXd::Unit(4, 1);
    }
    Eigen::VectorXd pool_patches(const Eigen::MatrixXd&) const override {
      throw std::runtime_error("attribution requires patch-level features");
    }
  } stub;

  const Eigen::VectorXd v = ensemble_prompt_embedding(stub, {{"a", "", "P0"}, {"b", "", "P0"}});
  CHECK(v(0) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(v(1) == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("synthetic encoder: determinism and seed sensitivity") {
  const auto a = make_synthetic_encoder(9, 8);
  const auto b = make_synthetic_encoder(9, 8);
  const auto c = make_synthetic_encoder(10, 8);
  const ImageTensor img = noise_image(28, 28, 77);
  const TextPrompt prompt{"a probe caption", "", "P0"};

  CHECK(a->image_embedding(img) == b->image_embedding(img));
  CHECK(a->text_embedding(prompt) == b->text_embedding(prompt));
  CHECK(a->patch_embeddings(img) == b->patch_embeddings(img));
  CHECK((a->image_embedding(img) - c->image_embedding(img)).norm() > 1e-6);
}

TEST_CASE("synthetic encoder: planted region aligns text with mean patches") {
  PlantedRegion region{4, 5, 3, 3, "planted target region"};
  const auto enc = make_synthetic_encoder(21, 32, region);
  const ImageTensor img = noise_image(56, 56, 5);

  const Eigen::MatrixXd patches = enc->patch_embeddings(img);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(32);
  for (int r = region.row0; r < region.row0 + region.rows; ++r)
    for (int c = region.col0; c < region.col0 + region.cols; ++c)
      mean += patches.row(r * 14 + c).transpose();
  mean /= 9.0;

  const Eigen::VectorXd text = enc->text_embedding({region.prompt_text, "", "P0"});
  const double cosine = text.dot(mean) / mean.norm();
  CHECK(cosine == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("planted pixel mask rasterizes the patch rectangle") {
  PlantedRegion region{1, 1, 2, 3};
  const BinaryMask m = planted_pixel_mask(region, 4, 4, 16, 16);
  CHECK(mask_area(m) == size_t(2 * 3 * 4 * 4));
  CHECK(m(4, 4) == 1);   // patch (1, 1)
  CHECK(m(0, 0) == 0);
  CHECK(m(7, 15) == 1);  // patch (1, 3)
  CHECK(m(12, 8) == 0);  // patch row 3 is outside
}

TEST_CASE("two-cluster corpus is deterministic and class-tagged") {
  const PairCorpus a = make_two_cluster_corpus(10, 5);
  const PairCorpus b = make_two_cluster_corpus(10, 5);
  CHECK(a.size() == 10);
  CHECK(a.prompts[0].class_label == "alpha");
  CHECK(a.prompts[1].class_label == "beta");
  for (int i = 0; i < 10; ++i) {
    CHECK(a.images[i].pixels == b.images[i].pixels);
    CHECK(a.prompts[i].text == b.prompts[i].text);
  }
}
