#include "textseg/retrieval.hpp"

#include <cmath>
#include <stdexcept>

#include "textseg/rng.hpp"

namespace textseg {

TopKAccuracy retrieval_topk(const EmbeddingBatch& batch, int k) {
  if (!batch.normalized) throw std::invalid_argument("retrieval: batch must be normalized");
  const int b = batch.batch_size();
  if (k < 1 || k >= b) throw std::invalid_argument("retrieval: need 1 <= k < batch size");
  const Eigen::MatrixXd s = batch.image_embeddings * batch.text_embeddings.transpose();

  int hits_i2t = 0, hits_t2i = 0;
  for (int i = 0; i < b; ++i) {
    int above_row = 0, above_col = 0;
    for (int j = 0; j < b; ++j) {
      if (j == i) continue;
      above_row += s(i, j) > s(i, i);
      above_col += s(j, i) > s(i, i);
    }
    hits_i2t += above_row < k;
    hits_t2i += above_col < k;
  }
  return {double(hits_i2t) / b, double(hits_t2i) / b};
}

namespace {

void mean_std(const std::vector<double>& xs, double& mean, double& std_out) {
  mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  std_out = xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0;
}

}  // namespace

RetrievalReport retrieval_protocol(const Encoder& enc, const PairCorpus& pairs, int runs,
                                   int batch_size, std::uint64_t seed) {
  if (runs < 1) throw std::invalid_argument("retrieval: runs must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("retrieval: batch_size must be >= 2");
  const int n = static_cast<int>(pairs.size());
  if (n < batch_size)
    throw std::invalid_argument("retrieval: fewer pairs than one batch");

  std::vector<double> top1_i2t, top2_i2t, top1_t2i, top2_t2i;
  for (int run = 0; run < runs; ++run) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seed(seed, 0x72657472ULL + run));
    rng.shuffle(order);

    double h1_i = 0, h2_i = 0, h1_t = 0, h2_t = 0;
    int batches = 0;
    for (int start = 0; start + batch_size <= n; start += batch_size) {
      std::vector<const ImageTensor*> images;
      std::vector<const TextPrompt*> prompts;
      for (int i = start; i < start + batch_size; ++i) {
        images.push_back(&pairs.images[order[i]]);
        prompts.push_back(&pairs.prompts[order[i]]);
      }
      const EmbeddingBatch batch = encode_batch(enc, images, prompts);
      const TopKAccuracy t1 = retrieval_topk(batch, 1);
      const TopKAccuracy t2 = retrieval_topk(batch, 2);
      h1_i += t1.image_to_text;
      h2_i += t2.image_to_text;
      h1_t += t1.text_to_image;
      h2_t += t2.text_to_image;
      ++batches;
    }
    top1_i2t.push_back(100.0 * h1_i / batches);
    top2_i2t.push_back(100.0 * h2_i / batches);
    top1_t2i.push_back(100.0 * h1_t / batches);
    top2_t2i.push_back(100.0 * h2_t / batches);
  }

  RetrievalReport report;
  report.runs = runs;
  report.batch_size = batch_size;
  report.seed = seed;
  mean_std(top1_i2t, report.image_to_text.top1_mean, report.image_to_text.top1_std);
  mean_std(top2_i2t, report.image_to_text.top2_mean, report.image_to_text.top2_std);
  mean_std(top1_t2i, report.text_to_image.top1_mean, report.text_to_image.top1_std);
  mean_std(top2_t2i, report.text_to_image.top2_mean, report.text_to_image.top2_std);
  return report;
}

}  // namespace textseg
