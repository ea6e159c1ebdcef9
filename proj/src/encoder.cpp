#include "textseg/encoder.hpp"

#include <stdexcept>

namespace textseg {

namespace {

Eigen::VectorXd unit(const Eigen::VectorXd& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw std::runtime_error("encoder produced a zero or non-finite embedding");
  return v / n;
}

}  // namespace

EmbeddingBatch encode_batch(const Encoder& enc,
                            const std::vector<const ImageTensor*>& images,
                            const std::vector<const TextPrompt*>& prompts) {
  if (images.empty() || images.size() != prompts.size())
    throw std::invalid_argument("encode_batch: need equal, nonempty image/prompt lists");
  const int d = enc.dim();
  EmbeddingBatch batch;
  batch.image_embeddings.resize(static_cast<Eigen::Index>(images.size()), d);
  batch.text_embeddings.resize(static_cast<Eigen::Index>(images.size()), d);
  for (size_t i = 0; i < images.size(); ++i) {
    Eigen::VectorXd iv = enc.image_embedding(*images[i]);
    Eigen::VectorXd tv = enc.text_embedding(*prompts[i]);
    if (iv.size() != d || tv.size() != d)
      throw std::runtime_error("encode_batch: encoder dimension mismatch");
    batch.image_embeddings.row(static_cast<Eigen::Index>(i)) = unit(iv).transpose();
    batch.text_embeddings.row(static_cast<Eigen::Index>(i)) = unit(tv).transpose();
  }
  batch.normalized = true;
  return batch;
}

EmbeddingBatch encode_batch(const Encoder& enc,
                            const std::vector<ImageTensor>& images,
                            const std::vector<TextPrompt>& prompts) {
  std::vector<const ImageTensor*> ip;
  std::vector<const TextPrompt*> tp;
  ip.reserve(images.size());
  tp.reserve(prompts.size());
  for (const auto& im : images) ip.push_back(&im);
  for (const auto& pr : prompts) tp.push_back(&pr);
  return encode_batch(enc, ip, tp);
}

Eigen::VectorXd ensemble_prompt_embedding(const Encoder& enc,
                                          const std::vector<TextPrompt>& prompts) {
  if (prompts.empty())
    throw std::invalid_argument("ensemble_prompt_embedding: empty prompt list");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(enc.dim());
  for (const auto& p : prompts) mean += unit(enc.text_embedding(p));
  mean /= static_cast<double>(prompts.size());
  return unit(mean);
}

}  // namespace textseg
