#pragma once

#include <string>

#include <Eigen/Core>

#include "textseg/encoder.hpp"

namespace textseg {

enum class LossVariant { kInfoNce, kDcl, kHnNce, kDhnNce };
enum class LossReduce { kSum, kMean };

std::string to_string(LossVariant v);
LossVariant loss_variant_from_string(const std::string& s);
std::string to_string(LossReduce r);
LossReduce loss_reduce_from_string(const std::string& s);

struct LossConfig {
  double temperature = 0.6;
  double beta1 = 0.15;  // image -> text hardness
  double beta2 = 0.15;  // text -> image hardness
  LossVariant variant = LossVariant::kDhnNce;
  LossReduce reduce = LossReduce::kMean;

  void validate() const;
};

/// S(i, j) = image row i . text row j.
Eigen::MatrixXd similarity_matrix(const EmbeddingBatch& batch);

/// Hardness weights over one anchor's negatives: W_j proportional to
/// exp(beta * s_j / tau), scaled so the weights sum to B-1 (= input length)
/// exactly.
Eigen::VectorXd hardness_weights(const Eigen::VectorXd& negative_sims, double beta,
                                 double tau);

struct LossTerms {
  double total = 0.0;
  double image_to_text = 0.0;
  double text_to_image = 0.0;
};

LossTerms loss_value(const EmbeddingBatch& batch, const LossConfig& cfg);

struct LossGradient {
  LossTerms value;
  Eigen::MatrixXd d_image;  // B x d, d(loss)/d(image embeddings)
  Eigen::MatrixXd d_text;   // B x d
};

/// Analytic gradient of the selected variant w.r.t. both embedding matrices,
/// including the dependence of the hardness weights on the similarities.
LossGradient loss_gradient(const EmbeddingBatch& batch, const LossConfig& cfg);

}  // namespace textseg
