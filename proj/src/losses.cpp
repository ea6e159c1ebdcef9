#include "textseg/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "textseg/errors.hpp"

namespace textseg {

std::string to_string(LossVariant v) {
  switch (v) {
    case LossVariant::kInfoNce: return "infonce";
    case LossVariant::kDcl: return "dcl";
    case LossVariant::kHnNce: return "hn_nce";
    case LossVariant::kDhnNce: return "dhn_nce";
  }
  return "dhn_nce";
}

LossVariant loss_variant_from_string(const std::string& s) {
  if (s == "infonce") return LossVariant::kInfoNce;
  if (s == "dcl") return LossVariant::kDcl;
  if (s == "hn_nce") return LossVariant::kHnNce;
  if (s == "dhn_nce") return LossVariant::kDhnNce;
  throw ConfigError("unknown loss variant: " + s);
}

std::string to_string(LossReduce r) {
  return r == LossReduce::kSum ? "sum" : "mean";
}

LossReduce loss_reduce_from_string(const std::string& s) {
  if (s == "sum") return LossReduce::kSum;
  if (s == "mean") return LossReduce::kMean;
  throw ConfigError("unknown loss reduction: " + s);
}

void LossConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("loss: temperature must be positive");
  if (beta1 < 0.0 || beta2 < 0.0) throw ConfigError("loss: hardness betas must be >= 0");
}

namespace {

void check_batch(const EmbeddingBatch& batch) {
  if (batch.batch_size() < 2)
    throw std::invalid_argument("need at least one negative");
  if (!batch.normalized)
    throw std::invalid_argument("embedding batch must be normalized");
  if (batch.text_embeddings.rows() != batch.image_embeddings.rows() ||
      batch.text_embeddings.cols() != batch.image_embeddings.cols())
    throw std::invalid_argument("embedding batch shape mismatch");
  if (!batch.image_embeddings.allFinite() || !batch.text_embeddings.allFinite())
    throw NumericError("non-finite embeddings");
}

// Log-sum-exp over row entries excluding index `skip` (skip < 0 keeps all).
double lse_row(const Eigen::VectorXd& row, double scale, int skip) {
  double m = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < row.size(); ++j)
    if (j != skip) m = std::max(m, scale * row(j));
  double sum = 0.0;
  for (int j = 0; j < row.size(); ++j)
    if (j != skip) sum += std::exp(scale * row(j) - m);
  return m + std::log(sum);
}

// Softmax over row entries excluding `skip` (skip < 0 keeps all).
Eigen::VectorXd softmax_row(const Eigen::VectorXd& row, double scale, int skip) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(row.size());
  double m = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < row.size(); ++j)
    if (j != skip) m = std::max(m, scale * row(j));
  double sum = 0.0;
  for (int j = 0; j < row.size(); ++j)
    if (j != skip) {
      out(j) = std::exp(scale * row(j) - m);
      sum += out(j);
    }
  for (int j = 0; j < row.size(); ++j)
    if (j != skip) out(j) /= sum;
  return out;
}

// Per-direction loss and (optionally) d(loss)/d(similarity) for one anchor
// row. `sims` holds the anchor's similarities to all B candidates; the
// positive sits at `pos`.
double anchor_loss(const Eigen::VectorXd& sims, int pos, double tau, double beta,
                   LossVariant variant, Eigen::VectorXd* grad) {
  const int b = static_cast<int>(sims.size());
  const double inv_tau = 1.0 / tau;
  double loss = 0.0;

  switch (variant) {
    case LossVariant::kInfoNce: {
      const double lse = lse_row(sims, inv_tau, -1);
      loss = -sims(pos) * inv_tau + lse;
      if (grad) {
        *grad = softmax_row(sims, inv_tau, -1) * inv_tau;
        (*grad)(pos) -= inv_tau;
      }
      break;
    }
    case LossVariant::kDcl: {
      const double lse = lse_row(sims, inv_tau, pos);
      loss = -sims(pos) * inv_tau + lse;
      if (grad) {
        *grad = softmax_row(sims, inv_tau, pos) * inv_tau;
        (*grad)(pos) = -inv_tau;
      }
      break;
    }
    case LossVariant::kDhnNce: {
      // sum_j exp(s_j/tau) W_j == (B-1) exp(lse_hi - lse_lo) with
      // lse_hi over (1+beta)/tau and lse_lo over beta/tau, negatives only.
      const double lse_hi = lse_row(sims, (1.0 + beta) * inv_tau, pos);
      const double lse_lo = lse_row(sims, beta * inv_tau, pos);
      loss = -sims(pos) * inv_tau + std::log(double(b - 1)) + lse_hi - lse_lo;
      if (grad) {
        const Eigen::VectorXd hi = softmax_row(sims, (1.0 + beta) * inv_tau, pos);
        const Eigen::VectorXd lo = softmax_row(sims, beta * inv_tau, pos);
        *grad = ((1.0 + beta) * hi - beta * lo) * inv_tau;
        (*grad)(pos) = -inv_tau;
      }
      break;
    }
    case LossVariant::kHnNce: {
      // Same weighted negatives, positive kept in the denominator.
      const double lse_hi = lse_row(sims, (1.0 + beta) * inv_tau, pos);
      const double lse_lo = lse_row(sims, beta * inv_tau, pos);
      const double a = sims(pos) * inv_tau;
      const double neg_log = std::log(double(b - 1)) + lse_hi - lse_lo;
      const double m = std::max(a, neg_log);
      const double denom_log = m + std::log(std::exp(a - m) + std::exp(neg_log - m));
      loss = -a + denom_log;
      if (grad) {
        const double w_pos = std::exp(a - denom_log);
        const double w_neg = std::exp(neg_log - denom_log);
        const Eigen::VectorXd hi = softmax_row(sims, (1.0 + beta) * inv_tau, pos);
        const Eigen::VectorXd lo = softmax_row(sims, beta * inv_tau, pos);
        *grad = w_neg * ((1.0 + beta) * hi - beta * lo) * inv_tau;
        (*grad)(pos) = (w_pos - 1.0) * inv_tau;
      }
      break;
    }
  }
  return loss;
}

}  // namespace

Eigen::MatrixXd similarity_matrix(const EmbeddingBatch& batch) {
  check_batch(batch);
  return batch.image_embeddings * batch.text_embeddings.transpose();
}

Eigen::VectorXd hardness_weights(const Eigen::VectorXd& negative_sims, double beta,
                                 double tau) {
  const int m = static_cast<int>(negative_sims.size());
  if (m < 1) throw std::invalid_argument("hardness_weights: no negatives");
  if (!(tau > 0.0) || beta < 0.0) throw std::invalid_argument("hardness_weights: bad config");

  const double scale = beta / tau;
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) mx = std::max(mx, scale * negative_sims(j));
  Eigen::VectorXd w(m);
  double total = 0.0;
  for (int j = 0; j < m; ++j) {
    w(j) = std::exp(scale * negative_sims(j) - mx);
    total += w(j);
  }
  w *= double(m) / total;

  // Nudge the last weight so the left-to-right sum hits m exactly; touching
  // only the tail keeps the prefix rounding fixed, so this converges.
  for (int pass = 0; pass < 8; ++pass) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) sum += w(j);
    const double diff = double(m) - sum;
    if (diff == 0.0) break;
    if (w(m - 1) + diff > 0.0) w(m - 1) += diff;
  }
  return w;
}

LossTerms loss_value(const EmbeddingBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  check_batch(batch);
  const Eigen::MatrixXd s = batch.image_embeddings * batch.text_embeddings.transpose();
  const int b = static_cast<int>(s.rows());

  LossTerms terms;
  for (int i = 0; i < b; ++i) {
    terms.image_to_text +=
        anchor_loss(s.row(i).transpose(), i, cfg.temperature, cfg.beta1, cfg.variant, nullptr);
    terms.text_to_image +=
        anchor_loss(s.col(i), i, cfg.temperature, cfg.beta2, cfg.variant, nullptr);
  }
  if (cfg.reduce == LossReduce::kMean) {
    terms.image_to_text /= b;
    terms.text_to_image /= b;
  }
  terms.total = terms.image_to_text + terms.text_to_image;
  if (!std::isfinite(terms.total)) throw NumericError("loss is non-finite");
  return terms;
}

LossGradient loss_gradient(const EmbeddingBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  check_batch(batch);
  const Eigen::MatrixXd s = batch.image_embeddings * batch.text_embeddings.transpose();
  const int b = static_cast<int>(s.rows());

  // g1(i, j) = dL_i^{v->t} / ds(i, j); g2(i, j) = dL_i^{t->v} / ds(j, i).
  Eigen::MatrixXd g1(b, b), g2(b, b);
  LossGradient out;
  Eigen::VectorXd grad_row(b);
  for (int i = 0; i < b; ++i) {
    out.value.image_to_text +=
        anchor_loss(s.row(i).transpose(), i, cfg.temperature, cfg.beta1, cfg.variant, &grad_row);
    g1.row(i) = grad_row.transpose();
    out.value.text_to_image +=
        anchor_loss(s.col(i), i, cfg.temperature, cfg.beta2, cfg.variant, &grad_row);
    g2.row(i) = grad_row.transpose();
  }

  out.d_image = g1 * batch.text_embeddings + g2.transpose() * batch.text_embeddings;
  out.d_text = g1.transpose() * batch.image_embeddings + g2 * batch.image_embeddings;

  if (cfg.reduce == LossReduce::kMean) {
    out.value.image_to_text /= b;
    out.value.text_to_image /= b;
    out.d_image /= b;
    out.d_text /= b;
  }
  out.value.total = out.value.image_to_text + out.value.text_to_image;
  if (!std::isfinite(out.value.total) || !out.d_image.allFinite() || !out.d_text.allFinite())
    throw NumericError("loss gradient is non-finite");
  return out;
}

}  // namespace textseg
