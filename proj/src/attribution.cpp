#include "textseg/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "textseg/errors.hpp"
#include "textseg/rng.hpp"

namespace textseg {

namespace {

// Cosine relevance is divided by this temperature before it meets the
// compression term; fixed so the default gamma range localizes.
constexpr double kRelevanceTemperature = 0.4;
// Gain applied to the objective gradient before the per-step clip.
constexpr double kGradientGain = 1600.0;
constexpr double kMomentum = 0.9;
constexpr double kMinSigma = 1e-6;
constexpr double kInitLogit = 5.0;  // lambda ~ 0.993, "keep everything"

struct Workspace {
  Eigen::MatrixXd patches;       // P x d
  Eigen::VectorXd noise_mean;    // d
  Eigen::VectorXd noise_sigma;   // d
  Eigen::VectorXd quad_coeff;    // P, mean_d ((E - mu) / sigma)^2
  Eigen::VectorXd text;          // d
  int pixels_h = 0, pixels_w = 0;
};

Eigen::VectorXd sigmoid(const Eigen::VectorXd& logits) {
  return logits.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

// Relevance = mean over noise draws of cos(pool(Z), text) / T and its
// gradient w.r.t. lambda. Z blends patches with noise per patch.
double relevance(const Workspace& ws, const Eigen::VectorXd& lambda,
                 const std::vector<Eigen::MatrixXd>& noise, Eigen::VectorXd* grad) {
  const int patches = static_cast<int>(ws.patches.rows());
  if (grad) grad->setZero(patches);
  double total = 0.0;
  for (const Eigen::MatrixXd& eps : noise) {
    const Eigen::MatrixXd z = lambda.asDiagonal() * ws.patches +
                              (Eigen::VectorXd::Ones(patches) - lambda).asDiagonal() * eps;
    const Eigen::VectorXd pool = z.colwise().mean().transpose();
    const double norm = std::max(pool.norm(), 1e-12);
    const Eigen::VectorXd unit = pool / norm;
    total += unit.dot(ws.text) / kRelevanceTemperature;
    if (grad) {
      const Eigen::VectorXd back = (ws.text - unit * unit.dot(ws.text)) /
                                   (patches * norm * kRelevanceTemperature);
      *grad += (ws.patches - eps) * back;
    }
  }
  const double inv = 1.0 / static_cast<double>(noise.size());
  if (grad) *grad *= inv;
  return total * inv;
}

// Mean per-patch KL of the blended representation to the noise prior.
double compression(const Workspace& ws, const Eigen::VectorXd& logits,
                   const Eigen::VectorXd& lambda, Eigen::VectorXd* grad) {
  const int patches = static_cast<int>(lambda.size());
  double total = 0.0;
  if (grad) grad->resize(patches);
  for (int p = 0; p < patches; ++p) {
    const double lam = lambda(p);
    const double keep = 1.0 - lam;
    // -log(1 - lambda) == softplus(logit), stable for large logits.
    const double softplus = logits(p) > 30.0
                                ? logits(p)
                                : std::log1p(std::exp(logits(p)));
    total += softplus + 0.5 * (keep * keep + lam * lam * ws.quad_coeff(p)) - 0.5;
    if (grad) (*grad)(p) = (1.0 / keep - keep + lam * ws.quad_coeff(p)) / patches;
  }
  return total / patches;
}

std::vector<Eigen::MatrixXd> draw_noise(const Workspace& ws, int samples, Rng& rng) {
  const int patches = static_cast<int>(ws.patches.rows());
  const int dim = static_cast<int>(ws.patches.cols());
  std::vector<Eigen::MatrixXd> out;
  out.reserve(samples);
  for (int s = 0; s < samples; ++s) {
    Eigen::MatrixXd eps(patches, dim);
    for (int p = 0; p < patches; ++p)
      for (int j = 0; j < dim; ++j)
        eps(p, j) = ws.noise_mean(j) + ws.noise_sigma(j) * rng.normal();
    out.push_back(std::move(eps));
  }
  return out;
}

double objective(const Workspace& ws, const Eigen::VectorXd& logits, double gamma,
                 const std::vector<Eigen::MatrixXd>& noise, Eigen::VectorXd* grad_logits) {
  const Eigen::VectorXd lambda = sigmoid(logits);
  Eigen::VectorXd g_rel, g_comp;
  const double rel = relevance(ws, lambda, noise, grad_logits ? &g_rel : nullptr);
  const double comp = compression(ws, logits, lambda, grad_logits ? &g_comp : nullptr);
  if (grad_logits) {
    const Eigen::VectorXd slope = lambda.array() * (1.0 - lambda.array());
    *grad_logits = (g_rel - gamma * g_comp).cwiseProduct(slope);
  }
  return rel - gamma * comp;
}

}  // namespace

void BottleneckConfig::validate() const {
  if (gamma < 0.0) throw ConfigError("bottleneck: gamma must be >= 0");
  if (steps < 1) throw ConfigError("bottleneck: steps must be >= 1");
  if (!(step_size > 0.0)) throw ConfigError("bottleneck: step_size must be positive");
  if (noise_samples < 1) throw ConfigError("bottleneck: noise_samples must be >= 1");
}

RealMap saliency_to_image_space(const RealMap& patch_mask, int height, int width) {
  if (patch_mask.rows() < 1 || patch_mask.cols() < 1)
    throw std::invalid_argument("saliency_to_image_space: empty patch mask");
  RealMap up = bilinear_resize(patch_mask, height, width);
  for (double& v : up.data()) v = std::clamp(v, 0.0, 1.0);
  return up;
}

SaliencyMap compute_saliency(const Encoder& enc, const ImageTensor& image,
                             const Eigen::VectorXd& text_embedding,
                             const BottleneckConfig& cfg, const std::string& prompt_id,
                             std::vector<double>* objective_trace) {
  cfg.validate();
  const auto [grid_rows, grid_cols] = enc.patch_grid();
  if (grid_rows < 1 || grid_cols < 1)
    throw std::runtime_error("attribution requires patch-level features");
  if (text_embedding.size() != enc.dim())
    throw std::invalid_argument("compute_saliency: text embedding dimension mismatch");

  Workspace ws;
  ws.patches = enc.patch_embeddings(image);
  if (ws.patches.rows() != grid_rows * grid_cols)
    throw std::runtime_error("attribution: patch count does not match the grid");
  ws.text = text_embedding;
  ws.pixels_h = image.height;
  ws.pixels_w = image.width;

  const int patches = static_cast<int>(ws.patches.rows());
  ws.noise_mean = ws.patches.colwise().mean().transpose();
  Eigen::VectorXd var = (ws.patches.rowwise() - ws.noise_mean.transpose())
                            .array()
                            .square()
                            .colwise()
                            .mean()
                            .transpose();
  ws.noise_sigma = var.array().sqrt().max(kMinSigma);
  ws.quad_coeff.resize(patches);
  for (int p = 0; p < patches; ++p) {
    const Eigen::ArrayXd delta =
        (ws.patches.row(p).transpose() - ws.noise_mean).array() / ws.noise_sigma.array();
    ws.quad_coeff(p) = delta.square().mean();
  }

  Rng rng(mix_seed(cfg.seed, 0x6d326962ULL));
  Eigen::VectorXd logits = Eigen::VectorXd::Constant(patches, kInitLogit);
  Eigen::VectorXd momentum = Eigen::VectorXd::Zero(patches);

  std::vector<Eigen::MatrixXd> frozen_noise;
  if (cfg.monotone_line_search) frozen_noise = draw_noise(ws, cfg.noise_samples, rng);

  for (int step = 0; step < cfg.steps; ++step) {
    const std::vector<Eigen::MatrixXd>& noise =
        cfg.monotone_line_search ? frozen_noise : draw_noise(ws, cfg.noise_samples, rng);

    Eigen::VectorXd grad;
    const double before = objective(ws, logits, cfg.gamma, noise, &grad);
    if (!std::isfinite(before)) throw NumericError("bottleneck objective is non-finite");
    // Momentum smooths the per-step sampling jitter; the persistent parts of
    // the gradient accumulate. Bias-corrected, then clipped to one unit of
    // logit movement per step (step_size sets the actual travel).
    momentum = kMomentum * momentum + (1.0 - kMomentum) * grad;
    const Eigen::VectorXd smoothed =
        momentum / (1.0 - std::pow(kMomentum, step + 1));
    const Eigen::VectorXd direction =
        (kGradientGain * smoothed).cwiseMax(-1.0).cwiseMin(1.0);

    if (cfg.monotone_line_search) {
      double scale = cfg.step_size;
      double accepted = before;
      Eigen::VectorXd accepted_logits = logits;
      for (int half = 0; half < 12; ++half) {
        const Eigen::VectorXd candidate = logits + scale * direction;
        const double value = objective(ws, candidate, cfg.gamma, noise, nullptr);
        if (value >= accepted) {
          accepted = value;
          accepted_logits = candidate;
          break;
        }
        scale *= 0.5;
      }
      logits = accepted_logits;
      if (objective_trace) objective_trace->push_back(accepted);
    } else {
      logits += cfg.step_size * direction;
      if (objective_trace) objective_trace->push_back(before);
    }
  }

  const Eigen::VectorXd lambda = sigmoid(logits);
  RealMap patch_mask(grid_rows, grid_cols);
  for (int r = 0; r < grid_rows; ++r)
    for (int c = 0; c < grid_cols; ++c) patch_mask(r, c) = lambda(r * grid_cols + c);

  SaliencyMap map;
  map.values = saliency_to_image_space(patch_mask, ws.pixels_h, ws.pixels_w);
  map.prompt_id = prompt_id;
  map.gamma = cfg.gamma;
  map.steps = cfg.steps;
  map.seed = cfg.seed;
  return map;
}

}  // namespace textseg
