#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "textseg/encoder.hpp"
#include "textseg/grid.hpp"

namespace textseg {

/// Text-conditioned per-pixel relevance map, values in [0, 1].
struct SaliencyMap {
  RealMap values;
  std::string prompt_id;
  double gamma = 0.1;
  int steps = 10;
  std::uint64_t seed = 0;
};

struct BottleneckConfig {
  double gamma = 0.1;       // relevance/compression trade-off
  int steps = 10;
  double step_size = 1.0;   // logit movement per step (normalized ascent)
  int noise_samples = 10;
  std::uint64_t seed = 0;
  /// Test hook: freeze the noise ensemble and only accept steps that do not
  /// decrease the objective (backtracking halving).
  bool monotone_line_search = false;

  void validate() const;
};

/// Optimizes a per-patch bottleneck mask: patches are blended with Gaussian
/// noise fitted to the patch statistics, the masked pooled embedding is
/// scored against the text embedding (relevance) and penalized by the
/// analytic KL to the noise prior (compression, weighted by gamma). The
/// optimized patch mask is bilinearly upsampled to the image size.
///
/// Deterministic given (encoder, image, text, cfg). `objective_trace`, when
/// given, receives one objective value per step.
SaliencyMap compute_saliency(const Encoder& enc, const ImageTensor& image,
                             const Eigen::VectorXd& text_embedding,
                             const BottleneckConfig& cfg,
                             const std::string& prompt_id = "",
                             std::vector<double>* objective_trace = nullptr);

/// Bilinear upsampling of a patch-grid mask to pixel space; range-preserving.
RealMap saliency_to_image_space(const RealMap& patch_mask, int height, int width);

}  // namespace textseg
