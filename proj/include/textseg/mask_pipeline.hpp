#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "textseg/attribution.hpp"
#include "textseg/encoder.hpp"
#include "textseg/grid.hpp"

namespace textseg {

/// Min-max normalization to [0, 1]. Constant maps normalize to all zeros and
/// report `degenerate`.
RealMap minmax_normalize(const RealMap& values, bool* degenerate = nullptr);

struct OtsuResult {
  BinaryMask mask;
  double eta_star = 0.0;   // threshold in normalized units; foreground is >= eta_star
  bool degenerate = false;  // constant input, mask forced all-foreground
};

/// 256-bin Otsu threshold over the min-max normalized map, minimizing
/// intra-class variance (lowest bin wins ties).
OtsuResult otsu_binarize(const RealMap& saliency);
OtsuResult otsu_binarize(const SaliencyMap& saliency);

struct ComponentSet {
  LabelMap labels;                  // 0 = background, components 1..count
  int count = 0;
  double eta_star = 0.0;
  std::vector<double> confidences;  // index id-1; empty until scored
  std::vector<int> kept_ids;        // ascending; empty until filtered
  bool fallback = false;            // all confidences below threshold, argmax kept
};

/// 8-connectivity labeling; ids are contiguous from 1 in raster order of each
/// component's first pixel.
ComponentSet connected_components(const BinaryMask& mask);

/// Drops components smaller than `min_size` pixels and relabels contiguously.
ComponentSet drop_small_components(ComponentSet comps, int min_size);

/// Confidence per component: mean min-max-normalized saliency over its pixels.
ComponentSet score_components(ComponentSet comps, const RealMap& saliency);

/// Keeps components with confidence > eta_c; if none qualify and components
/// exist, keeps the single most confident one and sets `fallback`.
ComponentSet filter_components(ComponentSet comps, double eta_c);

/// Union of the kept components as a binary mask.
BinaryMask kept_mask(const ComponentSet& comps);

enum class PromptMode { kBoxes, kPoints, kBoxesAndPoints };
std::string to_string(PromptMode mode);
PromptMode prompt_mode_from_string(const std::string& s);

struct PromptBox {
  int row_min = 0, col_min = 0, row_max = 0, col_max = 0;  // inclusive
};

struct VisualPromptSet {
  std::vector<PromptBox> boxes;
  std::vector<std::pair<int, int>> points;  // (row, col), foreground label
  PromptMode mode = PromptMode::kBoxes;
};

/// One tight box per kept component (expanded by box_margin, clipped to the
/// canvas) and/or `points_per_component` pixels sampled uniformly without
/// replacement inside each component.
VisualPromptSet extract_prompts(const ComponentSet& comps, PromptMode mode,
                                int points_per_component, std::uint64_t seed,
                                int box_margin);

/// Prompt-driven mask refiner (external segmenter adapter surface).
class Refiner {
 public:
  virtual ~Refiner() = default;
  virtual std::string name() const = 0;
  virtual BinaryMask refine(const ImageTensor& image, const VisualPromptSet& prompts,
                            const BinaryMask& coarse) const = 0;
};

using RefinerHandle = std::shared_ptr<const Refiner>;

/// Deterministic stand-in for an external promptable segmenter: box mode
/// clips the coarse mask to the box union; point mode returns the coarse
/// components containing the points; combined mode is the union of both.
RefinerHandle make_mock_refiner();

struct PipelineConfig {
  double eta_c = 0.5;            // component confidence threshold
  int min_component_size = 1;    // pixels
  PromptMode mode = PromptMode::kBoxes;
  int points_per_component = 3;
  int box_margin = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ZeroShotResult {
  BinaryMask mask;           // refined zero-shot segmentation
  BinaryMask coarse;         // kept components before refinement
  ComponentSet components;
  SaliencyMap saliency;
  VisualPromptSet prompts;
  bool degenerate_saliency = false;
};

/// Full chain: saliency -> Otsu -> components -> confidence filter -> visual
/// prompts -> refiner. Stage failures are rethrown with a stage tag.
ZeroShotResult zero_shot_segment(const ImageTensor& image, const Encoder& enc,
                                 const Eigen::VectorXd& text_embedding,
                                 const BottleneckConfig& bottleneck,
                                 const PipelineConfig& pipeline, const Refiner& refiner,
                                 const std::string& prompt_id = "");

}  // namespace textseg
