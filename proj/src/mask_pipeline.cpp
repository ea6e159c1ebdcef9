#include "textseg/mask_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "textseg/errors.hpp"
#include "textseg/rng.hpp"

namespace textseg {

RealMap minmax_normalize(const RealMap& values, bool* degenerate) {
  if (values.empty()) throw std::invalid_argument("minmax_normalize: empty map");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("minmax_normalize: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  RealMap out(values.rows(), values.cols());
  if (hi == lo) {
    if (degenerate) *degenerate = true;
    return out;  // all zeros
  }
  if (degenerate) *degenerate = false;
  const double span = hi - lo;
  for (size_t i = 0; i < values.size(); ++i) out.data()[i] = (values.data()[i] - lo) / span;
  return out;
}

namespace {

constexpr int kBins = 256;

std::vector<int> histogram_256(const RealMap& normalized) {
  std::vector<int> hist(kBins, 0);
  for (double v : normalized.data())
    ++hist[std::min(kBins - 1, static_cast<int>(v * kBins))];
  return hist;
}

// Intra-class variance minimizer over bin thresholds via prefix moments.
int otsu_bin(const std::vector<int>& hist) {
  const int n = std::accumulate(hist.begin(), hist.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  int best_bin = 0;
  for (int t = 0; t < kBins; ++t) {
    long n0 = 0;
    double s0 = 0.0, s1 = 0.0;
    for (int v = 0; v < t; ++v) {
      n0 += hist[v];
      s0 += double(hist[v]) * v;
    }
    const long n1 = n - n0;
    for (int v = t; v < kBins; ++v) s1 += double(hist[v]) * v;
    const double m0 = n0 > 0 ? s0 / n0 : 0.0;
    const double m1 = n1 > 0 ? s1 / n1 : 0.0;
    double ss = 0.0;
    for (int v = 0; v < kBins; ++v) {
      if (hist[v] == 0) continue;
      const double mu = v < t ? m0 : m1;
      ss += double(hist[v]) * (v - mu) * (v - mu);
    }
    const double intra = ss / n;
    if (intra < best) {
      best = intra;
      best_bin = t;
    }
  }
  return best_bin;
}

}  // namespace

OtsuResult otsu_binarize(const RealMap& saliency) {
  bool degenerate = false;
  const RealMap normalized = minmax_normalize(saliency, &degenerate);

  OtsuResult result;
  result.mask = BinaryMask(saliency.rows(), saliency.cols(), 0);
  if (degenerate) {
    // Constant map: everything is foreground at threshold zero.
    result.degenerate = true;
    result.eta_star = 0.0;
    for (auto& v : result.mask.data()) v = 1;
    return result;
  }

  const int bin = otsu_bin(histogram_256(normalized));
  result.eta_star = double(bin) / kBins;
  for (size_t i = 0; i < normalized.size(); ++i)
    result.mask.data()[i] = normalized.data()[i] >= result.eta_star ? 1 : 0;
  return result;
}

OtsuResult otsu_binarize(const SaliencyMap& saliency) { return otsu_binarize(saliency.values); }

ComponentSet connected_components(const BinaryMask& mask) {
  const int rows = mask.rows(), cols = mask.cols();
  ComponentSet comps;
  comps.labels = LabelMap(rows, cols, 0);

  // Union-find over provisional labels.
  std::vector<int> parent{0};
  auto find = [&parent](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  auto unite = [&](int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  int next = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (mask(r, c) == 0) continue;
      int label = 0;
      // Previously visited 8-neighbors: NW, N, NE, W.
      const int neigh[4][2] = {{r - 1, c - 1}, {r - 1, c}, {r - 1, c + 1}, {r, c - 1}};
      for (const auto& [nr, nc] : neigh) {
        if (!mask.in_bounds(nr, nc) || mask(nr, nc) == 0) continue;
        const int nl = comps.labels(nr, nc);
        if (label == 0)
          label = nl;
        else
          unite(label, nl);
      }
      if (label == 0) {
        label = ++next;
        parent.push_back(label);
      }
      comps.labels(r, c) = label;
    }

  // Resolve and relabel contiguously in raster order of first appearance.
  std::vector<int> remap(next + 1, 0);
  int final_count = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (comps.labels(r, c) == 0) continue;
      const int root = find(comps.labels(r, c));
      if (remap[root] == 0) remap[root] = ++final_count;
      comps.labels(r, c) = remap[root];
    }
  comps.count = final_count;
  return comps;
}

ComponentSet drop_small_components(ComponentSet comps, int min_size) {
  if (min_size <= 1) return comps;
  std::vector<int> sizes(comps.count + 1, 0);
  for (int v : comps.labels.data()) ++sizes[v];
  std::vector<int> remap(comps.count + 1, 0);
  int kept = 0;
  for (int id = 1; id <= comps.count; ++id)
    if (sizes[id] >= min_size) remap[id] = ++kept;
  for (int& v : comps.labels.data()) v = remap[v];
  comps.count = kept;
  comps.confidences.clear();
  comps.kept_ids.clear();
  return comps;
}

ComponentSet score_components(ComponentSet comps, const RealMap& saliency) {
  if (saliency.rows() != comps.labels.rows() || saliency.cols() != comps.labels.cols())
    throw std::invalid_argument("score_components: saliency/label shape mismatch");
  const RealMap normalized = minmax_normalize(saliency);

  std::vector<double> sums(comps.count + 1, 0.0);
  std::vector<long> counts(comps.count + 1, 0);
  for (int r = 0; r < saliency.rows(); ++r)
    for (int c = 0; c < saliency.cols(); ++c) {
      const int id = comps.labels(r, c);
      if (id == 0) continue;
      sums[id] += normalized(r, c);
      ++counts[id];
    }
  comps.confidences.resize(comps.count);
  for (int id = 1; id <= comps.count; ++id)
    comps.confidences[id - 1] = counts[id] > 0 ? sums[id] / counts[id] : 0.0;
  return comps;
}

ComponentSet filter_components(ComponentSet comps, double eta_c) {
  if (static_cast<int>(comps.confidences.size()) != comps.count)
    throw std::invalid_argument("filter_components: confidences not set");
  comps.kept_ids.clear();
  comps.fallback = false;
  for (int id = 1; id <= comps.count; ++id)
    if (comps.confidences[id - 1] > eta_c) comps.kept_ids.push_back(id);

  if (comps.kept_ids.empty() && comps.count > 0) {
    int best = 1;
    for (int id = 2; id <= comps.count; ++id)
      if (comps.confidences[id - 1] > comps.confidences[best - 1]) best = id;
    comps.kept_ids.push_back(best);
    comps.fallback = true;
  }
  return comps;
}

BinaryMask kept_mask(const ComponentSet& comps) {
  BinaryMask out(comps.labels.rows(), comps.labels.cols(), 0);
  std::vector<char> keep(comps.count + 1, 0);
  for (int id : comps.kept_ids) keep[id] = 1;
  for (size_t i = 0; i < out.size(); ++i)
    out.data()[i] = keep[comps.labels.data()[i]] ? 1 : 0;
  return out;
}

std::string to_string(PromptMode mode) {
  switch (mode) {
    case PromptMode::kBoxes: return "boxes";
    case PromptMode::kPoints: return "points";
    case PromptMode::kBoxesAndPoints: return "boxes+points";
  }
  return "boxes";
}

PromptMode prompt_mode_from_string(const std::string& s) {
  if (s == "boxes") return PromptMode::kBoxes;
  if (s == "points") return PromptMode::kPoints;
  if (s == "boxes+points") return PromptMode::kBoxesAndPoints;
  throw ConfigError("unknown prompt mode: " + s);
}

VisualPromptSet extract_prompts(const ComponentSet& comps, PromptMode mode,
                                int points_per_component, std::uint64_t seed,
                                int box_margin) {
  if (comps.kept_ids.empty())
    throw std::invalid_argument("extract_prompts: no kept components");
  if (box_margin < 0) throw std::invalid_argument("extract_prompts: negative margin");

  VisualPromptSet prompts;
  prompts.mode = mode;
  const int rows = comps.labels.rows(), cols = comps.labels.cols();
  const bool want_boxes = mode != PromptMode::kPoints;
  const bool want_points = mode != PromptMode::kBoxes;

  for (int id : comps.kept_ids) {
    std::vector<std::pair<int, int>> pixels;
    PromptBox box{rows, cols, -1, -1};
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        if (comps.labels(r, c) != id) continue;
        pixels.push_back({r, c});
        box.row_min = std::min(box.row_min, r);
        box.col_min = std::min(box.col_min, c);
        box.row_max = std::max(box.row_max, r);
        box.col_max = std::max(box.col_max, c);
      }
    if (pixels.empty()) continue;

    if (want_boxes) {
      box.row_min = std::max(0, box.row_min - box_margin);
      box.col_min = std::max(0, box.col_min - box_margin);
      box.row_max = std::min(rows - 1, box.row_max + box_margin);
      box.col_max = std::min(cols - 1, box.col_max + box_margin);
      prompts.boxes.push_back(box);
    }
    if (want_points) {
      int k = points_per_component;
      if (k > static_cast<int>(pixels.size())) {
        std::cerr << "extract_prompts: component " << id << " has only "
                  << pixels.size() << " pixels, sampling all\n";
        k = static_cast<int>(pixels.size());
      }
      Rng rng(mix_seed(seed, 0x706f696eULL + id));
      for (int idx : rng.sample_indices(static_cast<int>(pixels.size()), k))
        prompts.points.push_back(pixels[idx]);
    }
  }
  return prompts;
}

namespace {

class MockRefiner final : public Refiner {
 public:
  std::string name() const override { return "mock"; }

  BinaryMask refine(const ImageTensor& image, const VisualPromptSet& prompts,
                    const BinaryMask& coarse) const override {
    if (image.height != coarse.rows() || image.width != coarse.cols())
      throw std::invalid_argument("mock refiner: image/mask shape mismatch");
    BinaryMask out(coarse.rows(), coarse.cols(), 0);

    if (prompts.mode != PromptMode::kPoints) {
      for (const PromptBox& b : prompts.boxes)
        for (int r = std::max(0, b.row_min); r <= std::min(coarse.rows() - 1, b.row_max); ++r)
          for (int c = std::max(0, b.col_min); c <= std::min(coarse.cols() - 1, b.col_max);
               ++c)
            if (coarse(r, c)) out(r, c) = 1;
    }
    if (prompts.mode != PromptMode::kBoxes && !prompts.points.empty()) {
      const ComponentSet comps = connected_components(coarse);
      std::vector<char> keep(comps.count + 1, 0);
      for (const auto& [r, c] : prompts.points)
        if (comps.labels.in_bounds(r, c)) keep[comps.labels(r, c)] = 1;
      keep[0] = 0;
      for (size_t i = 0; i < out.size(); ++i)
        if (keep[comps.labels.data()[i]]) out.data()[i] = 1;
    }
    return out;
  }
};

}  // namespace

RefinerHandle make_mock_refiner() { return std::make_shared<MockRefiner>(); }

void PipelineConfig::validate() const {
  if (min_component_size < 1) throw ConfigError("pipeline: min_component_size must be >= 1");
  if (points_per_component < 1)
    throw ConfigError("pipeline: points_per_component must be >= 1");
  if (box_margin < 0) throw ConfigError("pipeline: box_margin must be >= 0");
}

ZeroShotResult zero_shot_segment(const ImageTensor& image, const Encoder& enc,
                                 const Eigen::VectorXd& text_embedding,
                                 const BottleneckConfig& bottleneck,
                                 const PipelineConfig& pipeline, const Refiner& refiner,
                                 const std::string& prompt_id) {
  pipeline.validate();
  ZeroShotResult result;
  auto stage = [](const char* tag, auto&& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string(tag) + ": " + e.what());
    }
  };

  result.saliency = stage("saliency", [&] {
    return compute_saliency(enc, image, text_embedding, bottleneck, prompt_id);
  });
  OtsuResult otsu = stage("otsu", [&] { return otsu_binarize(result.saliency); });
  result.degenerate_saliency = otsu.degenerate;

  result.components = stage("components", [&] {
    ComponentSet comps = connected_components(otsu.mask);
    comps.eta_star = otsu.eta_star;
    comps = drop_small_components(std::move(comps), pipeline.min_component_size);
    comps = score_components(std::move(comps), result.saliency.values);
    return filter_components(std::move(comps), pipeline.eta_c);
  });
  result.coarse = kept_mask(result.components);

  result.prompts = stage("prompts", [&] {
    return extract_prompts(result.components, pipeline.mode, pipeline.points_per_component,
                           pipeline.seed, pipeline.box_margin);
  });
  result.mask = stage("refine", [&] {
    BinaryMask refined = refiner.refine(image, result.prompts, result.coarse);
    if (!refined.same_shape(result.coarse))
      throw std::runtime_error("refiner returned a mask of the wrong shape");
    return refined;
  });
  return result;
}

}  // namespace textseg
