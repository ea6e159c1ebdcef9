#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "textseg/attribution.hpp"
#include "textseg/finetune.hpp"
#include "textseg/mask_pipeline.hpp"
#include "textseg/synthetic_encoder.hpp"
#include "textseg/weak_supervision.hpp"

namespace textseg {

struct SyntheticEncoderConfig {
  int dim = 64;
  int grid_rows = 14;
  int grid_cols = 14;
  std::optional<PlantedRegion> planted;
};

struct WeakConfig {
  CycleSchedule schedule;
  double threshold = 0.5;
  int model_channels = 4;
};

struct EvalConfig {
  int nsd_tolerance = 2;
  int retrieval_runs = 5;
  int retrieval_batch = 50;
};

/// One JSON config drives every command; CLI flags override the file. Stage
/// seeds are derived from the top-level seed unless the file pins them.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string encoder = "synthetic";  // synthetic | external:<id>
  std::string refiner = "mock";       // mock | external:<command>
  std::string out_dir = "out";
  int workers = 1;
  std::string data_root;

  SyntheticEncoderConfig synthetic;
  FinetuneConfig finetune;
  BottleneckConfig bottleneck;
  PipelineConfig pipeline;
  WeakConfig weak;
  EvalConfig eval;

  // Which stage seeds were pinned by the file (otherwise derived from seed).
  bool finetune_seed_set = false;
  bool bottleneck_seed_set = false;
  bool pipeline_seed_set = false;
  bool weak_seed_set = false;
  std::uint64_t weak_seed = 0;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  nlohmann::json to_json() const;

  /// Recomputes derived stage seeds from the top-level seed.
  void derive_seeds();
  /// Writes the fully resolved config beside the run outputs.
  void echo(const std::string& dir) const;
};

}  // namespace textseg
