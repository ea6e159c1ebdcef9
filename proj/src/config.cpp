#include "textseg/config.hpp"

#include <filesystem>
#include <fstream>

#include "textseg/errors.hpp"
#include "textseg/rng.hpp"

namespace textseg {

namespace {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig cfg;
  read_if(j, "seed", cfg.seed);
  read_if(j, "encoder", cfg.encoder);
  read_if(j, "refiner", cfg.refiner);
  read_if(j, "out_dir", cfg.out_dir);
  read_if(j, "workers", cfg.workers);
  read_if(j, "data_root", cfg.data_root);

  if (j.contains("synthetic_encoder")) {
    const auto& s = j.at("synthetic_encoder");
    read_if(s, "dim", cfg.synthetic.dim);
    read_if(s, "grid_rows", cfg.synthetic.grid_rows);
    read_if(s, "grid_cols", cfg.synthetic.grid_cols);
    if (s.contains("planted")) {
      const auto& p = s.at("planted");
      PlantedRegion region;
      read_if(p, "row0", region.row0);
      read_if(p, "col0", region.col0);
      read_if(p, "rows", region.rows);
      read_if(p, "cols", region.cols);
      read_if(p, "prompt_text", region.prompt_text);
      cfg.synthetic.planted = region;
    }
  }

  if (j.contains("finetune")) {
    const auto& f = j.at("finetune");
    read_if(f, "learning_rate", cfg.finetune.learning_rate);
    read_if(f, "decay_rate", cfg.finetune.decay_rate);
    read_if(f, "batch_size", cfg.finetune.batch_size);
    read_if(f, "epochs", cfg.finetune.epochs);
    read_if(f, "split_fraction", cfg.finetune.split_fraction);
    if (f.contains("seed")) {
      cfg.finetune.seed = f.at("seed").get<std::uint64_t>();
      cfg.finetune_seed_set = true;
    }
    if (f.contains("loss")) {
      const auto& l = f.at("loss");
      read_if(l, "temperature", cfg.finetune.loss.temperature);
      read_if(l, "beta1", cfg.finetune.loss.beta1);
      read_if(l, "beta2", cfg.finetune.loss.beta2);
      if (l.contains("variant"))
        cfg.finetune.loss.variant = loss_variant_from_string(l.at("variant"));
      if (l.contains("reduce"))
        cfg.finetune.loss.reduce = loss_reduce_from_string(l.at("reduce"));
    }
  }

  if (j.contains("bottleneck")) {
    const auto& b = j.at("bottleneck");
    read_if(b, "gamma", cfg.bottleneck.gamma);
    read_if(b, "steps", cfg.bottleneck.steps);
    read_if(b, "step_size", cfg.bottleneck.step_size);
    read_if(b, "noise_samples", cfg.bottleneck.noise_samples);
    if (b.contains("seed")) {
      cfg.bottleneck.seed = b.at("seed").get<std::uint64_t>();
      cfg.bottleneck_seed_set = true;
    }
  }

  if (j.contains("pipeline")) {
    const auto& p = j.at("pipeline");
    read_if(p, "eta_c", cfg.pipeline.eta_c);
    read_if(p, "min_component_size", cfg.pipeline.min_component_size);
    read_if(p, "points_per_component", cfg.pipeline.points_per_component);
    read_if(p, "box_margin", cfg.pipeline.box_margin);
    if (p.contains("mode")) cfg.pipeline.mode = prompt_mode_from_string(p.at("mode"));
    if (p.contains("seed")) {
      cfg.pipeline.seed = p.at("seed").get<std::uint64_t>();
      cfg.pipeline_seed_set = true;
    }
  }

  if (j.contains("weak")) {
    const auto& w = j.at("weak");
    read_if(w, "epochs", cfg.weak.schedule.total_epochs);
    read_if(w, "cycles", cfg.weak.schedule.cycles);
    read_if(w, "checkpoints_per_cycle", cfg.weak.schedule.checkpoints_per_cycle);
    read_if(w, "lr_max", cfg.weak.schedule.lr_max);
    read_if(w, "lr_min", cfg.weak.schedule.lr_min);
    read_if(w, "threshold", cfg.weak.threshold);
    read_if(w, "model_channels", cfg.weak.model_channels);
    if (w.contains("seed")) {
      cfg.weak_seed = w.at("seed").get<std::uint64_t>();
      cfg.weak_seed_set = true;
    }
  }

  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    read_if(e, "nsd_tolerance", cfg.eval.nsd_tolerance);
    read_if(e, "retrieval_runs", cfg.eval.retrieval_runs);
    read_if(e, "retrieval_batch", cfg.eval.retrieval_batch);
  }

  cfg.derive_seeds();
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad config " + path + ": " + e.what());
  }
  try {
    return from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad config " + path + ": " + e.what());
  }
}

void RunConfig::derive_seeds() {
  if (!finetune_seed_set) finetune.seed = mix_seed(seed, 0x66696e65ULL);
  if (!bottleneck_seed_set) bottleneck.seed = mix_seed(seed, 0x626f7474ULL);
  if (!pipeline_seed_set) pipeline.seed = mix_seed(seed, 0x70697065ULL);
  if (!weak_seed_set) weak_seed = mix_seed(seed, 0x7765616bULL);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j{{"seed", seed},
                   {"encoder", encoder},
                   {"refiner", refiner},
                   {"out_dir", out_dir},
                   {"workers", workers},
                   {"data_root", data_root}};
  nlohmann::json s{{"dim", synthetic.dim},
                   {"grid_rows", synthetic.grid_rows},
                   {"grid_cols", synthetic.grid_cols}};
  if (synthetic.planted)
    s["planted"] = {{"row0", synthetic.planted->row0},
                    {"col0", synthetic.planted->col0},
                    {"rows", synthetic.planted->rows},
                    {"cols", synthetic.planted->cols},
                    {"prompt_text", synthetic.planted->prompt_text}};
  j["synthetic_encoder"] = s;
  j["finetune"] = {{"learning_rate", finetune.learning_rate},
                   {"decay_rate", finetune.decay_rate},
                   {"batch_size", finetune.batch_size},
                   {"epochs", finetune.epochs},
                   {"split_fraction", finetune.split_fraction},
                   {"seed", finetune.seed},
                   {"loss",
                    {{"temperature", finetune.loss.temperature},
                     {"beta1", finetune.loss.beta1},
                     {"beta2", finetune.loss.beta2},
                     {"variant", to_string(finetune.loss.variant)},
                     {"reduce", to_string(finetune.loss.reduce)}}}};
  j["bottleneck"] = {{"gamma", bottleneck.gamma},
                     {"steps", bottleneck.steps},
                     {"step_size", bottleneck.step_size},
                     {"noise_samples", bottleneck.noise_samples},
                     {"seed", bottleneck.seed}};
  j["pipeline"] = {{"eta_c", pipeline.eta_c},
                   {"min_component_size", pipeline.min_component_size},
                   {"mode", to_string(pipeline.mode)},
                   {"points_per_component", pipeline.points_per_component},
                   {"box_margin", pipeline.box_margin},
                   {"seed", pipeline.seed}};
  j["weak"] = {{"epochs", weak.schedule.total_epochs},
               {"cycles", weak.schedule.cycles},
               {"checkpoints_per_cycle", weak.schedule.checkpoints_per_cycle},
               {"lr_max", weak.schedule.lr_max},
               {"lr_min", weak.schedule.lr_min},
               {"threshold", weak.threshold},
               {"model_channels", weak.model_channels},
               {"seed", weak_seed}};
  j["eval"] = {{"nsd_tolerance", eval.nsd_tolerance},
               {"retrieval_runs", eval.retrieval_runs},
               {"retrieval_batch", eval.retrieval_batch}};
  return j;
}

void RunConfig::echo(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / "resolved_config.json");
  if (!out) throw ConfigError("cannot write resolved config under " + dir);
  out << to_json().dump(2) << "\n";
}

}  // namespace textseg
