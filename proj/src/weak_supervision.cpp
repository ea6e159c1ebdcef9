#include "textseg/weak_supervision.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "textseg/errors.hpp"
#include "textseg/rng.hpp"

namespace textseg {

void CycleSchedule::validate() const {
  if (total_epochs < 1) throw ConfigError("schedule: total_epochs must be >= 1");
  if (cycles < 1) throw ConfigError("schedule: cycles must be >= 1");
  if (total_epochs % cycles != 0)
    throw ConfigError("schedule: cycles must divide total_epochs");
  if (checkpoints_per_cycle < 1)
    throw ConfigError("schedule: checkpoints_per_cycle must be >= 1");
  if (checkpoints_per_cycle > epochs_per_cycle())
    throw ConfigError("schedule: checkpoints_per_cycle exceeds epochs per cycle");
  if (!(lr_max > 0.0)) throw ConfigError("schedule: lr_max must be positive");
  if (lr_min < 0.0 || lr_min > lr_max)
    throw ConfigError("schedule: lr_min must be in [0, lr_max]");
}

double cyclical_lr(int epoch, const CycleSchedule& sched) {
  sched.validate();
  if (epoch < 0 || epoch >= sched.total_epochs)
    throw std::invalid_argument("cyclical_lr: epoch out of range");
  const int per_cycle = sched.epochs_per_cycle();
  const int within = epoch % per_cycle;
  if (per_cycle == 1) return sched.lr_max;
  const double phase = double(within) / double(per_cycle - 1);
  return sched.lr_min + 0.5 * (sched.lr_max - sched.lr_min) * (1.0 + std::cos(M_PI * phase));
}

CheckpointEnsemble train_weak(SegmentationModel& model, const PseudoDataset& data,
                              const CycleSchedule& sched, std::uint64_t seed) {
  sched.validate();
  if (data.pairs.empty()) throw ConfigError("train_weak: empty dataset");
  for (const auto& [image, mask] : data.pairs)
    if (image.height != mask.rows() || image.width != mask.cols())
      throw ConfigError("train_weak: image/mask shape mismatch");

  CheckpointEnsemble ens;
  ens.schedule = sched;
  ens.prototype = std::shared_ptr<SegmentationModel>(model.clone());

  const int per_cycle = sched.epochs_per_cycle();
  std::vector<int> order(data.pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < sched.total_epochs; ++epoch) {
    const double lr = cyclical_lr(epoch, sched);
    Rng rng(mix_seed(seed, 0x7765616bULL + epoch));
    rng.shuffle(order);
    for (int idx : order) {
      const double loss = model.update(data.pairs[idx].first, data.pairs[idx].second, lr);
      if (!std::isfinite(loss))
        throw NumericError("train_weak: non-finite loss at epoch " + std::to_string(epoch));
    }
    const int within = epoch % per_cycle;
    if (within >= per_cycle - sched.checkpoints_per_cycle)
      ens.snapshots.push_back({model.parameters(), epoch / per_cycle, epoch, lr});
  }
  return ens;
}

ProbabilityMap ensemble_predict(const CheckpointEnsemble& ens, const ImageTensor& image) {
  if (ens.snapshots.empty()) throw std::invalid_argument("ensemble_predict: empty ensemble");
  if (!ens.prototype) throw std::invalid_argument("ensemble_predict: missing prototype");

  ProbabilityMap mean;
  std::unique_ptr<SegmentationModel> worker = ens.prototype->clone();
  for (size_t n = 0; n < ens.snapshots.size(); ++n) {
    worker->set_parameters(ens.snapshots[n].params);
    const ProbabilityMap p = worker->predict(image);
    if (n == 0) {
      mean = p;
    } else {
      if (p.data.size() != mean.data.size())
        throw std::runtime_error("ensemble_predict: inconsistent prediction shapes");
      for (size_t i = 0; i < mean.data.size(); ++i) mean.data[i] += p.data[i];
    }
  }
  const double inv = 1.0 / double(ens.snapshots.size());
  for (double& v : mean.data) v *= inv;
  return mean;
}

BinaryMask binarize_final(const ProbabilityMap& prob, double threshold) {
  if (prob.classes != 2)
    throw std::invalid_argument("binarize_final: expected a binary probability map");
  BinaryMask mask(prob.rows, prob.cols, 0);
  for (int r = 0; r < prob.rows; ++r)
    for (int c = 0; c < prob.cols; ++c) mask(r, c) = prob.at(r, c, 1) >= threshold ? 1 : 0;
  return mask;
}

UncertaintyMap entropy_uncertainty(const ProbabilityMap& prob, int class_count) {
  if (class_count != prob.classes)
    throw std::invalid_argument("entropy_uncertainty: class count mismatch");
  UncertaintyMap out;
  out.class_count = class_count;
  out.entropy = RealMap(prob.rows, prob.cols, 0.0);
  for (int r = 0; r < prob.rows; ++r)
    for (int c = 0; c < prob.cols; ++c) {
      double sum = 0.0, h = 0.0;
      for (int k = 0; k < class_count; ++k) {
        const double p = prob.at(r, c, k);
        if (p < 0.0) throw std::invalid_argument("entropy_uncertainty: negative probability");
        sum += p;
        if (p > 0.0) h -= p * std::log(p);
      }
      if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("entropy_uncertainty: probabilities must sum to 1");
      out.entropy(r, c) = h;
    }
  return out;
}

void save_ensemble(const std::string& dir, const CheckpointEnsemble& ens) {
  namespace fs = std::filesystem;
  int index_in_cycle = 0;
  int last_cycle = -1;
  for (const auto& snap : ens.snapshots) {
    if (snap.cycle != last_cycle) {
      last_cycle = snap.cycle;
      index_in_cycle = 0;
    }
    const fs::path ckpt_dir =
        fs::path(dir) / ("cycle_" + std::to_string(snap.cycle)) /
        ("ckpt_" + std::to_string(index_in_cycle));
    fs::create_directories(ckpt_dir);
    std::ofstream bin(ckpt_dir / "params.bin", std::ios::binary);
    if (!bin) throw ConfigError("cannot write checkpoint: " + ckpt_dir.string());
    bin.write(reinterpret_cast<const char*>(snap.params.data()),
              static_cast<std::streamsize>(snap.params.size() * sizeof(double)));
    nlohmann::json meta{{"cycle", snap.cycle},
                        {"epoch", snap.epoch},
                        {"lr", snap.learning_rate},
                        {"param_count", snap.params.size()}};
    std::ofstream meta_out(ckpt_dir / "meta.json");
    meta_out << meta.dump(2) << "\n";
    ++index_in_cycle;
  }
}

CheckpointEnsemble load_ensemble(const std::string& dir,
                                 std::shared_ptr<SegmentationModel> prototype,
                                 const CycleSchedule& sched) {
  namespace fs = std::filesystem;
  CheckpointEnsemble ens;
  ens.schedule = sched;
  ens.prototype = std::move(prototype);
  const size_t param_count = ens.prototype->parameters().size();

  for (int cycle = 0; cycle < sched.cycles; ++cycle) {
    for (int g = 0; g < sched.checkpoints_per_cycle; ++g) {
      const fs::path ckpt_dir = fs::path(dir) / ("cycle_" + std::to_string(cycle)) /
                                ("ckpt_" + std::to_string(g));
      const fs::path params_path = ckpt_dir / "params.bin";
      std::ifstream bin(params_path, std::ios::binary);
      if (!bin)
        throw ConfigError("missing checkpoint: " + params_path.string());
      CheckpointEnsemble::Snapshot snap;
      snap.params.resize(param_count);
      bin.read(reinterpret_cast<char*>(snap.params.data()),
               static_cast<std::streamsize>(param_count * sizeof(double)));
      if (!bin || bin.gcount() != static_cast<std::streamsize>(param_count * sizeof(double)))
        throw ConfigError("checkpoint truncated: " + params_path.string());
      snap.cycle = cycle;
      std::ifstream meta_in(ckpt_dir / "meta.json");
      if (meta_in) {
        nlohmann::json meta;
        meta_in >> meta;
        snap.epoch = meta.value("epoch", 0);
        snap.learning_rate = meta.value("lr", 0.0);
      }
      ens.snapshots.push_back(std::move(snap));
    }
  }
  return ens;
}

}  // namespace textseg
