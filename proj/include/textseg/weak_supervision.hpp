#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "textseg/grid.hpp"
#include "textseg/image.hpp"

namespace textseg {

/// Per-pixel class probabilities, H x W x R, class vectors summing to 1.
struct ProbabilityMap {
  int rows = 0;
  int cols = 0;
  int classes = 0;
  std::vector<double> data;

  ProbabilityMap() = default;
  ProbabilityMap(int r, int c, int k)
      : rows(r), cols(c), classes(k), data(static_cast<size_t>(r) * c * k, 0.0) {}

  double& at(int r, int c, int k) {
    return data[(static_cast<size_t>(r) * cols + c) * classes + k];
  }
  double at(int r, int c, int k) const {
    return data[(static_cast<size_t>(r) * cols + c) * classes + k];
  }
};

/// Cyclical training schedule: E epochs split into D cycles; the last G_d
/// epochs of each cycle are snapshotted.
struct CycleSchedule {
  int total_epochs = 600;
  int cycles = 3;
  int checkpoints_per_cycle = 10;
  double lr_max = 0.01;
  double lr_min = 1e-6;

  int epochs_per_cycle() const { return total_epochs / cycles; }
  int total_checkpoints() const { return cycles * checkpoints_per_cycle; }
  void validate() const;
};

/// Cosine annealing from lr_max to lr_min within each cycle, restarting at
/// every cycle boundary.
double cyclical_lr(int epoch, const CycleSchedule& sched);

/// Trainable per-pixel segmentation model.
class SegmentationModel {
 public:
  virtual ~SegmentationModel() = default;
  virtual int num_classes() const = 0;
  virtual ProbabilityMap predict(const ImageTensor& image) const = 0;
  /// One gradient step on pixelwise cross-entropy + soft-Dice; returns the loss.
  virtual double update(const ImageTensor& image, const BinaryMask& target,
                        double learning_rate) = 0;
  virtual std::vector<double> parameters() const = 0;
  virtual void set_parameters(const std::vector<double>& params) = 0;
  virtual std::unique_ptr<SegmentationModel> clone() const = 0;
};

/// Images paired with pseudo-label masks.
struct PseudoDataset {
  std::vector<std::pair<ImageTensor, BinaryMask>> pairs;
  std::string provenance;
};

struct CheckpointEnsemble {
  struct Snapshot {
    std::vector<double> params;
    int cycle = 0;
    int epoch = 0;
    double learning_rate = 0.0;
  };
  std::shared_ptr<SegmentationModel> prototype;  // architecture template
  std::vector<Snapshot> snapshots;
  CycleSchedule schedule;
};

/// Trains for the full schedule, snapshotting the last checkpoints_per_cycle
/// epochs of every cycle; deterministic given the seed.
CheckpointEnsemble train_weak(SegmentationModel& model, const PseudoDataset& data,
                              const CycleSchedule& sched, std::uint64_t seed);

/// Mean of the per-checkpoint probability maps (fixed checkpoint order).
ProbabilityMap ensemble_predict(const CheckpointEnsemble& ens, const ImageTensor& image);

/// Foreground where the foreground-class probability is >= threshold.
BinaryMask binarize_final(const ProbabilityMap& prob, double threshold = 0.5);

struct UncertaintyMap {
  RealMap entropy;  // nats
  int class_count = 2;
};

/// Per-pixel Shannon entropy of the class distribution; 0 log 0 := 0.
UncertaintyMap entropy_uncertainty(const ProbabilityMap& prob, int class_count);

/// Checkpoint layout: <dir>/cycle_{d}/ckpt_{g}/params.bin + meta.json.
void save_ensemble(const std::string& dir, const CheckpointEnsemble& ens);
CheckpointEnsemble load_ensemble(const std::string& dir,
                                 std::shared_ptr<SegmentationModel> prototype,
                                 const CycleSchedule& sched);

}  // namespace textseg
