#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "textseg/encoder.hpp"
#include "textseg/losses.hpp"
#include "textseg/toy_data.hpp"

namespace textseg {

struct FinetuneConfig {
  double learning_rate = 1e-6;
  double decay_rate = 0.5;     // learning rate multiplier per epoch boundary
  int batch_size = 64;
  int epochs = 1;
  double split_fraction = 0.85;
  std::uint64_t seed = 0;
  LossConfig loss;

  void validate() const;
};

struct TrainLogEntry {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double learning_rate = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  int best_epoch = -1;

  /// `epoch,train_loss,val_loss,lr,seconds` rows. The seconds column is
  /// wall-clock and excluded from reproducibility comparisons.
  std::string to_csv() const;
};

struct DatasetSplit {
  std::vector<int> train;
  std::vector<int> validation;
  bool degenerate = false;  // validation empty
};

/// Seeded shuffle then split: ceil(fraction * n) train items, remainder
/// validation. Warns (and flags) when validation ends up empty.
DatasetSplit split_dataset(int n, double fraction, std::uint64_t seed);

/// Called after each epoch; used by the CLI to persist checkpoints.
using EpochCallback =
    std::function<void(int epoch, const TrainableEncoder& enc, double val_loss)>;

/// SGD fine-tuning with per-epoch learning-rate decay. The encoder is left
/// holding the best-validation parameters seen during the run.
TrainLog finetune(TrainableEncoder& enc, const PairCorpus& data, const FinetuneConfig& cfg,
                  const EpochCallback& on_epoch = nullptr);

/// Checkpoint layout: <dir>/params.bin (little-endian float64) plus meta.json.
void save_encoder_checkpoint(const std::string& dir, const TrainableEncoder& enc,
                             int epoch, double val_loss, const std::string& loss_variant);
void load_encoder_checkpoint(const std::string& dir, TrainableEncoder& enc);

}  // namespace textseg
