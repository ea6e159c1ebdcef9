#include "textseg/finetune.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "textseg/errors.hpp"
#include "textseg/rng.hpp"

namespace textseg {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

// Mean batch loss over index chunks; chunks smaller than 2 are dropped.
double evaluate_loss(const Encoder& enc, const PairCorpus& data,
                     const std::vector<int>& indices, int batch_size,
                     const LossConfig& loss) {
  double total = 0.0;
  int batches = 0;
  for (size_t start = 0; start + 2 <= indices.size(); start += batch_size) {
    const size_t end = std::min(indices.size(), start + batch_size);
    if (end - start < 2) break;
    std::vector<const ImageTensor*> images;
    std::vector<const TextPrompt*> prompts;
    for (size_t i = start; i < end; ++i) {
      images.push_back(&data.images[indices[i]]);
      prompts.push_back(&data.prompts[indices[i]]);
    }
    total += loss_value(encode_batch(enc, images, prompts), loss).total;
    ++batches;
  }
  return batches > 0 ? total / batches : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

void FinetuneConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("finetune: learning_rate must be >= 0");
  if (!(decay_rate > 0.0 && decay_rate <= 1.0))
    throw ConfigError("finetune: decay_rate must be in (0, 1]");
  if (batch_size < 2) throw ConfigError("finetune: batch_size must be >= 2");
  if (epochs < 0) throw ConfigError("finetune: epochs must be >= 0");
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw ConfigError("finetune: split_fraction must be in (0, 1)");
  loss.validate();
}

std::string TrainLog::to_csv() const {
  std::string out = "epoch,train_loss,val_loss,lr,seconds\n";
  for (const auto& e : entries) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
           format_double(e.val_loss) + "," + format_double(e.learning_rate) + "," +
           format_double(e.seconds) + "\n";
  }
  return out;
}

DatasetSplit split_dataset(int n, double fraction, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("split_dataset: empty dataset");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split_dataset: fraction must be in (0, 1)");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x73706c69ULL));
  rng.shuffle(order);

  const int train_size = static_cast<int>(std::ceil(fraction * n));
  DatasetSplit split;
  split.train.assign(order.begin(), order.begin() + train_size);
  split.validation.assign(order.begin() + train_size, order.end());
  if (split.validation.empty()) {
    split.degenerate = true;
    std::cerr << "split_dataset: validation set is empty (n=" << n << ")\n";
  }
  return split;
}

TrainLog finetune(TrainableEncoder& enc, const PairCorpus& data, const FinetuneConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.size() == 0) throw ConfigError("finetune: empty dataset");
  if (data.images.size() != data.prompts.size())
    throw ConfigError("finetune: image/prompt count mismatch");

  const DatasetSplit split = split_dataset(static_cast<int>(data.size()),
                                           cfg.split_fraction, cfg.seed);
  TrainLog log;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = enc.parameters();
  bool have_best = false;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto tick = std::chrono::steady_clock::now();
    const double lr = cfg.learning_rate * std::pow(cfg.decay_rate, epoch);

    std::vector<int> order = split.train;
    Rng rng(mix_seed(cfg.seed, 0x65706f63ULL + epoch));
    rng.shuffle(order);

    double train_total = 0.0;
    int train_batches = 0;
    for (size_t start = 0; start + 2 <= order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      if (end - start < 2) break;
      std::vector<const ImageTensor*> images;
      std::vector<const TextPrompt*> prompts;
      for (size_t i = start; i < end; ++i) {
        images.push_back(&data.images[order[i]]);
        prompts.push_back(&data.prompts[order[i]]);
      }
      const EmbeddingBatch batch = encode_batch(enc, images, prompts);
      LossGradient grad;
      try {
        grad = loss_gradient(batch, cfg.loss);
      } catch (const NumericError& e) {
        throw NumericError(std::string("finetune aborted at epoch ") +
                           std::to_string(epoch) + ": " + e.what());
      }
      enc.apply_pair_gradients(images, prompts, grad.d_image, grad.d_text, lr);
      train_total += grad.value.total;
      ++train_batches;
    }

    const double train_loss =
        train_batches > 0 ? train_total / train_batches
                          : std::numeric_limits<double>::quiet_NaN();
    const double val_loss =
        evaluate_loss(enc, data, split.validation, cfg.batch_size, cfg.loss);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();

    log.entries.push_back({epoch, train_loss, val_loss, lr, seconds});
    if (std::isfinite(val_loss) && val_loss < best_val) {
      best_val = val_loss;
      best_params = enc.parameters();
      log.best_epoch = epoch;
      have_best = true;
    }
    if (on_epoch) on_epoch(epoch, enc, val_loss);
  }

  if (have_best) enc.set_parameters(best_params);
  return log;
}

void save_encoder_checkpoint(const std::string& dir, const TrainableEncoder& enc,
                             int epoch, double val_loss, const std::string& loss_variant) {
  std::filesystem::create_directories(dir);
  const std::vector<double> params = enc.parameters();
  std::ofstream bin(std::filesystem::path(dir) / "params.bin", std::ios::binary);
  if (!bin) throw ConfigError("cannot write checkpoint: " + dir);
  bin.write(reinterpret_cast<const char*>(params.data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));

  nlohmann::json meta{{"epoch", epoch},
                      {"val_loss", val_loss},
                      {"loss_variant", loss_variant},
                      {"param_count", params.size()}};
  std::ofstream meta_out(std::filesystem::path(dir) / "meta.json");
  meta_out << meta.dump(2) << "\n";
}

void load_encoder_checkpoint(const std::string& dir, TrainableEncoder& enc) {
  std::ifstream bin(std::filesystem::path(dir) / "params.bin", std::ios::binary);
  if (!bin) throw ConfigError("cannot read checkpoint: " + dir);
  std::vector<double> params(enc.parameters().size());
  bin.read(reinterpret_cast<char*>(params.data()),
           static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!bin || bin.gcount() != static_cast<std::streamsize>(params.size() * sizeof(double)))
    throw ConfigError("checkpoint truncated: " + dir);
  enc.set_parameters(params);
}

}  // namespace textseg
