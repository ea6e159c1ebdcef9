#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "textseg/errors.hpp"
#include "textseg/finetune.hpp"
#include "textseg/retrieval.hpp"
#include "textseg/synthetic_encoder.hpp"
#include "textseg/toy_data.hpp"

using namespace textseg;

namespace {

FinetuneConfig toy_config(double lr, int epochs, std::uint64_t seed) {
  FinetuneConfig cfg;
  cfg.learning_rate = lr;
  cfg.decay_rate = 1.0;
  cfg.batch_size = 16;
  cfg.epochs = epochs;
  cfg.split_fraction = 0.85;
  cfg.seed = seed;
  cfg.loss.variant = LossVariant::kDhnNce;
  cfg.loss.temperature = 0.6;
  cfg.loss.beta1 = cfg.loss.beta2 = 0.15;
  return cfg;
}

}  // namespace

TEST_CASE("split_dataset: sizes, determinism, disjoint union") {
  const DatasetSplit s = split_dataset(100, 0.85, 3);
  CHECK(s.train.size() == 85);
  CHECK(s.validation.size() == 15);
  CHECK_FALSE(s.degenerate);

  std::set<int> all(s.train.begin(), s.train.end());
  all.insert(s.validation.begin(), s.validation.end());
  CHECK(all.size() == 100);
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 99);

  const DatasetSplit again = split_dataset(100, 0.85, 3);
  CHECK(s.train == again.train);
  const DatasetSplit other = split_dataset(100, 0.85, 4);
  CHECK(s.train != other.train);
}

TEST_CASE("split_dataset: degenerate single item and bad fraction") {
  const DatasetSplit s = split_dataset(1, 0.85, 0);
  CHECK(s.train.size() == 1);
  CHECK(s.validation.empty());
  CHECK(s.degenerate);

  CHECK_THROWS(split_dataset(10, 0.0, 0));
  CHECK_THROWS(split_dataset(10, 1.0, 0));
  CHECK_THROWS(split_dataset(0, 0.5, 0));
}

TEST_CASE("finetune: validation loss strictly decreases over first 5 epochs") {
  const PairCorpus corpus = make_two_cluster_corpus(128, 1001);
  auto enc = make_synthetic_encoder(51, 32);
  const TrainLog log = finetune(*enc, corpus, toy_config(0.05, 5, 1));
  REQUIRE(log.entries.size() == 5);
  for (int e = 1; e < 5; ++e)
    CHECK(log.entries[e].val_loss < log.entries[e - 1].val_loss);
}

TEST_CASE("finetune: per-epoch decay halves the learning rate") {
  const PairCorpus corpus = make_two_cluster_corpus(32, 5);
  auto enc = make_synthetic_encoder(5, 16);
  FinetuneConfig cfg = toy_config(1e-6, 4, 2);
  cfg.decay_rate = 0.5;
  const TrainLog log = finetune(*enc, corpus, cfg);
  for (int e = 0; e < 4; ++e)
    CHECK(log.entries[e].learning_rate ==
          doctest::Approx(1e-6 * std::pow(0.5, e)).epsilon(1e-12));
}

TEST_CASE("finetune: zero epochs leaves the encoder unchanged") {
  const PairCorpus corpus = make_two_cluster_corpus(32, 6);
  auto enc = make_synthetic_encoder(6, 16);
  const std::vector<double> before = enc->parameters();
  const TrainLog log = finetune(*enc, corpus, toy_config(0.5, 0, 3));
  CHECK(log.entries.empty());
  CHECK(enc->parameters() == before);
}

TEST_CASE("finetune: zero learning rate keeps parameters bitwise") {
  const PairCorpus corpus = make_two_cluster_corpus(32, 7);
  auto enc = make_synthetic_encoder(7, 16);
  const std::vector<double> before = enc->parameters();
  finetune(*enc, corpus, toy_config(0.0, 3, 4));
  CHECK(enc->parameters() == before);
}

TEST_CASE("finetune: fixed seed reproduces log and parameters") {
  const PairCorpus corpus = make_two_cluster_corpus(64, 8);
  auto enc_a = make_synthetic_encoder(8, 16);
  auto enc_b = make_synthetic_encoder(8, 16);
  const TrainLog log_a = finetune(*enc_a, corpus, toy_config(0.1, 6, 5));
  const TrainLog log_b = finetune(*enc_b, corpus, toy_config(0.1, 6, 5));
  REQUIRE(log_a.entries.size() == log_b.entries.size());
  for (size_t e = 0; e < log_a.entries.size(); ++e) {
    CHECK(log_a.entries[e].train_loss == log_b.entries[e].train_loss);
    CHECK(log_a.entries[e].val_loss == log_b.entries[e].val_loss);
  }
  CHECK(enc_a->parameters() == enc_b->parameters());
}

TEST_CASE("finetune: best-validation snapshot is retained") {
  const PairCorpus corpus = make_two_cluster_corpus(96, 9);
  auto enc = make_synthetic_encoder(9, 32);
  const TrainLog log = finetune(*enc, corpus, toy_config(0.4, 30, 6));
  REQUIRE(log.best_epoch >= 0);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : log.entries) best = std::min(best, e.val_loss);
  CHECK(log.entries[log.best_epoch].val_loss == best);
  CHECK(best <= log.entries.back().val_loss);
}

TEST_CASE("finetune: loss variant changes the training trajectory") {
  const PairCorpus corpus = make_two_cluster_corpus(64, 10);
  auto enc_a = make_synthetic_encoder(10, 16);
  auto enc_b = make_synthetic_encoder(10, 16);
  FinetuneConfig dcl_cfg = toy_config(0.1, 3, 7);
  dcl_cfg.loss.variant = LossVariant::kDcl;
  FinetuneConfig dhn_cfg = toy_config(0.1, 3, 7);  // beta 0.15 > 0
  const TrainLog log_a = finetune(*enc_a, corpus, dcl_cfg);
  const TrainLog log_b = finetune(*enc_b, corpus, dhn_cfg);
  CHECK(log_a.entries[2].train_loss != log_b.entries[2].train_loss);
}

TEST_CASE("finetune: checkpoint round-trip restores parameters") {
  const PairCorpus corpus = make_two_cluster_corpus(32, 11);
  auto enc = make_synthetic_encoder(11, 16);
  finetune(*enc, corpus, toy_config(0.2, 2, 8));
  const std::vector<double> trained = enc->parameters();

  const auto dir = std::filesystem::temp_directory_path() / "textseg_ckpt_test";
  std::filesystem::remove_all(dir);
  save_encoder_checkpoint(dir.string(), *enc, 2, 0.5, "dhn_nce");

  auto fresh = make_synthetic_encoder(11, 16);
  CHECK(fresh->parameters() != trained);
  load_encoder_checkpoint(dir.string(), *fresh);
  CHECK(fresh->parameters() == trained);
  std::filesystem::remove_all(dir);
}

TEST_CASE("finetune: config validation") {
  FinetuneConfig cfg = toy_config(0.1, 1, 0);
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = toy_config(0.1, 1, 0);
  cfg.decay_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = toy_config(0.1, 1, 0);
  cfg.split_fraction = 1.2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
