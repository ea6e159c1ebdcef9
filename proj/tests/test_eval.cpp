#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <Eigen/QR>

#include "oracles.hpp"
#include "textseg/metrics.hpp"
#include "textseg/retrieval.hpp"
#include "textseg/rng.hpp"
#include "textseg/stats.hpp"
#include "textseg/synthetic_encoder.hpp"
#include "textseg/toy_data.hpp"

using namespace textseg;

namespace {

BinaryMask square_mask(int side, int r0, int c0, int size) {
  BinaryMask m(side, side, 0);
  for (int r = r0; r < r0 + size; ++r)
    for (int c = c0; c < c0 + size; ++c) m(r, c) = 1;
  return m;
}

}  // namespace

TEST_CASE("dice: anchors and errors") {
  const BinaryMask a = square_mask(16, 2, 2, 4);
  CHECK(dice(a, a) == 1.0);

  const BinaryMask b = square_mask(16, 10, 10, 4);
  CHECK(dice(a, b) == 0.0);

  // |A| = |B| = 4, overlap 2.
  BinaryMask c(4, 4, 0), d(4, 4, 0);
  c(0, 0) = c(0, 1) = c(0, 2) = c(0, 3) = 1;
  d(0, 2) = d(0, 3) = d(1, 0) = d(1, 1) = 1;
  CHECK(dice(c, d) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK(dice(BinaryMask(4, 4, 0), BinaryMask(4, 4, 0)) == 1.0);
  CHECK_THROWS(dice(BinaryMask(4, 4, 0), BinaryMask(4, 5, 0)));
}

TEST_CASE("nsd: anchors") {
  const BinaryMask a = square_mask(16, 3, 3, 5);
  CHECK(nsd(a, a, 2) == 1.0);

  // Two single pixels, distance 4 > tolerance 3.
  BinaryMask p(16, 16, 0), q(16, 16, 0);
  p(4, 4) = 1;
  q(4, 8) = 1;
  CHECK(nsd(p, q, 3) == 0.0);
  CHECK(nsd(p, q, 4) == 1.0);

  // Axis shift by k <= tolerance keeps full boundary agreement.
  const BinaryMask shifted = square_mask(16, 3, 5, 5);
  CHECK(nsd(a, shifted, 2) == 1.0);
  CHECK(nsd(a, shifted, 1) < 1.0);

  CHECK(nsd(BinaryMask(8, 8, 0), BinaryMask(8, 8, 0), 2) == 1.0);
  CHECK(nsd(a, BinaryMask(16, 16, 0), 2) == 0.0);
}

TEST_CASE("dice and nsd match brute-force oracles on random masks") {
  Rng rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const int side = rng.uniform_int(4, 32);
    const BinaryMask a = oracle::random_mask(side, side, 0.4, rng);
    const BinaryMask b = oracle::random_mask(side, side, 0.4, rng);
    const int tol = rng.uniform_int(0, 3);
    CHECK(dice(a, b) == oracle::brute_force_dice(a, b));
    CHECK(nsd(a, b, tol) == oracle::brute_force_nsd(a, b, tol));
  }
}

TEST_CASE("metrics are symmetric and translation invariant") {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const BinaryMask a = oracle::random_mask(20, 20, 0.35, rng);
    const BinaryMask b = oracle::random_mask(20, 20, 0.35, rng);
    CHECK(dice(a, b) == dice(b, a));
    CHECK(nsd(a, b, 2) == nsd(b, a, 2));

    // Translate both masks by (3, 2) inside a larger canvas.
    BinaryMask ta(30, 30, 0), tb(30, 30, 0);
    BinaryMask ua(30, 30, 0), ub(30, 30, 0);
    for (int r = 0; r < 20; ++r)
      for (int c = 0; c < 20; ++c) {
        ta(r + 3, c + 2) = a(r, c);
        tb(r + 3, c + 2) = b(r, c);
        ua(r, c) = a(r, c);
        ub(r, c) = b(r, c);
      }
    CHECK(dice(ta, tb) == dice(ua, ub));
    CHECK(nsd(ta, tb, 2) == nsd(ua, ub, 2));
  }
}

TEST_CASE("retrieval_topk: identity structure and rotation invariance") {
  EmbeddingBatch batch;
  batch.image_embeddings = Eigen::MatrixXd::Identity(8, 8);
  batch.text_embeddings = Eigen::MatrixXd::Identity(8, 8);
  batch.normalized = true;

  const TopKAccuracy top1 = retrieval_topk(batch, 1);
  CHECK(top1.image_to_text == 1.0);
  CHECK(top1.text_to_image == 1.0);

  Rng rng(33);
  const EmbeddingBatch random = oracle::random_unit_batch(16, 8, rng);
  const TopKAccuracy t1 = retrieval_topk(random, 1);
  const TopKAccuracy t2 = retrieval_topk(random, 2);
  CHECK(t2.image_to_text >= t1.image_to_text);
  CHECK(t2.text_to_image >= t1.text_to_image);

  // Common orthogonal rotation preserves similarities, hence accuracies.
  Eigen::MatrixXd gauss(8, 8);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) gauss(r, c) = rng.normal();
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  const Eigen::MatrixXd rot = qr.householderQ();
  EmbeddingBatch rotated = random;
  rotated.image_embeddings = random.image_embeddings * rot;
  rotated.text_embeddings = random.text_embeddings * rot;
  const TopKAccuracy r1 = retrieval_topk(rotated, 1);
  CHECK(r1.image_to_text == doctest::Approx(t1.image_to_text).epsilon(1e-12));
  CHECK(r1.text_to_image == doctest::Approx(t1.text_to_image).epsilon(1e-12));

  CHECK_THROWS(retrieval_topk(batch, 8));
  CHECK_THROWS(retrieval_topk(batch, 0));
}

TEST_CASE("retrieval chance level on random embeddings") {
  // Expected top-1 is 1/B = 2%; Monte-Carlo estimate must land within +-1%.
  Rng rng(34);
  double total = 0.0;
  const int resamples = 300;
  for (int trial = 0; trial < resamples; ++trial) {
    const EmbeddingBatch batch = oracle::random_unit_batch(50, 16, rng);
    const TopKAccuracy t1 = retrieval_topk(batch, 1);
    total += 0.5 * (t1.image_to_text + t1.text_to_image);
  }
  const double mean = 100.0 * total / resamples;
  CHECK(mean > 1.0);
  CHECK(mean < 3.0);
}

TEST_CASE("retrieval_protocol: perfect encoder and reproducibility") {
  const PairCorpus corpus = make_two_cluster_corpus(120, 77);
  const auto enc = make_synthetic_encoder(77, 32);

  const RetrievalReport a = retrieval_protocol(*enc, corpus, 5, 50, 9);
  const RetrievalReport b = retrieval_protocol(*enc, corpus, 5, 50, 9);
  CHECK(a.image_to_text.top1_mean == b.image_to_text.top1_mean);
  CHECK(a.image_to_text.top1_std == b.image_to_text.top1_std);
  CHECK(a.text_to_image.top2_mean == b.text_to_image.top2_mean);
  CHECK(a.image_to_text.top2_mean >= a.image_to_text.top1_mean);

  CHECK_THROWS(retrieval_protocol(*enc, corpus, 5, 200, 9));  // fewer pairs than a batch
}

TEST_CASE("paired t-test: identical, degenerate and hand-computed cases") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  const TTestResult same = paired_ttest(a, a);
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);
  CHECK_FALSE(same.infinite_t);

  // Differences (1,1,1,1): zero variance, nonzero mean.
  const std::vector<double> b{0.0, 1.0, 2.0, 3.0};
  const TTestResult degenerate = paired_ttest(a, b);
  CHECK(degenerate.infinite_t);
  CHECK(degenerate.p == 0.0);
  CHECK(std::isinf(degenerate.t));

  // Differences (1,-1,2,0,1): t ~ 1.1767, p ~ 0.3046 with 4 dof.
  const std::vector<double> x{1.0, -1.0, 2.0, 0.0, 1.0};
  const std::vector<double> zeros(5, 0.0);
  const TTestResult hand = paired_ttest(x, zeros);
  CHECK(hand.t == doctest::Approx(1.1767).epsilon(1e-3));
  CHECK(hand.p == doctest::Approx(0.3046).epsilon(1e-3));

  CHECK_THROWS(paired_ttest({1.0}, {2.0}));
  CHECK_THROWS(paired_ttest({1.0, 2.0}, {1.0}));
}

TEST_CASE("incomplete beta sanity") {
  CHECK(regularized_incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  // I_x(1, 1) = x.
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
  // Symmetry I_x(a, b) = 1 - I_{1-x}(b, a).
  const double lhs = regularized_incomplete_beta(2.5, 1.5, 0.3);
  const double rhs = 1.0 - regularized_incomplete_beta(1.5, 2.5, 0.7);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}
