// Independent brute-force oracles used by the test suites. Everything here
// evaluates the underlying definitions directly and stays off the library's
// optimized code paths.
#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "textseg/encoder.hpp"
#include "textseg/grid.hpp"
#include "textseg/losses.hpp"
#include "textseg/rng.hpp"

namespace textseg::oracle {

// ---------------------------------------------------------------------------
// Contrastive losses, written as the literal per-anchor sums.
// ---------------------------------------------------------------------------

inline Eigen::VectorXd naive_hardness_weights(const Eigen::VectorXd& negs, double beta,
                                              double tau) {
  const int m = static_cast<int>(negs.size());
  Eigen::VectorXd w(m);
  double denom = 0.0;
  for (int k = 0; k < m; ++k) denom += std::exp(beta * negs(k) / tau);
  for (int j = 0; j < m; ++j) w(j) = m * std::exp(beta * negs(j) / tau) / denom;
  return w;
}

// One direction of the selected loss, evaluated literally. `sims` is the
// anchor-major similarity matrix for this direction (sims(i, j) = anchor i
// versus candidate j, positive on the diagonal).
inline double naive_direction(const Eigen::MatrixXd& sims, double tau, double beta,
                              LossVariant variant) {
  const int b = static_cast<int>(sims.rows());
  double loss = 0.0;
  for (int i = 0; i < b; ++i) {
    if (variant == LossVariant::kInfoNce) {
      double denom = 0.0;
      for (int j = 0; j < b; ++j) denom += std::exp(sims(i, j) / tau);
      loss += -std::log(std::exp(sims(i, i) / tau) / denom);
      continue;
    }
    double weighted = 0.0;
    if (variant == LossVariant::kDcl) {
      for (int j = 0; j < b; ++j)
        if (j != i) weighted += std::exp(sims(i, j) / tau);
    } else {
      Eigen::VectorXd negs(b - 1);
      int k = 0;
      for (int j = 0; j < b; ++j)
        if (j != i) negs(k++) = sims(i, j);
      const Eigen::VectorXd w = naive_hardness_weights(negs, beta, tau);
      k = 0;
      for (int j = 0; j < b; ++j)
        if (j != i) weighted += std::exp(sims(i, j) / tau) * w(k++);
      if (variant == LossVariant::kHnNce) weighted += std::exp(sims(i, i) / tau);
    }
    loss += -sims(i, i) / tau + std::log(weighted);
  }
  return loss;
}

inline double naive_loss(const EmbeddingBatch& batch, const LossConfig& cfg) {
  const Eigen::MatrixXd s = batch.image_embeddings * batch.text_embeddings.transpose();
  double total = naive_direction(s, cfg.temperature, cfg.beta1, cfg.variant) +
                 naive_direction(s.transpose(), cfg.temperature, cfg.beta2, cfg.variant);
  if (cfg.reduce == LossReduce::kMean) total /= batch.batch_size();
  return total;
}

// Central finite differences of a scalar function of the batch.
inline void finite_difference_gradients(const EmbeddingBatch& batch, const LossConfig& cfg,
                                        double h, Eigen::MatrixXd& d_image,
                                        Eigen::MatrixXd& d_text) {
  EmbeddingBatch work = batch;
  auto eval = [&]() { return naive_loss(work, cfg); };
  d_image.resizeLike(batch.image_embeddings);
  d_text.resizeLike(batch.text_embeddings);
  for (int r = 0; r < batch.image_embeddings.rows(); ++r)
    for (int c = 0; c < batch.image_embeddings.cols(); ++c) {
      const double keep = work.image_embeddings(r, c);
      work.image_embeddings(r, c) = keep + h;
      const double up = eval();
      work.image_embeddings(r, c) = keep - h;
      const double down = eval();
      work.image_embeddings(r, c) = keep;
      d_image(r, c) = (up - down) / (2.0 * h);
    }
  for (int r = 0; r < batch.text_embeddings.rows(); ++r)
    for (int c = 0; c < batch.text_embeddings.cols(); ++c) {
      const double keep = work.text_embeddings(r, c);
      work.text_embeddings(r, c) = keep + h;
      const double up = eval();
      work.text_embeddings(r, c) = keep - h;
      const double down = eval();
      work.text_embeddings(r, c) = keep;
      d_text(r, c) = (up - down) / (2.0 * h);
    }
}

inline EmbeddingBatch random_unit_batch(int b, int d, Rng& rng) {
  EmbeddingBatch batch;
  batch.image_embeddings.resize(b, d);
  batch.text_embeddings.resize(b, d);
  for (int r = 0; r < b; ++r) {
    for (int c = 0; c < d; ++c) {
      batch.image_embeddings(r, c) = rng.normal();
      batch.text_embeddings(r, c) = rng.normal();
    }
    batch.image_embeddings.row(r).normalize();
    batch.text_embeddings.row(r).normalize();
  }
  batch.normalized = true;
  return batch;
}

// ---------------------------------------------------------------------------
// Image-processing oracles.
// ---------------------------------------------------------------------------

// Exhaustive Otsu: recompute both class means/variances from scratch for all
// 256 candidate bin thresholds; returns the bin index minimizing the
// intra-class variance (lowest bin wins ties).
inline int brute_force_otsu_bin(const std::vector<int>& histogram) {
  const int bins = static_cast<int>(histogram.size());
  long total = 0;
  for (int h : histogram) total += h;
  double best = std::numeric_limits<double>::infinity();
  int best_bin = 0;
  for (int t = 0; t < bins; ++t) {
    long n0 = 0, n1 = 0;
    double s0 = 0.0, s1 = 0.0;
    for (int v = 0; v < bins; ++v) {
      if (v < t) {
        n0 += histogram[v];
        s0 += double(histogram[v]) * v;
      } else {
        n1 += histogram[v];
        s1 += double(histogram[v]) * v;
      }
    }
    double var0 = 0.0, var1 = 0.0;
    const double m0 = n0 > 0 ? s0 / n0 : 0.0;
    const double m1 = n1 > 0 ? s1 / n1 : 0.0;
    for (int v = 0; v < bins; ++v) {
      if (v < t)
        var0 += double(histogram[v]) * (v - m0) * (v - m0);
      else
        var1 += double(histogram[v]) * (v - m1) * (v - m1);
    }
    const double intra = (var0 + var1) / double(total);
    if (intra < best) {
      best = intra;
      best_bin = t;
    }
  }
  return best_bin;
}

// Flood-fill connected components with 8-connectivity, labels in raster order
// of the first pixel.
inline LabelMap flood_fill_components(const BinaryMask& mask) {
  LabelMap labels(mask.rows(), mask.cols(), 0);
  int next = 0;
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c) {
      if (mask(r, c) == 0 || labels(r, c) != 0) continue;
      ++next;
      std::deque<std::pair<int, int>> queue{{r, c}};
      labels(r, c) = next;
      while (!queue.empty()) {
        auto [cr, cc] = queue.front();
        queue.pop_front();
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int nr = cr + dr, nc = cc + dc;
            if (!mask.in_bounds(nr, nc) || mask(nr, nc) == 0 || labels(nr, nc) != 0)
              continue;
            labels(nr, nc) = next;
            queue.push_back({nr, nc});
          }
      }
    }
  return labels;
}

inline std::vector<std::pair<int, int>> boundary_pixels(const BinaryMask& m) {
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      if (m(r, c) == 0) continue;
      const bool edge = r == 0 || r == m.rows() - 1 || c == 0 || c == m.cols() - 1 ||
                        m(r - 1, c) == 0 || m(r + 1, c) == 0 || m(r, c - 1) == 0 ||
                        m(r, c + 1) == 0;
      if (edge) out.push_back({r, c});
    }
  return out;
}

// All-pairs surface-distance NSD.
inline double brute_force_nsd(const BinaryMask& a, const BinaryMask& b, int tolerance) {
  const auto ba = boundary_pixels(a);
  const auto bb = boundary_pixels(b);
  if (ba.empty() && bb.empty()) return 1.0;
  if (ba.empty() || bb.empty()) return 0.0;
  const long tol2 = long(tolerance) * tolerance;
  auto count_within = [tol2](const std::vector<std::pair<int, int>>& from,
                             const std::vector<std::pair<int, int>>& to) {
    long hits = 0;
    for (auto [r, c] : from) {
      long best = std::numeric_limits<long>::max();
      for (auto [tr, tc] : to) {
        const long d = long(r - tr) * (r - tr) + long(c - tc) * (c - tc);
        best = std::min(best, d);
      }
      if (best <= tol2) ++hits;
    }
    return hits;
  };
  const long hits = count_within(ba, bb) + count_within(bb, ba);
  return double(hits) / double(ba.size() + bb.size());
}

inline double brute_force_dice(const BinaryMask& a, const BinaryMask& b) {
  long inter = 0, total = 0;
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) {
      inter += (a(r, c) != 0 && b(r, c) != 0);
      total += (a(r, c) != 0) + (b(r, c) != 0);
    }
  if (total == 0) return 1.0;
  return 2.0 * double(inter) / double(total);
}

inline BinaryMask random_mask(int rows, int cols, double fg_prob, Rng& rng) {
  BinaryMask m(rows, cols, 0);
  for (auto& v : m.data()) v = rng.uniform() < fg_prob ? 1 : 0;
  return m;
}

}  // namespace textseg::oracle
