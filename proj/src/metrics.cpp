#include "textseg/metrics.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

namespace textseg {

namespace {

std::vector<std::pair<int, int>> boundary(const BinaryMask& m) {
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

// Count of `from` pixels whose nearest `to` pixel lies within tol (exact
// integer squared distances; early exit once a hit is found).
long within_tolerance(const std::vector<std::pair<int, int>>& from,
                      const std::vector<std::pair<int, int>>& to, long tol2) {
  long hits = 0;
  for (const auto& [r, c] : from) {
    for (const auto& [tr, tc] : to) {
      const long d = long(r - tr) * (r - tr) + long(c - tc) * (c - tc);
      if (d <= tol2) {
        ++hits;
        break;
      }
    }
  }
  return hits;
}

void check_shapes(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("metric: mask shape mismatch");
}

}  // namespace

double dice(const BinaryMask& a, const BinaryMask& b) {
  check_shapes(a, b);
  long inter = 0, total = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const bool fa = a.data()[i] != 0, fb = b.data()[i] != 0;
    inter += fa && fb;
    total += fa + fb;
  }
  if (total == 0) return 1.0;
  return 2.0 * double(inter) / double(total);
}

double nsd(const BinaryMask& a, const BinaryMask& b, int tolerance_px) {
  check_shapes(a, b);
  if (tolerance_px < 0) throw std::invalid_argument("nsd: negative tolerance");
  const auto ba = boundary(a);
  const auto bb = boundary(b);
  if (ba.empty() && bb.empty()) return 1.0;
  if (ba.empty() || bb.empty()) return 0.0;
  const long tol2 = long(tolerance_px) * tolerance_px;
  const long hits = within_tolerance(ba, bb, tol2) + within_tolerance(bb, ba, tol2);
  return double(hits) / double(ba.size() + bb.size());
}

SegScore score_masks(const BinaryMask& prediction, const BinaryMask& reference,
                     int tolerance_px) {
  return {dice(prediction, reference), nsd(prediction, reference, tolerance_px),
          tolerance_px};
}

}  // namespace textseg
