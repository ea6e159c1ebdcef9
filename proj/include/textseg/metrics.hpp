#pragma once

#include "textseg/grid.hpp"

namespace textseg {

struct SegScore {
  double dsc = 0.0;
  double nsd = 0.0;
  int tolerance_px = 2;
};

/// Dice-Sorensen coefficient 2|A^B| / (|A|+|B|); both-empty pairs score 1.
double dice(const BinaryMask& a, const BinaryMask& b);

/// Normalized surface distance: fraction of boundary pixels of each mask
/// within `tolerance_px` (Euclidean) of the other mask's boundary, pooled
/// over both boundaries. Boundary = foreground pixels 4-adjacent to
/// background (canvas edges count as background). Both-empty pairs score 1.
double nsd(const BinaryMask& a, const BinaryMask& b, int tolerance_px);

SegScore score_masks(const BinaryMask& prediction, const BinaryMask& reference,
                     int tolerance_px = 2);

}  // namespace textseg
