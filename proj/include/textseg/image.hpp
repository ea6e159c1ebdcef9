#pragma once

#include <array>
#include <string>
#include <vector>

#include "textseg/grid.hpp"

namespace textseg {

/// H x W x C image, row-major with interleaved channels. Decoded images hold
/// values in [0, 1]; standardized images (after preprocess_image) do not.
struct ImageTensor {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<double> pixels;
  std::string source_path;

  ImageTensor() = default;
  ImageTensor(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c),
        pixels(static_cast<size_t>(h) * w * c, fill) {}

  double& at(int r, int c, int ch) {
    return pixels[(static_cast<size_t>(r) * width + c) * channels + ch];
  }
  double at(int r, int c, int ch) const {
    return pixels[(static_cast<size_t>(r) * width + c) * channels + ch];
  }
  size_t size() const { return pixels.size(); }
};

/// Channel means/stds of the reference contrastive vision-language release;
/// fixed so preprocessing is bit-reproducible.
inline constexpr std::array<double, 3> kChannelMean = {0.48145466, 0.4578275, 0.40821073};
inline constexpr std::array<double, 3> kChannelStd = {0.26862954, 0.26130258, 0.27577711};

/// Bilinear resample (half-pixel centers, edges clamped).
ImageTensor bilinear_resize(const ImageTensor& src, int out_h, int out_w);

/// Resize to side x side and standardize per channel with the fixed constants.
/// Throws std::invalid_argument("channel mismatch") unless the input has 3 channels.
ImageTensor preprocess_image(const ImageTensor& raw, int side);

/// Mean over channels, as a 2-D map.
RealMap luminance(const ImageTensor& img);

/// Bilinear resample of a single-channel map (same convention as images).
RealMap bilinear_resize(const RealMap& src, int out_h, int out_w);

bool all_finite(const ImageTensor& img);

}  // namespace textseg
