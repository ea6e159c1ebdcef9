#include "textseg/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace textseg {

namespace {

// Source coordinate for destination index i under half-pixel alignment.
inline void lerp_coords(int i, double scale, int src_len, int& lo, int& hi, double& frac) {
  double x = (i + 0.5) * scale - 0.5;
  x = std::clamp(x, 0.0, static_cast<double>(src_len - 1));
  lo = static_cast<int>(std::floor(x));
  hi = std::min(lo + 1, src_len - 1);
  frac = x - lo;
}

}  // namespace

ImageTensor bilinear_resize(const ImageTensor& src, int out_h, int out_w) {
  if (src.height < 1 || src.width < 1) throw std::invalid_argument("resize: empty source");
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize: empty target");
  ImageTensor dst(out_h, out_w, src.channels);
  dst.source_path = src.source_path;
  const double sr = static_cast<double>(src.height) / out_h;
  const double sc = static_cast<double>(src.width) / out_w;
  for (int r = 0; r < out_h; ++r) {
    int r0, r1;
    double fr;
    lerp_coords(r, sr, src.height, r0, r1, fr);
    for (int c = 0; c < out_w; ++c) {
      int c0, c1;
      double fc;
      lerp_coords(c, sc, src.width, c0, c1, fc);
      for (int ch = 0; ch < src.channels; ++ch) {
        const double top = (1.0 - fc) * src.at(r0, c0, ch) + fc * src.at(r0, c1, ch);
        const double bot = (1.0 - fc) * src.at(r1, c0, ch) + fc * src.at(r1, c1, ch);
        dst.at(r, c, ch) = (1.0 - fr) * top + fr * bot;
      }
    }
  }
  return dst;
}

RealMap bilinear_resize(const RealMap& src, int out_h, int out_w) {
  if (src.rows() < 1 || src.cols() < 1) throw std::invalid_argument("resize: empty source");
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize: empty target");
  RealMap dst(out_h, out_w);
  const double sr = static_cast<double>(src.rows()) / out_h;
  const double sc = static_cast<double>(src.cols()) / out_w;
  for (int r = 0; r < out_h; ++r) {
    int r0, r1;
    double fr;
    lerp_coords(r, sr, src.rows(), r0, r1, fr);
    for (int c = 0; c < out_w; ++c) {
      int c0, c1;
      double fc;
      lerp_coords(c, sc, src.cols(), c0, c1, fc);
      const double top = (1.0 - fc) * src(r0, c0) + fc * src(r0, c1);
      const double bot = (1.0 - fc) * src(r1, c0) + fc * src(r1, c1);
      dst(r, c) = (1.0 - fr) * top + fr * bot;
    }
  }
  return dst;
}

ImageTensor preprocess_image(const ImageTensor& raw, int side) {
  if (raw.channels != 3) throw std::invalid_argument("channel mismatch");
  if (side < 16) throw std::invalid_argument("preprocess: side must be >= 16");
  if (!all_finite(raw)) throw std::invalid_argument("preprocess: non-finite pixels");
  ImageTensor out = bilinear_resize(raw, side, side);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c)
      for (int ch = 0; ch < 3; ++ch)
        out.at(r, c, ch) = (out.at(r, c, ch) - kChannelMean[ch]) / kChannelStd[ch];
  return out;
}

RealMap luminance(const ImageTensor& img) {
  RealMap out(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      double sum = 0.0;
      for (int ch = 0; ch < img.channels; ++ch) sum += img.at(r, c, ch);
      out(r, c) = sum / img.channels;
    }
  return out;
}

bool all_finite(const ImageTensor& img) {
  return std::all_of(img.pixels.begin(), img.pixels.end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace textseg
