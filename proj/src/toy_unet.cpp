#include "textseg/toy_unet.hpp"

#include <cmath>
#include <stdexcept>

#include "textseg/errors.hpp"
#include "textseg/rng.hpp"

namespace textseg {

namespace {

struct Tensor3 {
  int c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_)
      : c(c_), h(h_), w(w_), data(static_cast<size_t>(c_) * h_ * w_, 0.0) {}

  double& at(int ch, int r, int col) {
    return data[(static_cast<size_t>(ch) * h + r) * w + col];
  }
  double at(int ch, int r, int col) const {
    return data[(static_cast<size_t>(ch) * h + r) * w + col];
  }
};

// Square convolution with same-size padding (kernel 3) or pointwise (kernel 1).
struct Conv {
  int in = 0, out = 0, k = 3;
  std::vector<double> weights;  // out x in x k x k
  std::vector<double> bias;     // out
  std::vector<double> gw, gb;   // gradient accumulators
  std::vector<double> vw, vb;   // momentum buffers

  Conv() = default;
  Conv(int in_, int out_, int k_, Rng& rng) : in(in_), out(out_), k(k_) {
    weights.resize(static_cast<size_t>(out) * in * k * k);
    bias.assign(out, 0.0);
    const double scale = std::sqrt(2.0 / (in * k * k));
    for (auto& w : weights) w = scale * rng.normal();
    gw.assign(weights.size(), 0.0);
    gb.assign(bias.size(), 0.0);
    vw.assign(weights.size(), 0.0);
    vb.assign(bias.size(), 0.0);
  }

  double& wgt(int o, int i, int dr, int dc) {
    return weights[((static_cast<size_t>(o) * in + i) * k + dr) * k + dc];
  }
  double wgt(int o, int i, int dr, int dc) const {
    return weights[((static_cast<size_t>(o) * in + i) * k + dr) * k + dc];
  }
  double& gwgt(int o, int i, int dr, int dc) {
    return gw[((static_cast<size_t>(o) * in + i) * k + dr) * k + dc];
  }

  Tensor3 forward(const Tensor3& x) const {
    const int pad = k / 2;
    Tensor3 y(out, x.h, x.w);
    for (int o = 0; o < out; ++o)
      for (int r = 0; r < x.h; ++r)
        for (int col = 0; col < x.w; ++col) {
          double acc = bias[o];
          for (int i = 0; i < in; ++i)
            for (int dr = 0; dr < k; ++dr)
              for (int dc = 0; dc < k; ++dc) {
                const int sr = r + dr - pad, sc = col + dc - pad;
                if (sr < 0 || sr >= x.h || sc < 0 || sc >= x.w) continue;
                acc += wgt(o, i, dr, dc) * x.at(i, sr, sc);
              }
          y.at(o, r, col) = acc;
        }
    return y;
  }

  // Accumulates weight/bias gradients and returns the input gradient.
  Tensor3 backward(const Tensor3& x, const Tensor3& dy) {
    const int pad = k / 2;
    Tensor3 dx(x.c, x.h, x.w);
    for (int o = 0; o < out; ++o)
      for (int r = 0; r < x.h; ++r)
        for (int col = 0; col < x.w; ++col) {
          const double g = dy.at(o, r, col);
          if (g == 0.0) continue;
          gb[o] += g;
          for (int i = 0; i < in; ++i)
            for (int dr = 0; dr < k; ++dr)
              for (int dc = 0; dc < k; ++dc) {
                const int sr = r + dr - pad, sc = col + dc - pad;
                if (sr < 0 || sr >= x.h || sc < 0 || sc >= x.w) continue;
                gwgt(o, i, dr, dc) += g * x.at(i, sr, sc);
                dx.at(i, sr, sc) += g * wgt(o, i, dr, dc);
              }
        }
    return dx;
  }

  // SGD with momentum, the optimizer family of the full-scale trainers this
  // model stands in for.
  void step(double lr) {
    constexpr double kMomentum = 0.9;
    for (size_t i = 0; i < weights.size(); ++i) {
      vw[i] = kMomentum * vw[i] + gw[i];
      weights[i] -= lr * vw[i];
      gw[i] = 0.0;
    }
    for (size_t i = 0; i < bias.size(); ++i) {
      vb[i] = kMomentum * vb[i] + gb[i];
      bias[i] -= lr * vb[i];
      gb[i] = 0.0;
    }
  }
};

constexpr double kLeakySlope = 0.01;

Tensor3 relu(const Tensor3& x) {
  Tensor3 y = x;
  for (auto& v : y.data) v = v > 0.0 ? v : kLeakySlope * v;
  return y;
}

Tensor3 relu_backward(const Tensor3& pre, const Tensor3& dy) {
  Tensor3 dx = dy;
  for (size_t i = 0; i < dx.data.size(); ++i)
    if (pre.data[i] <= 0.0) dx.data[i] *= kLeakySlope;
  return dx;
}

Tensor3 avgpool2(const Tensor3& x) {
  Tensor3 y(x.c, x.h / 2, x.w / 2);
  for (int c = 0; c < x.c; ++c)
    for (int r = 0; r < y.h; ++r)
      for (int col = 0; col < y.w; ++col)
        y.at(c, r, col) = 0.25 * (x.at(c, 2 * r, 2 * col) + x.at(c, 2 * r, 2 * col + 1) +
                                  x.at(c, 2 * r + 1, 2 * col) +
                                  x.at(c, 2 * r + 1, 2 * col + 1));
  return y;
}

Tensor3 avgpool2_backward(const Tensor3& dy, int h, int w) {
  Tensor3 dx(dy.c, h, w);
  for (int c = 0; c < dy.c; ++c)
    for (int r = 0; r < dy.h; ++r)
      for (int col = 0; col < dy.w; ++col) {
        const double g = 0.25 * dy.at(c, r, col);
        dx.at(c, 2 * r, 2 * col) = g;
        dx.at(c, 2 * r, 2 * col + 1) = g;
        dx.at(c, 2 * r + 1, 2 * col) = g;
        dx.at(c, 2 * r + 1, 2 * col + 1) = g;
      }
  return dx;
}

Tensor3 upsample2(const Tensor3& x) {
  Tensor3 y(x.c, x.h * 2, x.w * 2);
  for (int c = 0; c < x.c; ++c)
    for (int r = 0; r < y.h; ++r)
      for (int col = 0; col < y.w; ++col) y.at(c, r, col) = x.at(c, r / 2, col / 2);
  return y;
}

Tensor3 upsample2_backward(const Tensor3& dy) {
  Tensor3 dx(dy.c, dy.h / 2, dy.w / 2);
  for (int c = 0; c < dy.c; ++c)
    for (int r = 0; r < dy.h; ++r)
      for (int col = 0; col < dy.w; ++col) dx.at(c, r / 2, col / 2) += dy.at(c, r, col);
  return dx;
}

constexpr double kDiceEps = 1.0;

}  // namespace

struct ConvSegNet::Impl {
  std::uint64_t seed;
  int base;
  Conv enc1, enc2, mid, dec1, dec2, head;

  explicit Impl(std::uint64_t seed_, int base_) : seed(seed_), base(base_) {
    Rng rng(mix_seed(seed_, 0x636f6e76ULL));
    enc1 = Conv(1, base, 3, rng);
    enc2 = Conv(base, 2 * base, 3, rng);
    mid = Conv(2 * base, 4 * base, 3, rng);
    dec1 = Conv(4 * base, 2 * base, 3, rng);
    dec2 = Conv(2 * base, base, 3, rng);
    head = Conv(base, 2, 1, rng);
  }

  struct Activations {
    Tensor3 input;
    Tensor3 z1, a1, p1;
    Tensor3 z2, a2, p2;
    Tensor3 z3, a3, u1;
    Tensor3 z4, a4, u2;
    Tensor3 z5, a5;
    Tensor3 logits;
  };

  Activations forward(const ImageTensor& image) const {
    if (image.height % 4 != 0 || image.width % 4 != 0)
      throw std::invalid_argument("segmentation model: image sides must be multiples of 4");
    const RealMap lum = luminance(image);
    Activations act;
    act.input = Tensor3(1, image.height, image.width);
    for (int r = 0; r < image.height; ++r)
      for (int c = 0; c < image.width; ++c) act.input.at(0, r, c) = lum(r, c);

    act.z1 = enc1.forward(act.input);
    act.a1 = relu(act.z1);
    act.p1 = avgpool2(act.a1);
    act.z2 = enc2.forward(act.p1);
    act.a2 = relu(act.z2);
    act.p2 = avgpool2(act.a2);
    act.z3 = mid.forward(act.p2);
    act.a3 = relu(act.z3);
    act.u1 = upsample2(act.a3);
    act.z4 = dec1.forward(act.u1);
    act.a4 = relu(act.z4);
    act.u2 = upsample2(act.a4);
    act.z5 = dec2.forward(act.u2);
    act.a5 = relu(act.z5);
    act.logits = head.forward(act.a5);
    return act;
  }

  static ProbabilityMap softmax(const Tensor3& logits) {
    ProbabilityMap prob(logits.h, logits.w, 2);
    for (int r = 0; r < logits.h; ++r)
      for (int c = 0; c < logits.w; ++c) {
        const double a = logits.at(0, r, c), b = logits.at(1, r, c);
        const double m = std::max(a, b);
        const double ea = std::exp(a - m), eb = std::exp(b - m);
        prob.at(r, c, 0) = ea / (ea + eb);
        prob.at(r, c, 1) = eb / (ea + eb);
      }
    return prob;
  }
};

ConvSegNet::ConvSegNet(std::uint64_t seed, int base_channels)
    : impl_(std::make_unique<Impl>(seed, base_channels)) {}

ConvSegNet::~ConvSegNet() = default;

ConvSegNet::ConvSegNet(const ConvSegNet& other) : impl_(std::make_unique<Impl>(*other.impl_)) {}

ProbabilityMap ConvSegNet::predict(const ImageTensor& image) const {
  return Impl::softmax(impl_->forward(image).logits);
}

double ConvSegNet::update(const ImageTensor& image, const BinaryMask& target,
                          double learning_rate) {
  if (image.height != target.rows() || image.width != target.cols())
    throw std::invalid_argument("segmentation model: image/mask shape mismatch");
  Impl::Activations act = impl_->forward(image);
  const ProbabilityMap prob = Impl::softmax(act.logits);
  const int h = image.height, w = image.width;
  const double npx = double(h) * w;

  // Pixelwise cross-entropy (mean) + soft-Dice on the foreground class.
  double ce = 0.0, inter = 0.0, psum = 0.0, ysum = 0.0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const int y = target(r, c) ? 1 : 0;
      ce -= std::log(std::max(prob.at(r, c, y), 1e-12));
      inter += prob.at(r, c, 1) * y;
      psum += prob.at(r, c, 1);
      ysum += y;
    }
  ce /= npx;
  const double dice_num = 2.0 * inter + kDiceEps;
  const double dice_den = psum + ysum + kDiceEps;
  const double loss = ce + 1.0 - dice_num / dice_den;
  if (!std::isfinite(loss)) throw NumericError("segmentation loss is non-finite");

  // d(loss)/d(logits) through softmax for both terms.
  Tensor3 dlogits(2, h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const int y = target(r, c) ? 1 : 0;
      const double p0 = prob.at(r, c, 0), p1 = prob.at(r, c, 1);
      const double ddice_dp1 =
          -(2.0 * y * dice_den - dice_num) / (dice_den * dice_den);
      // CE: (p - onehot)/npx; Dice reaches logits via p1(delta - p).
      dlogits.at(0, r, c) = (p0 - (y == 0 ? 1.0 : 0.0)) / npx + ddice_dp1 * (-p1 * p0);
      dlogits.at(1, r, c) = (p1 - (y == 1 ? 1.0 : 0.0)) / npx + ddice_dp1 * (p1 * (1.0 - p1));
    }

  Tensor3 d = impl_->head.backward(act.a5, dlogits);
  d = relu_backward(act.z5, d);
  d = impl_->dec2.backward(act.u2, d);
  d = upsample2_backward(d);
  d = relu_backward(act.z4, d);
  d = impl_->dec1.backward(act.u1, d);
  d = upsample2_backward(d);
  d = relu_backward(act.z3, d);
  d = impl_->mid.backward(act.p2, d);
  d = avgpool2_backward(d, act.a2.h, act.a2.w);
  d = relu_backward(act.z2, d);
  d = impl_->enc2.backward(act.p1, d);
  d = avgpool2_backward(d, act.a1.h, act.a1.w);
  d = relu_backward(act.z1, d);
  impl_->enc1.backward(act.input, d);

  impl_->enc1.step(learning_rate);
  impl_->enc2.step(learning_rate);
  impl_->mid.step(learning_rate);
  impl_->dec1.step(learning_rate);
  impl_->dec2.step(learning_rate);
  impl_->head.step(learning_rate);
  return loss;
}

std::vector<double> ConvSegNet::parameters() const {
  std::vector<double> out;
  for (const Conv* conv : {&impl_->enc1, &impl_->enc2, &impl_->mid, &impl_->dec1,
                           &impl_->dec2, &impl_->head}) {
    out.insert(out.end(), conv->weights.begin(), conv->weights.end());
    out.insert(out.end(), conv->bias.begin(), conv->bias.end());
  }
  return out;
}

void ConvSegNet::set_parameters(const std::vector<double>& params) {
  size_t pos = 0;
  for (Conv* conv : {&impl_->enc1, &impl_->enc2, &impl_->mid, &impl_->dec1, &impl_->dec2,
                     &impl_->head}) {
    if (pos + conv->weights.size() + conv->bias.size() > params.size())
      throw std::invalid_argument("set_parameters: size mismatch");
    std::copy(params.begin() + pos, params.begin() + pos + conv->weights.size(),
              conv->weights.begin());
    pos += conv->weights.size();
    std::copy(params.begin() + pos, params.begin() + pos + conv->bias.size(),
              conv->bias.begin());
    pos += conv->bias.size();
  }
  if (pos != params.size()) throw std::invalid_argument("set_parameters: size mismatch");
}

std::unique_ptr<SegmentationModel> ConvSegNet::clone() const {
  return std::make_unique<ConvSegNet>(*this);
}

}  // namespace textseg
