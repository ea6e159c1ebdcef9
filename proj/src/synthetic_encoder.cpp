#include "textseg/synthetic_encoder.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "textseg/rng.hpp"

namespace textseg {

namespace {

Eigen::VectorXd unit(const Eigen::VectorXd& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw std::runtime_error("synthetic encoder: zero vector");
  return v / n;
}

Eigen::MatrixXd seeded_gaussian(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols,
                                double scale) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

}  // namespace

SyntheticEncoder::SyntheticEncoder(std::uint64_t seed, int dim,
                                   std::optional<PlantedRegion> planted, int grid_rows,
                                   int grid_cols)
    : seed_(seed), dim_(dim), grid_rows_(grid_rows), grid_cols_(grid_cols),
      planted_(std::move(planted)) {
  if (dim < 4) throw std::invalid_argument("synthetic encoder: dim must be >= 4");
  if (grid_rows < 1 || grid_cols < 1)
    throw std::invalid_argument("synthetic encoder: empty patch grid");
  const int patches = grid_rows_ * grid_cols_;
  patch_probes_ = seeded_gaussian(mix_seed(seed_, 1), patches, dim_, 1.0);
  for (int p = 0; p < patches; ++p) patch_probes_.row(p).normalize();

  if (planted_) {
    const auto& r = *planted_;
    if (r.row0 < 0 || r.col0 < 0 || r.rows < 1 || r.cols < 1 ||
        r.row0 + r.rows > grid_rows_ || r.col0 + r.cols > grid_cols_)
      throw std::invalid_argument("synthetic encoder: planted region outside patch grid");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim_);
    for (int pr = r.row0; pr < r.row0 + r.rows; ++pr)
      for (int pc = r.col0; pc < r.col0 + r.cols; ++pc)
        mean += patch_probes_.row(pr * grid_cols_ + pc).transpose();
    planted_embedding_ = unit(mean / double(r.rows * r.cols));

    // Outside the region the probes carry no prompt-aligned signal: project
    // the planted direction out, so the region is the exact ground truth.
    for (int p = 0; p < patches; ++p) {
      const int pr = p / grid_cols_, pc = p % grid_cols_;
      if (pr >= r.row0 && pr < r.row0 + r.rows && pc >= r.col0 && pc < r.col0 + r.cols)
        continue;
      Eigen::VectorXd probe = patch_probes_.row(p).transpose();
      probe -= planted_embedding_ * planted_embedding_.dot(probe);
      patch_probes_.row(p) = unit(probe).transpose();
    }
  }

  w_image_ = seeded_gaussian(mix_seed(seed_, 2), dim_, kImageFeatureDim,
                             1.0 / std::sqrt(double(kImageFeatureDim)));
  w_text_ = seeded_gaussian(mix_seed(seed_, 3), dim_, kTextFeatureDim,
                            1.0 / std::sqrt(double(kTextFeatureDim)));
}

std::string SyntheticEncoder::params_version() const {
  std::ostringstream os;
  os << "synthetic-" << seed_ << "-u" << update_count_;
  return os.str();
}

Eigen::VectorXd SyntheticEncoder::image_features(const ImageTensor& image) const {
  if (image.height < 1 || image.width < 1)
    throw std::invalid_argument("synthetic encoder: empty image");
  const RealMap lum = luminance(image);
  const RealMap blocks = bilinear_resize(lum, 8, 8);
  Eigen::VectorXd f(kImageFeatureDim);
  for (int i = 0; i < 64; ++i) f(i) = blocks.data()[i];
  double mean = 0.0;
  for (double v : lum.data()) mean += v;
  mean /= double(lum.size());
  double var = 0.0;
  for (double v : lum.data()) var += (v - mean) * (v - mean);
  var /= double(lum.size());
  f(64) = mean;
  f(65) = std::sqrt(var);
  const double n = f.norm();
  return n > 0.0 ? Eigen::VectorXd(f / n) : f;
}

Eigen::VectorXd SyntheticEncoder::text_features(const TextPrompt& prompt) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kTextFeatureDim);
  std::istringstream words(prompt.text);
  std::string w;
  while (words >> w) f(static_cast<int>(hash_string(w) % kTextFeatureDim)) += 1.0;
  const double n = f.norm();
  if (n == 0.0) throw std::invalid_argument("synthetic encoder: empty prompt text");
  return f / n;
}

Eigen::MatrixXd SyntheticEncoder::patch_embeddings(const ImageTensor& image) const {
  if (image.height < 1 || image.width < 1)
    throw std::invalid_argument("synthetic encoder: empty image");
  return patch_probes_;
}

Eigen::VectorXd SyntheticEncoder::image_embedding(const ImageTensor& image) const {
  return unit(w_image_ * image_features(image));
}

Eigen::VectorXd SyntheticEncoder::text_embedding(const TextPrompt& prompt) const {
  if (planted_ && prompt.text == planted_->prompt_text) return planted_embedding_;
  return unit(w_text_ * text_features(prompt));
}

Eigen::VectorXd SyntheticEncoder::pool_patches(const Eigen::MatrixXd& patches) const {
  if (patches.rows() < 1 || patches.cols() != dim_)
    throw std::invalid_argument("synthetic encoder: bad patch matrix");
  return unit(patches.colwise().mean().transpose());
}

void SyntheticEncoder::apply_pair_gradients(const std::vector<const ImageTensor*>& images,
                                            const std::vector<const TextPrompt*>& prompts,
                                            const Eigen::MatrixXd& d_image,
                                            const Eigen::MatrixXd& d_text,
                                            double learning_rate) {
  if (images.size() != prompts.size() ||
      d_image.rows() != static_cast<Eigen::Index>(images.size()) ||
      d_text.rows() != static_cast<Eigen::Index>(images.size()))
    throw std::invalid_argument("apply_pair_gradients: inconsistent batch");

  Eigen::MatrixXd g_img = Eigen::MatrixXd::Zero(w_image_.rows(), w_image_.cols());
  Eigen::MatrixXd g_txt = Eigen::MatrixXd::Zero(w_text_.rows(), w_text_.cols());

  for (size_t i = 0; i < images.size(); ++i) {
    // emb = y / |y| with y = W x; chain the normalization Jacobian onto dL/demb.
    const Eigen::VectorXd xi = image_features(*images[i]);
    const Eigen::VectorXd yi = w_image_ * xi;
    const double ni = yi.norm();
    const Eigen::VectorXd ei = yi / ni;
    const Eigen::VectorXd gi = d_image.row(static_cast<Eigen::Index>(i)).transpose();
    const Eigen::VectorXd dyi = (gi - ei * ei.dot(gi)) / ni;
    g_img += dyi * xi.transpose();

    if (planted_ && prompts[i]->text == planted_->prompt_text) continue;
    const Eigen::VectorXd xt = text_features(*prompts[i]);
    const Eigen::VectorXd yt = w_text_ * xt;
    const double nt = yt.norm();
    const Eigen::VectorXd et = yt / nt;
    const Eigen::VectorXd gt = d_text.row(static_cast<Eigen::Index>(i)).transpose();
    const Eigen::VectorXd dyt = (gt - et * et.dot(gt)) / nt;
    g_txt += dyt * xt.transpose();
  }

  w_image_ -= learning_rate * g_img;
  w_text_ -= learning_rate * g_txt;
  ++update_count_;
}

std::vector<double> SyntheticEncoder::parameters() const {
  std::vector<double> out;
  out.reserve(w_image_.size() + w_text_.size());
  out.insert(out.end(), w_image_.data(), w_image_.data() + w_image_.size());
  out.insert(out.end(), w_text_.data(), w_text_.data() + w_text_.size());
  return out;
}

void SyntheticEncoder::set_parameters(const std::vector<double>& params) {
  if (params.size() != static_cast<size_t>(w_image_.size() + w_text_.size()))
    throw std::invalid_argument("set_parameters: size mismatch");
  std::copy(params.begin(), params.begin() + w_image_.size(), w_image_.data());
  std::copy(params.begin() + w_image_.size(), params.end(), w_text_.data());
}

std::shared_ptr<SyntheticEncoder> make_synthetic_encoder(std::uint64_t seed, int dim,
                                                         std::optional<PlantedRegion> planted,
                                                         int grid_rows, int grid_cols) {
  return std::make_shared<SyntheticEncoder>(seed, dim, std::move(planted), grid_rows,
                                            grid_cols);
}

BinaryMask planted_pixel_mask(const PlantedRegion& region, int grid_rows, int grid_cols,
                              int height, int width) {
  BinaryMask mask(height, width, 0);
  for (int r = 0; r < height; ++r) {
    const int pr = r * grid_rows / height;
    for (int c = 0; c < width; ++c) {
      const int pc = c * grid_cols / width;
      const bool inside = pr >= region.row0 && pr < region.row0 + region.rows &&
                          pc >= region.col0 && pc < region.col0 + region.cols;
      mask(r, c) = inside ? 1 : 0;
    }
  }
  return mask;
}

}  // namespace textseg
