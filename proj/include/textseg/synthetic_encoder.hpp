#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "textseg/encoder.hpp"
#include "textseg/grid.hpp"

namespace textseg {

/// Rectangle of patches (grid coordinates, inclusive extents) whose mean patch
/// embedding is planted as the embedding of `prompt_text`. Gives attribution
/// tests an exact ground-truth target.
struct PlantedRegion {
  int row0 = 0;
  int col0 = 0;
  int rows = 1;
  int cols = 1;
  std::string prompt_text = "planted target region";
};

/// Deterministic toy dual encoder.
///
/// Patch embeddings are seeded positional probes (independent of pixel
/// content); pooled image and text embeddings go through trainable linear
/// projections over fixed featurizers, so contrastive fine-tuning has real
/// parameters to move. With a planted region, the designated prompt embeds
/// exactly to the normalized mean of the region's patch probes.
class SyntheticEncoder final : public TrainableEncoder {
 public:
  SyntheticEncoder(std::uint64_t seed, int dim, std::optional<PlantedRegion> planted,
                   int grid_rows, int grid_cols);

  int dim() const override { return dim_; }
  std::string params_version() const override;
  std::pair<int, int> patch_grid() const override { return {grid_rows_, grid_cols_}; }
  Eigen::MatrixXd patch_embeddings(const ImageTensor& image) const override;
  Eigen::VectorXd image_embedding(const ImageTensor& image) const override;
  Eigen::VectorXd text_embedding(const TextPrompt& prompt) const override;
  Eigen::VectorXd pool_patches(const Eigen::MatrixXd& patches) const override;

  void apply_pair_gradients(const std::vector<const ImageTensor*>& images,
                            const std::vector<const TextPrompt*>& prompts,
                            const Eigen::MatrixXd& d_image,
                            const Eigen::MatrixXd& d_text,
                            double learning_rate) override;
  std::vector<double> parameters() const override;
  void set_parameters(const std::vector<double>& params) override;

  const std::optional<PlantedRegion>& planted() const { return planted_; }

  /// Fixed image featurizer: 8x8 block luminances plus global mean/std, unit norm.
  Eigen::VectorXd image_features(const ImageTensor& image) const;
  /// Fixed text featurizer: hashed bag of words, unit norm.
  Eigen::VectorXd text_features(const TextPrompt& prompt) const;

  static constexpr int kImageFeatureDim = 66;
  static constexpr int kTextFeatureDim = 128;

 private:
  std::uint64_t seed_;
  int dim_;
  int grid_rows_;
  int grid_cols_;
  std::optional<PlantedRegion> planted_;
  Eigen::MatrixXd patch_probes_;     // P x d, unit rows
  Eigen::VectorXd planted_embedding_;
  Eigen::MatrixXd w_image_;          // d x kImageFeatureDim, trainable
  Eigen::MatrixXd w_text_;           // d x kTextFeatureDim, trainable
  std::uint64_t update_count_ = 0;
};

/// Factory per the encoder contract; grid defaults to 14 x 14 (224-pixel
/// inputs with 16-pixel patches).
std::shared_ptr<SyntheticEncoder> make_synthetic_encoder(
    std::uint64_t seed, int dim, std::optional<PlantedRegion> planted = std::nullopt,
    int grid_rows = 14, int grid_cols = 14);

/// Pixel-space mask of a planted patch region for an H x W image.
BinaryMask planted_pixel_mask(const PlantedRegion& region, int grid_rows, int grid_cols,
                              int height, int width);

}  // namespace textseg
