#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "textseg/image.hpp"
#include "textseg/text.hpp"

namespace textseg {

/// Aligned image/text embeddings in the shared space; row i of each matrix
/// belongs to pair i.
struct EmbeddingBatch {
  Eigen::MatrixXd image_embeddings;  // B x d
  Eigen::MatrixXd text_embeddings;   // B x d
  bool normalized = false;

  int batch_size() const { return static_cast<int>(image_embeddings.rows()); }
  int dim() const { return static_cast<int>(image_embeddings.cols()); }
};

/// Dual-encoder interface. Implementations must be immutable after
/// construction for inference purposes; all methods are safe to call
/// concurrently.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual int dim() const = 0;
  virtual std::string params_version() const = 0;

  /// Patch grid (rows, cols); {0, 0} when the encoder has no patch-level features.
  virtual std::pair<int, int> patch_grid() const = 0;

  /// Patch embeddings in the shared space, one row per patch, row-major over
  /// the grid. Throws if the encoder has no patch-level features.
  virtual Eigen::MatrixXd patch_embeddings(const ImageTensor& image) const = 0;

  /// Pooled (global) image embedding, unit norm.
  virtual Eigen::VectorXd image_embedding(const ImageTensor& image) const = 0;

  /// Text embedding, unit norm.
  virtual Eigen::VectorXd text_embedding(const TextPrompt& prompt) const = 0;

  /// Maps a (possibly perturbed) patch-embedding matrix to a pooled
  /// shared-space vector; the attribution stage masks patches and pools
  /// through this hook.
  virtual Eigen::VectorXd pool_patches(const Eigen::MatrixXd& patches) const = 0;
};

using EncoderHandle = std::shared_ptr<const Encoder>;

/// Encoder whose projection parameters can be updated by a trainer.
class TrainableEncoder : public Encoder {
 public:
  /// One gradient-descent step from per-row embedding gradients of a batch.
  /// d_image/d_text are B x d gradients w.r.t. the unit-normalized embeddings.
  virtual void apply_pair_gradients(const std::vector<const ImageTensor*>& images,
                                    const std::vector<const TextPrompt*>& prompts,
                                    const Eigen::MatrixXd& d_image,
                                    const Eigen::MatrixXd& d_text,
                                    double learning_rate) = 0;

  virtual std::vector<double> parameters() const = 0;
  virtual void set_parameters(const std::vector<double>& params) = 0;
};

/// Encodes aligned image/text pairs; rows are unit-normalized.
EmbeddingBatch encode_batch(const Encoder& enc,
                            const std::vector<ImageTensor>& images,
                            const std::vector<TextPrompt>& prompts);

/// Pointer variant used by the trainer to avoid copying images per batch.
EmbeddingBatch encode_batch(const Encoder& enc,
                            const std::vector<const ImageTensor*>& images,
                            const std::vector<const TextPrompt*>& prompts);

/// Mean of the individual prompt embeddings, re-normalized to unit length.
Eigen::VectorXd ensemble_prompt_embedding(const Encoder& enc,
                                          const std::vector<TextPrompt>& prompts);

}  // namespace textseg
