#pragma once

#include <cstdint>
#include <vector>

#include "textseg/grid.hpp"
#include "textseg/image.hpp"
#include "textseg/text.hpp"

namespace textseg {

/// Paired image/caption corpus for desk-scale contrastive runs.
struct PairCorpus {
  std::vector<ImageTensor> images;
  std::vector<TextPrompt> prompts;

  size_t size() const { return images.size(); }
};

/// Two-cluster corpus: each pair shares a latent code rendered into the image
/// blocks and spelled into the caption words, with an "alpha"/"beta" cluster
/// split, so a linear dual encoder can learn to align pairs.
PairCorpus make_two_cluster_corpus(int n, std::uint64_t seed);

/// One image with a bright planted shape and its ground-truth mask.
struct ShapeSample {
  ImageTensor image;
  BinaryMask mask;
};

/// Noisy dark images with a single bright filled rectangle or disk.
std::vector<ShapeSample> make_shape_dataset(int n, int side, std::uint64_t seed);

}  // namespace textseg
