#pragma once

#include <cstdint>

#include "textseg/weak_supervision.hpp"

namespace textseg {

/// Small 3-level convolutional encoder-decoder over the luminance channel,
/// predicting background/foreground per pixel. Stands in for a full-scale
/// segmentation network behind the SegmentationModel interface.
class ConvSegNet final : public SegmentationModel {
 public:
  explicit ConvSegNet(std::uint64_t seed, int base_channels = 4);
  ~ConvSegNet() override;
  ConvSegNet(const ConvSegNet&);
  ConvSegNet& operator=(const ConvSegNet&) = delete;

  int num_classes() const override { return 2; }
  ProbabilityMap predict(const ImageTensor& image) const override;
  double update(const ImageTensor& image, const BinaryMask& target,
                double learning_rate) override;
  std::vector<double> parameters() const override;
  void set_parameters(const std::vector<double>& params) override;
  std::unique_ptr<SegmentationModel> clone() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace textseg
