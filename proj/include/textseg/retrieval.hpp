#pragma once

#include <cstdint>

#include "textseg/encoder.hpp"
#include "textseg/toy_data.hpp"

namespace textseg {

struct TopKAccuracy {
  double image_to_text = 0.0;  // fraction in [0, 1]
  double text_to_image = 0.0;
};

/// Top-k matching accuracy within one batch: a hit when fewer than k
/// candidates score strictly above the true pair.
TopKAccuracy retrieval_topk(const EmbeddingBatch& batch, int k);

struct DirectionStats {
  double top1_mean = 0.0, top1_std = 0.0;
  double top2_mean = 0.0, top2_std = 0.0;
};

struct RetrievalReport {
  DirectionStats image_to_text;  // percentages
  DirectionStats text_to_image;
  int runs = 0;
  int batch_size = 0;
  std::uint64_t seed = 0;
};

/// Shuffle-and-batch protocol: `runs` shuffles of the pair list, partitioned
/// into `batch_size` batches (remainder dropped), top-1/top-2 accuracy
/// aggregated as mean/std over runs.
RetrievalReport retrieval_protocol(const Encoder& enc, const PairCorpus& pairs,
                                   int runs = 5, int batch_size = 50,
                                   std::uint64_t seed = 0);

}  // namespace textseg
