#pragma once

#include <cstdint>
#include <vector>

#include "ctal/bbpe.hpp"
#include "ctal/rng.hpp"
#include "ctal/tensor.hpp"

namespace ctal {

// A batch of (token ids, audio features) pairs padded to common lengths.
// Masks flag real positions; padded positions carry <pad> / zero rows and
// must contribute nothing downstream.
struct PairBatch {
  int batch = 0;
  int text_len = 0;   // padded T (includes <s>/</s>)
  int audio_len = 0;  // padded frame count

  std::vector<std::vector<int>> token_ids;       // [B][T]
  std::vector<std::vector<uint8_t>> text_mask;   // [B][T], 1 = real
  std::vector<MatX<float>> audio;                // B matrices, audio_len x dim
  std::vector<std::vector<uint8_t>> audio_mask;  // [B][audio_len]

  static PairBatch collate(const std::vector<std::vector<int>>& ids,
                           const std::vector<MatX<float>>& feats);
};

// Which tokens get corrupted and how. Kept tokens still carry labels.
struct MlmPlan {
  enum class Action : uint8_t { MaskToken, RandomToken, Keep };
  struct Item {
    int pos;
    Action action;
    int original_id;
    int replacement_id;  // only used for RandomToken
  };
  std::vector<Item> items;

  bool empty() const { return items.empty(); }
};

struct MlmOptions {
  double select_prob = 0.15;
  double mask_prob = 0.80;    // of selected
  double random_prob = 0.10;  // of selected; remainder kept
};

// Fresh plan per visit; specials are never selected.
MlmPlan plan_mlm(const std::vector<int>& token_ids, int vocab_size, Rng& rng,
                 const MlmOptions& opt = {});

// Segment-level corruption of the audio stream.
struct McamPlan {
  enum class Action : uint8_t { Zero, Replace, Keep };
  struct Segment {
    int begin, end;  // [begin, end)
  };
  struct Selected {
    int segment;  // index into segments
    Action action;
    std::vector<int> replacement_frames;  // same length as the segment when replacing
  };
  std::vector<Segment> segments;
  std::vector<Selected> selected;

  bool empty() const { return selected.empty(); }
  // Sorted union of all selected segments' frame indices.
  std::vector<int> masked_frames() const;
};

struct McamOptions {
  int min_segment = 20;
  int max_segment = 50;
  double select_frac = 0.15;
  double zero_prob = 0.80;
  double replace_prob = 0.10;
  bool contiguous_replacement = true;  // false = independent random frames
};

McamPlan plan_mcam(int num_frames, Rng& rng, const McamOptions& opt = {});

// Labels produced alongside the corrupted batch.
struct BatchLabels {
  // Per item: (position, original id) for every planned token.
  std::vector<std::vector<std::pair<int, int>>> mlm;
  // Per item: masked frame indices + original rows at those frames.
  std::vector<std::vector<int>> mcam_frames;
  std::vector<MatX<float>> mcam_original;  // rows align with mcam_frames

  long total_mlm_positions() const;
  long total_mcam_frames() const;
};

// Applies the plans in place and returns the label set. Plans must match the
// batch's true (unpadded) lengths.
BatchLabels apply_plans(PairBatch& batch, const std::vector<MlmPlan>& mlm_plans,
                        const std::vector<McamPlan>& mcam_plans);

}  // namespace ctal
