#include "ctal/masking.hpp"

#include <algorithm>
#include <cmath>

#include "ctal/errors.hpp"

namespace ctal {

PairBatch PairBatch::collate(const std::vector<std::vector<int>>& ids,
                             const std::vector<MatX<float>>& feats) {
  if (ids.size() != feats.size())
    throw DimensionError("collate: " + std::to_string(ids.size()) + " token sequences vs " +
                         std::to_string(feats.size()) + " feature matrices");
  PairBatch b;
  b.batch = static_cast<int>(ids.size());
  Index dim = b.batch ? feats[0].cols() : 0;
  for (int i = 0; i < b.batch; ++i) {
    b.text_len = std::max(b.text_len, static_cast<int>(ids[i].size()));
    b.audio_len = std::max(b.audio_len, static_cast<int>(feats[i].rows()));
    if (feats[i].cols() != dim) throw DimensionError("collate: feature dim mismatch");
  }
  for (int i = 0; i < b.batch; ++i) {
    std::vector<int> row = ids[i];
    std::vector<uint8_t> tm(b.text_len, 0);
    std::fill(tm.begin(), tm.begin() + row.size(), 1);
    row.resize(b.text_len, Specials::kPad);
    b.token_ids.push_back(std::move(row));
    b.text_mask.push_back(std::move(tm));

    MatX<float> padded = MatX<float>::Zero(b.audio_len, dim);
    padded.topRows(feats[i].rows()) = feats[i];
    std::vector<uint8_t> am(b.audio_len, 0);
    std::fill(am.begin(), am.begin() + feats[i].rows(), 1);
    b.audio.push_back(std::move(padded));
    b.audio_mask.push_back(std::move(am));
  }
  return b;
}

MlmPlan plan_mlm(const std::vector<int>& token_ids, int vocab_size, Rng& rng,
                 const MlmOptions& opt) {
  if (vocab_size <= Specials::kByteBase)
    throw Error("plan_mlm: vocab has no maskable tokens");
  MlmPlan plan;
  for (size_t pos = 0; pos < token_ids.size(); ++pos) {
    if (Specials::is_special(token_ids[pos])) continue;
    if (!bernoulli(rng, opt.select_prob)) continue;
    MlmPlan::Item item;
    item.pos = static_cast<int>(pos);
    item.original_id = token_ids[pos];
    item.replacement_id = -1;
    const double u = uniform_real(rng);
    if (u < opt.mask_prob) {
      item.action = MlmPlan::Action::MaskToken;
    } else if (u < opt.mask_prob + opt.random_prob) {
      item.action = MlmPlan::Action::RandomToken;
      item.replacement_id = uniform_int(rng, Specials::kByteBase, vocab_size - 1);
    } else {
      item.action = MlmPlan::Action::Keep;
    }
    plan.items.push_back(item);
  }
  return plan;
}

std::vector<int> McamPlan::masked_frames() const {
  std::vector<int> frames;
  for (const auto& sel : selected) {
    const auto& seg = segments[sel.segment];
    for (int t = seg.begin; t < seg.end; ++t) frames.push_back(t);
  }
  std::sort(frames.begin(), frames.end());
  return frames;
}

McamPlan plan_mcam(int num_frames, Rng& rng, const McamOptions& opt) {
  if (num_frames < 1) throw Error("plan_mcam: need at least one frame");
  McamPlan plan;
  // Greedy left-to-right split; the final short tail is its own segment.
  int pos = 0;
  while (pos < num_frames) {
    const int len = uniform_int(rng, opt.min_segment, opt.max_segment);
    const int end = std::min(pos + len, num_frames);
    plan.segments.push_back({pos, end});
    pos = end;
  }

  const int n = static_cast<int>(plan.segments.size());
  int k = static_cast<int>(std::lround(opt.select_frac * n));
  k = std::max(1, std::min(k, n));

  // Partial Fisher-Yates for k distinct segment indices.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  for (int i = 0; i < k; ++i) std::swap(order[i], order[uniform_int(rng, i, n - 1)]);
  order.resize(k);
  std::sort(order.begin(), order.end());

  for (int seg_idx : order) {
    McamPlan::Selected sel;
    sel.segment = seg_idx;
    const double u = uniform_real(rng);
    if (u < opt.zero_prob) {
      sel.action = McamPlan::Action::Zero;
    } else if (u < opt.zero_prob + opt.replace_prob) {
      sel.action = McamPlan::Action::Replace;
      const auto& seg = plan.segments[seg_idx];
      const int len = seg.end - seg.begin;
      sel.replacement_frames.resize(len);
      if (opt.contiguous_replacement) {
        const int start = uniform_int(rng, 0, num_frames - len);
        for (int i = 0; i < len; ++i) sel.replacement_frames[i] = start + i;
      } else {
        for (int i = 0; i < len; ++i)
          sel.replacement_frames[i] = uniform_int(rng, 0, num_frames - 1);
      }
    } else {
      sel.action = McamPlan::Action::Keep;
    }
    plan.selected.push_back(std::move(sel));
  }
  return plan;
}

long BatchLabels::total_mlm_positions() const {
  long n = 0;
  for (const auto& item : mlm) n += static_cast<long>(item.size());
  return n;
}

long BatchLabels::total_mcam_frames() const {
  long n = 0;
  for (const auto& item : mcam_frames) n += static_cast<long>(item.size());
  return n;
}

BatchLabels apply_plans(PairBatch& batch, const std::vector<MlmPlan>& mlm_plans,
                        const std::vector<McamPlan>& mcam_plans) {
  if (static_cast<int>(mlm_plans.size()) != batch.batch ||
      static_cast<int>(mcam_plans.size()) != batch.batch)
    throw DimensionError("apply_plans: plan count does not match batch size");

  BatchLabels labels;
  labels.mlm.resize(batch.batch);
  labels.mcam_frames.resize(batch.batch);
  labels.mcam_original.resize(batch.batch);

  for (int b = 0; b < batch.batch; ++b) {
    auto& ids = batch.token_ids[b];
    for (const auto& item : mlm_plans[b].items) {
      if (item.pos < 0 || item.pos >= static_cast<int>(ids.size()) ||
          !batch.text_mask[b][item.pos])
        throw DimensionError("apply_plans: token position " + std::to_string(item.pos) +
                             " outside the real sequence");
      switch (item.action) {
        case MlmPlan::Action::MaskToken: ids[item.pos] = Specials::kMask; break;
        case MlmPlan::Action::RandomToken: ids[item.pos] = item.replacement_id; break;
        case MlmPlan::Action::Keep: break;
      }
      labels.mlm[b].emplace_back(item.pos, item.original_id);
    }

    auto& feats = batch.audio[b];
    const MatX<float> original = feats;  // corruption reads pristine rows
    const auto frames = mcam_plans[b].masked_frames();
    for (int t : frames)
      if (t < 0 || t >= batch.audio_len || !batch.audio_mask[b][t])
        throw DimensionError("apply_plans: frame " + std::to_string(t) +
                             " outside the real audio");
    labels.mcam_frames[b] = frames;
    labels.mcam_original[b].resize(static_cast<Index>(frames.size()), feats.cols());
    for (size_t i = 0; i < frames.size(); ++i)
      labels.mcam_original[b].row(static_cast<Index>(i)) = original.row(frames[i]);

    for (const auto& sel : mcam_plans[b].selected) {
      const auto& seg = mcam_plans[b].segments[sel.segment];
      switch (sel.action) {
        case McamPlan::Action::Zero:
          feats.middleRows(seg.begin, seg.end - seg.begin).setZero();
          break;
        case McamPlan::Action::Replace:
          for (int i = 0; i < seg.end - seg.begin; ++i)
            feats.row(seg.begin + i) = original.row(sel.replacement_frames[i]);
          break;
        case McamPlan::Action::Keep: break;
      }
    }
  }
  return labels;
}

}  // namespace ctal
