#pragma once

#include <fstream>
#include <vector>

#include "ctal/checkpoint.hpp"
#include "ctal/data.hpp"
#include "ctal/masking.hpp"
#include "ctal/model.hpp"
#include "ctal/optim.hpp"
#include "ctal/parallel.hpp"
#include "ctal/pooling.hpp"

namespace ctal {

struct PretrainConfig {
  long steps = 2000;
  int batch_size = 16;
  double lr = 5e-5;
  double warmup_frac = 0.1;
  uint64_t seed = 42;
  long checkpoint_every = 1000;
  int threads = 1;
  MlmOptions mlm;
  McamOptions mcam;

  long warmup_steps() const {
    const long w = static_cast<long>(warmup_frac * static_cast<double>(steps));
    return std::clamp<long>(w, 0, steps - 1);
  }
};

// Per-step loss report. Totals are sums over labeled positions normalized by
// the batch-global counts, so total == mlm + mcam exactly.
struct StepLosses {
  double total = 0, mlm = 0, mcam = 0;
  long mlm_positions = 0, mcam_frames = 0;
};

// Both plans for one item, derived from (seed, utterance id, step) so the
// corruption is re-sampled on every visit and independent of thread layout.
inline void plan_item(const LoadedExample& ex, long step, const PretrainConfig& cfg,
                      int vocab_size, MlmPlan* mlm_out, McamPlan* mcam_out) {
  Rng mlm_rng(split_seed(cfg.seed ^ 0x6d6c6dULL, ex.uid, static_cast<uint64_t>(step)));
  *mlm_out = plan_mlm(ex.ids, vocab_size, mlm_rng, cfg.mlm);
  Rng mcam_rng(split_seed(cfg.seed ^ 0x6d63616dULL, ex.uid, static_cast<uint64_t>(step)));
  *mcam_out = plan_mcam(static_cast<int>(ex.features.rows()), mcam_rng, cfg.mcam);
}

// Losses for one corrupted item, scaled so that summing the contributions
// over the batch yields the batch-mean objective. Raw sums are returned for
// the deterministic loss bookkeeping.
template <typename S>
struct ItemLossVars {
  Var<S> contribution;  // scalar; mlm/inv_mlm + mcam/inv_mcam parts
  double mlm_sum = 0;
  double mcam_sum = 0;
};

template <typename S>
ItemLossVars<S> pretrain_item_loss(CtalModel<S>& model, Graph<S>& g, const PairBatch& batch,
                                   const BatchLabels& labels, int b, double inv_mlm_count,
                                   double inv_mcam_elems, TrainMode mode = {}) {
  auto fwd = model.forward_pair(g, batch.token_ids[b], batch.audio[b], batch.text_mask[b],
                                batch.audio_mask[b], mode);
  ItemLossVars<S> out;
  bool has = false;
  if (!labels.mlm[b].empty()) {
    std::vector<int> positions, targets;
    positions.reserve(labels.mlm[b].size());
    for (const auto& [pos, original] : labels.mlm[b]) {
      positions.push_back(pos);
      targets.push_back(original);
    }
    auto logits = model.mlm_logits(g, select_rows(fwd.text_out, positions));
    auto ce = cross_entropy_sum(logits, targets);
    out.mlm_sum = static_cast<double>(ce.value()[0]);
    out.contribution = scale(ce, inv_mlm_count);
    has = true;
  }
  if (!labels.mcam_frames[b].empty()) {
    auto pred = model.mcam_predict(g, select_rows(fwd.audio_out, labels.mcam_frames[b]));
    Tensor<S> target({labels.mcam_original[b].rows(), labels.mcam_original[b].cols()});
    target.mat() = labels.mcam_original[b].template cast<S>();
    auto l1 = l1_sum(pred, std::move(target));
    out.mcam_sum = static_cast<double>(l1.value()[0]);
    auto part = scale(l1, inv_mcam_elems);
    out.contribution = has ? add(out.contribution, part) : part;
    has = true;
  }
  if (!has) out.contribution = g.scalar(S(0));
  return out;
}

// One full pre-training step: plan, corrupt, forward/backward over the batch
// (data-parallel with per-worker gradient sinks reduced in worker order),
// then one warmup-decay Adam update.
template <typename S>
StepLosses pretrain_step(CtalModel<S>& model, Adam<S>& opt,
                         const std::vector<const LoadedExample*>& items, long step,
                         const PretrainConfig& cfg, bool train_dropout = true) {
  const int n = static_cast<int>(items.size());
  if (n == 0) throw Error("pretrain_step: empty batch");

  std::vector<std::vector<int>> ids(n);
  std::vector<MatX<float>> feats(n);
  std::vector<MlmPlan> mlm_plans(n);
  std::vector<McamPlan> mcam_plans(n);
  for (int i = 0; i < n; ++i) {
    ids[i] = items[i]->ids;
    feats[i] = items[i]->features;
    plan_item(*items[i], step, cfg, model.config().vocab_size, &mlm_plans[i], &mcam_plans[i]);
  }
  PairBatch batch = PairBatch::collate(ids, feats);
  BatchLabels labels = apply_plans(batch, mlm_plans, mcam_plans);

  StepLosses losses;
  losses.mlm_positions = labels.total_mlm_positions();
  losses.mcam_frames = labels.total_mcam_frames();
  const double inv_mlm = losses.mlm_positions ? 1.0 / losses.mlm_positions : 0.0;
  const double inv_mcam =
      losses.mcam_frames
          ? 1.0 / (static_cast<double>(losses.mcam_frames) * model.config().audio_dim)
          : 0.0;

  model.params().zero_grads();
  const int workers = std::max(1, cfg.threads);
  std::vector<typename Graph<S>::GradSink> sinks;
  if (workers > 1)
    for (int w = 0; w < workers; ++w) sinks.emplace_back(model.params());
  std::vector<double> mlm_sums(n, 0), mcam_sums(n, 0);

  parallel_items(n, workers, [&](int b, int w) {
    Graph<S> g;
    Rng dropout_rng(split_seed(cfg.seed ^ 0xd70ULL, items[b]->uid, static_cast<uint64_t>(step)));
    TrainMode mode{train_dropout, &dropout_rng};
    auto item = pretrain_item_loss(model, g, batch, labels, b, inv_mlm, inv_mcam, mode);
    g.backward(item.contribution, workers > 1 ? &sinks[w] : nullptr);
    mlm_sums[b] = item.mlm_sum;
    mcam_sums[b] = item.mcam_sum;
  });
  for (auto& sink : sinks) sink.reduce_into(model.params());

  for (int b = 0; b < n; ++b) {
    losses.mlm += mlm_sums[b] * inv_mlm;
    losses.mcam += mcam_sums[b] * inv_mcam;
  }
  losses.total = losses.mlm + losses.mcam;
  if (!std::isfinite(losses.total)) {
    std::string uids;
    for (int b = 0; b < n; ++b) uids += (b ? "," : "") + std::to_string(items[b]->uid);
    throw NumericError("non-finite pre-training loss at step " + std::to_string(step) +
                       " (mlm=" + std::to_string(losses.mlm) +
                       ", mcam=" + std::to_string(losses.mcam) + ", uids=" + uids + ")");
  }

  const double lr = lr_linear_warmup_decay(std::min(step, cfg.steps), cfg.warmup_steps(),
                                           cfg.steps, cfg.lr);
  opt.step(model.params(), lr);
  return losses;
}

// Streaming loop over the dataset: shuffled batches per epoch, a loss line
// per step, periodic checkpoints plus a final one.
template <typename S>
void run_pretraining(CtalModel<S>& model, const std::vector<LoadedExample>& data,
                     const PretrainConfig& cfg, const std::string& out_dir) {
  if (data.empty()) throw Error("run_pretraining: no usable examples");
  Adam<S> opt({.lr = cfg.lr});

  std::ofstream csv(out_dir + "/loss.csv");
  if (!csv) throw IoError("cannot create loss log in " + out_dir);
  csv << "step,lr,total,mlm,mcam\n";

  auto save = [&](const std::string& tag) {
    auto kv = model_config_kv(model.config());
    kv.push_back({"kind", "pretrain"});
    kv.push_back({"seed", std::to_string(cfg.seed)});
    save_checkpoint(out_dir + "/checkpoint_" + tag + ".ckpt", model.params(), kv);
  };

  std::vector<int> order(data.size());
  for (size_t i = 0; i < data.size(); ++i) order[i] = static_cast<int>(i);
  long step = 0;
  for (long epoch = 0; step < cfg.steps; ++epoch) {
    Rng shuffle_rng(split_seed(cfg.seed ^ 0x0da7aULL, 0, static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_int(shuffle_rng, 0, static_cast<int>(i - 1))]);
    for (size_t at = 0; at < order.size() && step < cfg.steps; at += cfg.batch_size) {
      std::vector<const LoadedExample*> batch;
      for (size_t j = at; j < std::min(order.size(), at + cfg.batch_size); ++j)
        batch.push_back(&data[order[j]]);
      const auto losses = pretrain_step(model, opt, batch, step, cfg);
      const double lr = lr_linear_warmup_decay(std::min(step, cfg.steps), cfg.warmup_steps(),
                                               cfg.steps, cfg.lr);
      char line[160];
      std::snprintf(line, sizeof(line), "%ld,%.9g,%.9g,%.9g,%.9g\n", step, lr, losses.total,
                    losses.mlm, losses.mcam);
      csv << line;
      ++step;
      if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0)
        save(std::to_string(step));
    }
  }
  csv.flush();
  save("final");
}

}  // namespace ctal
