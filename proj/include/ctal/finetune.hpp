#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "ctal/checkpoint.hpp"
#include "ctal/data.hpp"
#include "ctal/metrics.hpp"
#include "ctal/model.hpp"
#include "ctal/optim.hpp"
#include "ctal/parallel.hpp"
#include "ctal/pooling.hpp"
#include "ctal/pretrain.hpp"

namespace ctal {

enum class TaskKind { Classification, Regression, Speaker };

struct TaskSpec {
  TaskKind kind = TaskKind::Classification;
  std::vector<std::string> classes;  // class names or speaker ids; empty for regression

  int output_dim() const {
    return kind == TaskKind::Regression ? 1 : static_cast<int>(classes.size());
  }

  int class_index(const std::string& label) const {
    auto it = std::find(classes.begin(), classes.end(), label);
    if (it == classes.end()) throw Error("label '" + label + "' not in the task's class set");
    return static_cast<int>(it - classes.begin());
  }

  static TaskKind parse_kind(const std::string& name) {
    if (name == "emotion") return TaskKind::Classification;
    if (name == "sentiment") return TaskKind::Regression;
    if (name == "speaker") return TaskKind::Speaker;
    throw ConfigError("unknown task: " + name + " (expected emotion|sentiment|speaker)");
  }

  // Class set = sorted unique labels of the training manifest.
  static TaskSpec from_examples(TaskKind kind, const std::vector<LoadedExample>& train) {
    TaskSpec spec;
    spec.kind = kind;
    if (kind == TaskKind::Regression) return spec;
    std::set<std::string> uniq;
    for (const auto& ex : train) uniq.insert(ex.label);
    spec.classes.assign(uniq.begin(), uniq.end());
    if (spec.classes.size() < 2)
      throw Error("classification task needs at least two classes, got " +
                  std::to_string(spec.classes.size()));
    return spec;
  }
};

// New parameters introduced for fine-tuning: audio attention pooling and the
// task projection over the fused representation.
template <typename S>
void add_finetune_params(ParamStore<S>& params, const ModelConfig& cfg, int output_dim,
                         uint64_t seed) {
  Rng rng(mix64(seed ^ 0xf17eULL));
  const Index h = cfg.hidden;
  params.create_normal("pool.audio.v", {h}, rng, cfg.init_std);
  params.create_normal("pool.audio.w", {h, h}, rng, cfg.init_std);
  params.create_normal("task.w", {2 * h, output_dim}, rng, cfg.init_std);
  params.create("task.b", {output_dim});
}

inline const std::vector<std::string>& finetune_fresh_prefixes() {
  static const std::vector<std::string> p = {"heads.", "pool.", "task."};
  return p;
}

template <typename S>
struct FinetuneForward {
  FusedRepresentation<S> rep;
  Var<S> output;  // [1 x output_dim]
};

template <typename S>
FinetuneForward<S> finetuned_forward_clamped(CtalModel<S>& model, Graph<S>& g,
                                             const std::vector<int>& ids,
                                             const MatX<float>& feats,
                                             std::vector<uint8_t> text_mask,
                                             std::vector<uint8_t> audio_mask,
                                             TrainMode mode) {
  auto fwd = model.forward_pair(g, ids, feats, text_mask, audio_mask, mode);
  // pooling sees the same truncation the encoder applied
  text_mask.resize(fwd.text_out.value().rows());
  audio_mask.resize(fwd.audio_out.value().rows());
  FinetuneForward<S> out;
  out.rep = fuse_streams(g, fwd.text_out, fwd.audio_out, g.leaf(model.params().at("pool.audio.v")),
                         g.leaf(model.params().at("pool.audio.w")), text_mask, audio_mask);
  out.output = linear(out.rep.h_fuse, g.leaf(model.params().at("task.w")),
                      g.leaf(model.params().at("task.b")));
  return out;
}

template <typename S>
FinetuneForward<S> finetune_forward(CtalModel<S>& model, Graph<S>& g,
                                    const std::vector<int>& ids, const MatX<float>& feats,
                                    const std::vector<uint8_t>& text_mask,
                                    const std::vector<uint8_t>& audio_mask,
                                    TrainMode mode = {}) {
  return finetuned_forward_clamped(model, g, ids, feats, text_mask, audio_mask, mode);
}

template <typename S>
FinetuneForward<S> finetune_forward(CtalModel<S>& model, Graph<S>& g,
                                    const LoadedExample& ex, TrainMode mode = {}) {
  std::vector<uint8_t> tm(ex.ids.size(), 1), am(ex.features.rows(), 1);
  return finetune_forward(model, g, ex.ids, ex.features, tm, am, mode);
}

// task_loss + orth_weight * orthogonality, for one example.
template <typename S>
Var<S> finetune_loss(Graph<S>& g, const FinetuneForward<S>& fwd, TaskKind kind,
                     int target_class, double target_score, double orth_weight) {
  Var<S> task;
  if (kind == TaskKind::Regression) {
    task = l1_sum(fwd.output, Tensor<S>::full({1, 1}, static_cast<S>(target_score)));
  } else {
    task = cross_entropy_sum(fwd.output, {target_class});
  }
  if (orth_weight == 0.0) return task;
  auto orth = orthogonal_loss(g, fwd.rep.h_attn_a, fwd.rep.h_attn_w, fwd.rep.h_max_a,
                              fwd.rep.h_max_w);
  return add(task, scale(orth, orth_weight));
}

struct FinetuneConfig {
  double lr = 1e-5;
  double min_lr = 0.0;
  double weight_decay = 0.01;
  double orth_weight = 1.0;
  int epochs = 20;
  int batch_size = 4;
  int threads = 1;
  uint64_t seed = 42;
  bool use_dropout = true;
};

struct FinetuneStats {
  double final_train_loss = 0;
  double train_accuracy = 0;  // classification tasks only
  long steps = 0;
};

// The identity embedding: h_fuse with dropout disabled.
template <typename S>
VecX<float> extract_identity_embedding(CtalModel<S>& model, const LoadedExample& ex) {
  Graph<S> g;
  auto fwd = finetune_forward(model, g, ex);
  return fwd.rep.h_fuse.value().flat().template cast<float>();
}

template <typename S>
int predict_class(CtalModel<S>& model, const LoadedExample& ex) {
  Graph<S> g;
  auto fwd = finetune_forward(model, g, ex);
  Index best = 0;
  fwd.output.value().flat().maxCoeff(&best);
  return static_cast<int>(best);
}

template <typename S>
double predict_score(CtalModel<S>& model, const LoadedExample& ex) {
  Graph<S> g;
  auto fwd = finetune_forward(model, g, ex);
  return static_cast<double>(fwd.output.value()[0]);
}

// AdamW with cosine annealing over epochs * ceil(n / batch) steps.
template <typename S>
FinetuneStats run_finetune(CtalModel<S>& model, const TaskSpec& task,
                           const std::vector<LoadedExample>& train, const FinetuneConfig& cfg,
                           const std::string& log_csv_path = "") {
  if (train.empty()) throw Error("run_finetune: no training examples");

  // Pre-resolved targets; label parsing fails fast here.
  std::vector<int> target_class(train.size(), 0);
  std::vector<double> target_score(train.size(), 0);
  for (size_t i = 0; i < train.size(); ++i) {
    if (task.kind == TaskKind::Regression)
      target_score[i] = std::stod(train[i].label);
    else
      target_class[i] = task.class_index(train[i].label);
  }

  AdamConfig acfg;
  acfg.lr = cfg.lr;
  acfg.weight_decay = cfg.weight_decay;
  acfg.decoupled = true;
  Adam<S> opt(acfg);

  const long steps_per_epoch =
      (static_cast<long>(train.size()) + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps = steps_per_epoch * cfg.epochs;

  std::ofstream csv;
  if (!log_csv_path.empty()) {
    csv.open(log_csv_path);
    csv << "epoch,loss,accuracy\n";
  }

  std::vector<int> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  FinetuneStats stats;
  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(split_seed(cfg.seed ^ 0xf7ULL, 1, static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_int(shuffle_rng, 0, static_cast<int>(i - 1))]);

    double epoch_loss = 0;
    long epoch_items = 0, epoch_hits = 0;
    for (size_t at = 0; at < order.size(); at += cfg.batch_size) {
      const size_t end = std::min(order.size(), at + cfg.batch_size);
      const int bsz = static_cast<int>(end - at);
      model.params().zero_grads();

      const int workers = std::max(1, cfg.threads);
      std::vector<typename Graph<S>::GradSink> sinks;
      if (workers > 1)
        for (int w = 0; w < workers; ++w) sinks.emplace_back(model.params());
      std::vector<double> item_loss(bsz, 0);
      std::vector<uint8_t> item_hit(bsz, 0);

      parallel_items(bsz, workers, [&](int j, int w) {
        const int idx = order[at + j];
        Graph<S> g;
        Rng dropout_rng(split_seed(cfg.seed ^ 0xd8ULL, train[idx].uid,
                                   static_cast<uint64_t>(step)));
        TrainMode mode{cfg.use_dropout, &dropout_rng};
        auto fwd = finetune_forward(model, g, train[idx], mode);
        auto loss = finetune_loss(g, fwd, task.kind, target_class[idx], target_score[idx],
                                  cfg.orth_weight);
        auto scaled = scale(loss, 1.0 / bsz);
        g.backward(scaled, workers > 1 ? &sinks[w] : nullptr);
        item_loss[j] = static_cast<double>(loss.value()[0]);
        if (task.kind != TaskKind::Regression) {
          Index best = 0;
          fwd.output.value().flat().maxCoeff(&best);
          item_hit[j] = best == target_class[idx];
        }
      });
      for (auto& sink : sinks) sink.reduce_into(model.params());

      for (int j = 0; j < bsz; ++j) {
        epoch_loss += item_loss[j];
        epoch_hits += item_hit[j];
      }
      epoch_items += bsz;

      const double lr = lr_cosine_anneal(step, total_steps, cfg.lr, cfg.min_lr);
      opt.step(model.params(), lr);
      ++step;
    }

    stats.final_train_loss = epoch_loss / epoch_items;
    stats.train_accuracy =
        task.kind == TaskKind::Regression ? 0.0 : static_cast<double>(epoch_hits) / epoch_items;
    if (csv.is_open()) {
      char line[96];
      std::snprintf(line, sizeof(line), "%d,%.9g,%.9g\n", epoch, stats.final_train_loss,
                    stats.train_accuracy);
      csv << line;
    }
  }
  stats.steps = step;
  return stats;
}

struct EvalResult {
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::string> prediction_rows;  // "example_id,prediction,gold"
};

template <typename S>
EvalResult evaluate_task(CtalModel<S>& model, const TaskSpec& task,
                         const std::vector<LoadedExample>& examples, int threads = 1) {
  if (examples.empty()) throw Error("evaluate: no examples");
  EvalResult result;
  const int n = static_cast<int>(examples.size());

  if (task.kind == TaskKind::Regression) {
    std::vector<double> preds(n), golds(n);
    parallel_items(n, threads, [&](int i, int) {
      preds[i] = predict_score(model, examples[i]);
      golds[i] = std::stod(examples[i].label);
    });
    const auto [acc2, f1] = metric_acc2_f1(preds, golds);
    const auto [mae, corr] = metric_mae_corr(preds, golds);
    result.metrics = {{"acc2", acc2}, {"f1", f1}, {"mae", mae}, {"corr", corr}};
    for (int i = 0; i < n; ++i)
      result.prediction_rows.push_back(std::to_string(i) + "," + std::to_string(preds[i]) +
                                       "," + examples[i].label);
    return result;
  }

  if (task.kind == TaskKind::Speaker) {
    // Pairwise cosine scoring of identity embeddings.
    std::vector<VecX<float>> emb(n);
    parallel_items(n, threads, [&](int i, int) {
      emb[i] = extract_identity_embedding(model, examples[i]);
    });
    std::vector<double> same, diff;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double na = std::sqrt(static_cast<double>((emb[i] * emb[i]).sum()));
        const double nb = std::sqrt(static_cast<double>((emb[j] * emb[j]).sum()));
        const double cos = na * nb > 0
                               ? static_cast<double>((emb[i] * emb[j]).sum()) / (na * nb)
                               : 0.0;
        (examples[i].label == examples[j].label ? same : diff).push_back(cos);
      }
    result.metrics = {{"eer", metric_eer(same, diff)},
                      {"trials_same", static_cast<double>(same.size())},
                      {"trials_diff", static_cast<double>(diff.size())}};
    return result;
  }

  std::vector<int> preds(n), golds(n);
  parallel_items(n, threads, [&](int i, int) {
    preds[i] = predict_class(model, examples[i]);
    golds[i] = task.class_index(examples[i].label);
  });
  const auto [wa, ua] = metric_wa_ua(preds, golds, task.output_dim());
  result.metrics = {{"wa", wa}, {"ua", ua}};
  for (int i = 0; i < n; ++i)
    result.prediction_rows.push_back(std::to_string(i) + "," + task.classes[preds[i]] + "," +
                                     examples[i].label);
  return result;
}

}  // namespace ctal
