#pragma once

#include <string>
#include <vector>

#include "ctal/config.hpp"
#include "ctal/ops.hpp"

namespace ctal {

// The parameter inventory is the single source of truth for both model
// construction and parameter counting.
inline std::vector<std::pair<std::string, std::vector<Index>>> ctal_param_shapes(
    const ModelConfig& cfg, bool with_pretrain_heads) {
  cfg.validate();
  const Index h = cfg.hidden, f = cfg.ffn_dim(), v = cfg.vocab_size, a = cfg.audio_dim;
  std::vector<std::pair<std::string, std::vector<Index>>> out;
  auto norm = [&](const std::string& p) {
    out.push_back({p + ".gamma", {h}});
    out.push_back({p + ".beta", {h}});
  };
  auto attn = [&](const std::string& p) {
    for (const char* m : {"wq", "wk", "wv", "wo"}) out.push_back({p + "." + m, {h, h}});
    for (const char* m : {"bq", "bk", "bv", "bo"}) out.push_back({p + "." + m, {h}});
  };
  auto ffn = [&](const std::string& p) {
    out.push_back({p + ".w1", {h, f}});
    out.push_back({p + ".b1", {f}});
    out.push_back({p + ".w2", {f, h}});
    out.push_back({p + ".b2", {h}});
  };

  out.push_back({"text.embed.token", {v, h}});
  out.push_back({"text.embed.pos", {cfg.max_text_len, h}});
  out.push_back({"audio.embed.proj.w", {a, h}});
  out.push_back({"audio.embed.proj.b", {h}});
  out.push_back({"audio.embed.pos", {cfg.max_audio_frames, h}});

  for (int k = 0; k < cfg.layers; ++k) {
    const std::string p = "text.layer" + std::to_string(k);
    attn(p + ".self");
    norm(p + ".norm1");
    ffn(p + ".ffn");
    norm(p + ".norm2");
  }
  for (int k = 0; k < cfg.layers; ++k) {
    const std::string p = "audio.layer" + std::to_string(k);
    attn(p + ".self");
    norm(p + ".norm1");
    attn(p + ".cross");
    norm(p + ".norm2");
    ffn(p + ".ffn");
    norm(p + ".norm3");
  }

  if (with_pretrain_heads) {
    out.push_back({"heads.mlm.dense.w", {h, h}});
    out.push_back({"heads.mlm.dense.b", {h}});
    out.push_back({"heads.mlm.norm.gamma", {h}});
    out.push_back({"heads.mlm.norm.beta", {h}});
    if (!cfg.tie_mlm) out.push_back({"heads.mlm.out.w", {h, v}});
    out.push_back({"heads.mlm.out.b", {v}});
    out.push_back({"heads.mcam.w", {h, a}});
    out.push_back({"heads.mcam.b", {a}});
  }
  return out;
}

struct ParamCountReport {
  std::vector<std::pair<std::string, long>> by_group;  // stable group order
  long total = 0;
};

// Collapses per-layer names ("text.layer3.ffn.w1" -> "text.layers").
inline std::string param_group(const std::string& name) {
  const auto dot = name.find('.');
  if (dot == std::string::npos) return name;
  const auto second = name.find('.', dot + 1);
  std::string head = name.substr(0, dot);
  std::string mid = second == std::string::npos ? name.substr(dot + 1)
                                                : name.substr(dot + 1, second - dot - 1);
  if (mid.rfind("layer", 0) == 0) mid = "layers";
  return head + "." + mid;
}

inline ParamCountReport count_parameters(const ModelConfig& cfg,
                                         bool with_pretrain_heads = true) {
  ParamCountReport report;
  for (const auto& [name, shape] : ctal_param_shapes(cfg, with_pretrain_heads)) {
    long n = 1;
    for (Index d : shape) n *= d;
    const std::string group = param_group(name);
    auto it = std::find_if(report.by_group.begin(), report.by_group.end(),
                           [&](const auto& kv) { return kv.first == group; });
    if (it == report.by_group.end())
      report.by_group.push_back({group, n});
    else
      it->second += n;
    report.total += n;
  }
  return report;
}

// Dropout plumbing for a forward pass; eval mode is the default.
struct TrainMode {
  bool train = false;
  Rng* rng = nullptr;
};

// Optional capture of intermediate state for inspection and tests.
template <typename S>
struct ForwardTrace {
  std::vector<Var<S>> text_layers;       // output of each text layer
  std::vector<Var<S>> audio_layers;      // output of each audio layer
  std::vector<Var<S>> text_self_attn;    // attention weights, layer-major then head
  std::vector<Var<S>> audio_self_attn;
  std::vector<Var<S>> audio_cross_attn;
  std::vector<int> cross_kv_node;        // graph node id of K/V used per audio layer
};

template <typename S>
struct CtalForward {
  Var<S> text_out;   // [T x H]
  Var<S> audio_out;  // [frames x H]
};

// Two-stream cross-modal encoder: a self-attention text stack and an audio
// stack whose layers run bidirectional self-attention, cross-attention with
// the final text representations as keys/values, and a feed-forward block,
// all post-norm residual.
template <typename S>
class CtalModel {
public:
  CtalModel(ModelConfig cfg, uint64_t seed, bool with_pretrain_heads = true)
      : cfg_(cfg), with_pretrain_heads_(with_pretrain_heads) {
    Rng rng(mix64(seed));
    for (const auto& [name, shape] : ctal_param_shapes(cfg, with_pretrain_heads)) {
      const bool is_gain = name.size() > 5 && name.substr(name.size() - 5) == "gamma";
      const bool is_bias_like =
          shape.size() == 1 && !is_gain;  // biases, beta: zeros
      if (is_gain)
        params_.create_const(name, shape, S(1));
      else if (is_bias_like)
        params_.create(name, shape);
      else
        params_.create_normal(name, shape, rng, cfg.init_std);
    }
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<S>& params() { return params_; }
  const ParamStore<S>& params() const { return params_; }
  bool has_pretrain_heads() const { return with_pretrain_heads_; }

  // Token + position embedding sum. Inputs longer than the position table
  // are truncated from the tail (warning).
  Var<S> embed_text(Graph<S>& g, std::vector<int> ids, TrainMode mode = {}) {
    if (static_cast<int>(ids.size()) > cfg_.max_text_len) {
      log_warn("text sequence of length " + std::to_string(ids.size()) +
               " truncated to max_text_len=" + std::to_string(cfg_.max_text_len));
      ids.resize(cfg_.max_text_len);
    }
    const Index t = static_cast<Index>(ids.size());
    auto tok = rows_lookup(g.leaf(params_.at("text.embed.token")), ids);
    auto pos = slice_rows(g.leaf(params_.at("text.embed.pos")), 0, t);
    auto e = add(tok, pos);
    return maybe_dropout(e, mode);
  }

  // Linear projection of surface features + position embedding.
  Var<S> embed_audio(Graph<S>& g, const MatX<float>& feats, TrainMode mode = {}) {
    if (feats.cols() != cfg_.audio_dim)
      throw DimensionError("embed_audio: feature dim " + std::to_string(feats.cols()) +
                           " != configured " + std::to_string(cfg_.audio_dim));
    MatX<float> use = feats;
    if (use.rows() > cfg_.max_audio_frames) {
      log_warn("audio of " + std::to_string(use.rows()) +
               " frames truncated to max_audio_frames=" +
               std::to_string(cfg_.max_audio_frames));
      use = use.topRows(cfg_.max_audio_frames);
    }
    Tensor<S> raw({use.rows(), use.cols()});
    raw.mat() = use.template cast<S>();
    auto x = g.input(std::move(raw), "audio_features");
    auto proj = linear(x, g.leaf(params_.at("audio.embed.proj.w")),
                       g.leaf(params_.at("audio.embed.proj.b")));
    auto pos = slice_rows(g.leaf(params_.at("audio.embed.pos")), 0, use.rows());
    return maybe_dropout(add(proj, pos), mode);
  }

  // Multi-head attention with a per-key validity mask. Queries and keys/
  // values may come from different streams.
  Var<S> multi_head_attention(Graph<S>& g, Var<S> q_in, Var<S> kv_in,
                              const std::vector<uint8_t>& key_valid,
                              const std::string& prefix,
                              std::vector<Var<S>>* attn_capture = nullptr) {
    const int heads = cfg_.heads;
    const Index dk = cfg_.head_dim();
    auto q = linear(q_in, g.leaf(params_.at(prefix + ".wq")), g.leaf(params_.at(prefix + ".bq")));
    auto k = linear(kv_in, g.leaf(params_.at(prefix + ".wk")), g.leaf(params_.at(prefix + ".bk")));
    auto v = linear(kv_in, g.leaf(params_.at(prefix + ".wv")), g.leaf(params_.at(prefix + ".bv")));
    std::vector<Var<S>> ctx;
    ctx.reserve(heads);
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
    for (int hd = 0; hd < heads; ++hd) {
      auto qh = slice_cols(q, hd * dk, dk);
      auto kh = slice_cols(k, hd * dk, dk);
      auto vh = slice_cols(v, hd * dk, dk);
      auto scores = scale(matmul(qh, transpose(kh)), inv_sqrt_dk);
      auto attn = softmax_rows_keymask(scores, key_valid);
      if (attn_capture) attn_capture->push_back(attn);
      ctx.push_back(matmul(attn, vh));
    }
    auto merged = concat_cols(ctx);
    return linear(merged, g.leaf(params_.at(prefix + ".wo")), g.leaf(params_.at(prefix + ".bo")));
  }

  Var<S> text_encoder_forward(Graph<S>& g, Var<S> h0, const std::vector<uint8_t>& text_mask,
                              TrainMode mode = {}, ForwardTrace<S>* trace = nullptr) {
    Var<S> x = h0;
    for (int k = 0; k < cfg_.layers; ++k) {
      const std::string p = "text.layer" + std::to_string(k);
      auto attn_out = multi_head_attention(g, x, x, text_mask, p + ".self",
                                           trace ? &trace->text_self_attn : nullptr);
      x = post_norm(g, x, attn_out, p + ".norm1", mode);
      x = post_norm(g, x, ffn_forward(g, x, p + ".ffn"), p + ".norm2", mode);
      if (trace) trace->text_layers.push_back(x);
    }
    return x;
  }

  // Every layer's cross-attention reads the same final text output.
  Var<S> audio_encoder_forward(Graph<S>& g, Var<S> h0, Var<S> text_out,
                               const std::vector<uint8_t>& audio_mask,
                               const std::vector<uint8_t>& text_mask, TrainMode mode = {},
                               ForwardTrace<S>* trace = nullptr) {
    Var<S> x = h0;
    for (int k = 0; k < cfg_.layers; ++k) {
      const std::string p = "audio.layer" + std::to_string(k);
      auto self_out = multi_head_attention(g, x, x, audio_mask, p + ".self",
                                           trace ? &trace->audio_self_attn : nullptr);
      x = post_norm(g, x, self_out, p + ".norm1", mode);
      auto cross_out = multi_head_attention(g, x, text_out, text_mask, p + ".cross",
                                            trace ? &trace->audio_cross_attn : nullptr);
      if (trace) trace->cross_kv_node.push_back(text_out.id);
      x = post_norm(g, x, cross_out, p + ".norm2", mode);
      x = post_norm(g, x, ffn_forward(g, x, p + ".ffn"), p + ".norm3", mode);
      if (trace) trace->audio_layers.push_back(x);
    }
    return x;
  }

  CtalForward<S> forward_pair(Graph<S>& g, const std::vector<int>& ids,
                              const MatX<float>& feats,
                              const std::vector<uint8_t>& text_mask,
                              const std::vector<uint8_t>& audio_mask, TrainMode mode = {},
                              ForwardTrace<S>* trace = nullptr) {
    if (text_mask.size() != ids.size() ||
        audio_mask.size() != static_cast<size_t>(feats.rows()))
      throw DimensionError("forward_pair: mask lengths must match the inputs");
    // over-length inputs truncate together with their masks
    std::vector<uint8_t> tm = text_mask, am = audio_mask;
    if (tm.size() > static_cast<size_t>(cfg_.max_text_len)) tm.resize(cfg_.max_text_len);
    if (am.size() > static_cast<size_t>(cfg_.max_audio_frames))
      am.resize(cfg_.max_audio_frames);
    auto hw0 = embed_text(g, ids, mode);
    auto text_out = text_encoder_forward(g, hw0, tm, mode, trace);
    auto ha0 = embed_audio(g, feats, mode);
    auto audio_out = audio_encoder_forward(g, ha0, text_out, am, tm, mode, trace);
    return {text_out, audio_out};
  }

  // Convenience for unpadded single items: all positions are real.
  CtalForward<S> forward_pair(Graph<S>& g, const std::vector<int>& ids,
                              const MatX<float>& feats, TrainMode mode = {},
                              ForwardTrace<S>* trace = nullptr) {
    std::vector<uint8_t> tm(ids.size(), 1), am(feats.rows(), 1);
    return forward_pair(g, ids, feats, tm, am, mode, trace);
  }

  // MLM head: dense + GELU + norm + projection to vocabulary.
  Var<S> mlm_logits(Graph<S>& g, Var<S> states) {
    require_heads();
    auto x = linear(states, g.leaf(params_.at("heads.mlm.dense.w")),
                    g.leaf(params_.at("heads.mlm.dense.b")));
    x = gelu(x);
    x = layer_norm(x, g.leaf(params_.at("heads.mlm.norm.gamma")),
                   g.leaf(params_.at("heads.mlm.norm.beta")), cfg_.layer_norm_eps);
    Var<S> out_w = cfg_.tie_mlm ? transpose(g.leaf(params_.at("text.embed.token")))
                                : g.leaf(params_.at("heads.mlm.out.w"));
    return add_bias(matmul(x, out_w), g.leaf(params_.at("heads.mlm.out.b")));
  }

  // MCAM head: single linear projection back to surface-feature space.
  Var<S> mcam_predict(Graph<S>& g, Var<S> states) {
    require_heads();
    return linear(states, g.leaf(params_.at("heads.mcam.w")), g.leaf(params_.at("heads.mcam.b")));
  }

  ParamCountReport count() const { return count_parameters(cfg_, with_pretrain_heads_); }

private:
  void require_heads() const {
    if (!with_pretrain_heads_) throw Error("model was built without pre-training heads");
  }

  Var<S> maybe_dropout(Var<S> x, TrainMode mode) {
    if (mode.train && mode.rng && cfg_.dropout > 0.0)
      return dropout(x, cfg_.dropout, *mode.rng, true);
    return x;
  }

  Var<S> post_norm(Graph<S>& g, Var<S> residual, Var<S> sublayer, const std::string& norm,
                   TrainMode mode) {
    auto y = add(residual, maybe_dropout(sublayer, mode));
    return layer_norm(y, g.leaf(params_.at(norm + ".gamma")),
                      g.leaf(params_.at(norm + ".beta")), cfg_.layer_norm_eps);
  }

  Var<S> ffn_forward(Graph<S>& g, Var<S> x, const std::string& p) {
    auto inner = gelu(linear(x, g.leaf(params_.at(p + ".w1")), g.leaf(params_.at(p + ".b1"))));
    return linear(inner, g.leaf(params_.at(p + ".w2")), g.leaf(params_.at(p + ".b2")));
  }

  ModelConfig cfg_;
  bool with_pretrain_heads_;
  ParamStore<S> params_;
};

}  // namespace ctal
