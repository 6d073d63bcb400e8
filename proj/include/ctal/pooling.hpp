#pragma once

#include <vector>

#include "ctal/ops.hpp"

namespace ctal {

// Softmax(v . tanh(W . H^T)) . H over the unmasked rows of H [L x d].
// v and W are the trainable pooling parameters for the audio stream.
template <typename S>
Var<S> attention_pool(Graph<S>& g, Var<S> h, Var<S> v_attn, Var<S> w_attn,
                      const std::vector<uint8_t>& valid,
                      Var<S>* weights_out = nullptr) {
  const Index l = h.value().rows(), d = h.value().cols();
  if (v_attn.value().numel() != d || w_attn.value().rows() != d || w_attn.value().cols() != d)
    throw DimensionError("attention_pool: parameter dims do not match hidden size " +
                         std::to_string(d));
  if (static_cast<Index>(valid.size()) != l)
    throw DimensionError("attention_pool: mask length mismatch");
  auto scores = matmul(v_attn, tanh_op(matmul(w_attn, transpose(h))));  // [1 x L]
  auto weights = softmax_rows_keymask(scores, valid);
  if (weights_out) *weights_out = weights;
  return matmul(weights, h);  // [1 x d]
}

// Per-dimension max over unmasked rows.
template <typename S>
Var<S> max_pool(Var<S> h, const std::vector<uint8_t>& valid) {
  return max_rows(h, valid);
}

// (attn_a + attn_w) ++ (max_a + max_w) -> [1 x 2d].
template <typename S>
Var<S> fuse(Var<S> h_attn_a, Var<S> h_attn_w, Var<S> h_max_a, Var<S> h_max_w) {
  return concat_cols<S>({add(h_attn_a, h_attn_w), add(h_max_a, h_max_w)});
}

// Sum of the absolute cosine similarities of the two pooled pairs. A
// numerically zero vector contributes 0 for its pair (with a warning)
// instead of dividing by zero.
template <typename S>
Var<S> orthogonal_loss(Graph<S>& g, Var<S> h_attn_a, Var<S> h_attn_w, Var<S> h_max_a,
                       Var<S> h_max_w) {
  auto abs_cosine = [&](Var<S> a, Var<S> b, const char* which) -> Var<S> {
    const double na = std::sqrt(static_cast<double>((a.value().flat() * a.value().flat()).sum()));
    const double nb = std::sqrt(static_cast<double>((b.value().flat() * b.value().flat()).sum()));
    if (na < 1e-12 || nb < 1e-12) {
      log_warn(std::string("orthogonal_loss: zero ") + which +
               " vector, pair contributes 0");
      return g.scalar(S(0));
    }
    auto norm_a = sqrt_op(dot(a, a));
    auto norm_b = sqrt_op(dot(b, b));
    return abs_op(div(dot(a, b), mul(norm_a, norm_b)));
  };
  return add(abs_cosine(h_attn_a, h_attn_w, "attention-pooled"),
             abs_cosine(h_max_a, h_max_w, "max-pooled"));
}

// The four pooled vectors and their concatenation for one pair.
template <typename S>
struct FusedRepresentation {
  Var<S> h_attn_a, h_max_a, h_attn_w, h_max_w;
  Var<S> h_fuse;  // [1 x 2d]
};

// Pools both streams: attention + max over audio, <s> state + max over text.
template <typename S>
FusedRepresentation<S> fuse_streams(Graph<S>& g, Var<S> text_out, Var<S> audio_out,
                                    Var<S> v_attn, Var<S> w_attn,
                                    const std::vector<uint8_t>& text_mask,
                                    const std::vector<uint8_t>& audio_mask) {
  FusedRepresentation<S> rep;
  rep.h_attn_a = attention_pool(g, audio_out, v_attn, w_attn, audio_mask);
  rep.h_max_a = max_pool(audio_out, audio_mask);
  rep.h_attn_w = slice_rows(text_out, 0, 1);  // final hidden state of <s>
  rep.h_max_w = max_pool(text_out, text_mask);
  rep.h_fuse = fuse(rep.h_attn_a, rep.h_attn_w, rep.h_max_a, rep.h_max_w);
  return rep;
}

}  // namespace ctal
