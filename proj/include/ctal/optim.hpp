#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ctal/graph.hpp"

namespace ctal {

// Linear warmup to base_lr over warmup_steps, then linear decay to zero at
// total_steps. Steps past the end clamp to zero with a warning.
inline double lr_linear_warmup_decay(long step, long warmup_steps, long total_steps,
                                     double base_lr) {
  if (step < 0 || warmup_steps < 0 || warmup_steps >= total_steps)
    throw Error("lr schedule: need 0 <= warmup_steps < total_steps and step >= 0");
  if (step > total_steps) {
    log_warn("lr schedule queried past total_steps (" + std::to_string(step) + " > " +
             std::to_string(total_steps) + "); clamping to 0");
    return 0.0;
  }
  if (step < warmup_steps)
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  return base_lr * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - warmup_steps);
}

inline double lr_cosine_anneal(long step, long total_steps, double base_lr, double min_lr) {
  if (step < 0 || step > total_steps || total_steps <= 0)
    throw Error("lr schedule: need 0 <= step <= total_steps");
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return min_lr + (base_lr - min_lr) * 0.5 * (1.0 + std::cos(M_PI * t));
}

struct AdamConfig {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  bool decoupled = false;  // true = AdamW (decay applied to weights, not grads)
};

// Adam / AdamW over a ParamStore. Moment buffers are created lazily on the
// first step and stay aligned with the store's parameter order.
template <typename S>
class Adam {
public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  long step_count() const { return t_; }

  void zero_grad(ParamStore<S>& params) { params.zero_grads(); }

  // One update over all parameters; lr_override < 0 means use cfg.lr.
  void step(ParamStore<S>& params, double lr_override = -1.0) {
    const double lr = lr_override >= 0.0 ? lr_override : cfg_.lr;
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (size_t i = 0; i < params.size(); ++i) {
        m_[i] = VecX<S>::Zero(params[i].value.numel());
        v_[i] = VecX<S>::Zero(params[i].value.numel());
      }
    }
    if (m_.size() != params.size())
      throw Error("optimizer state does not match parameter store");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i];
      const VecX<S>& g0 = p.value.grad();
      if (!g0.isFinite().all())
        throw NumericError("non-finite gradient in parameter '" + p.name + "' at step " +
                           std::to_string(t_));
      VecX<S> g = g0;
      if (!cfg_.decoupled && cfg_.weight_decay != 0.0)
        g += static_cast<S>(cfg_.weight_decay) * p.value.flat();
      m_[i] = static_cast<S>(cfg_.beta1) * m_[i] + static_cast<S>(1.0 - cfg_.beta1) * g;
      v_[i] = static_cast<S>(cfg_.beta2) * v_[i] +
              static_cast<S>(1.0 - cfg_.beta2) * (g * g);
      VecX<S> mhat = m_[i] / static_cast<S>(bc1);
      VecX<S> vhat = v_[i] / static_cast<S>(bc2);
      if (cfg_.decoupled && cfg_.weight_decay != 0.0)
        p.value.flat() -= static_cast<S>(lr * cfg_.weight_decay) * p.value.flat();
      p.value.flat() -= static_cast<S>(lr) * mhat / (vhat.sqrt() + static_cast<S>(cfg_.eps));
    }
  }

private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<VecX<S>> m_, v_;
};

}  // namespace ctal
