#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace textcnn::nn {

// One contiguous trainable parameter block with its gradient buffer.
// Frozen layers are simply never bound; masked prefixes (embedding row 0)
// are excluded by binding the span past them.
template <typename T>
struct ParamBinding {
  T* param = nullptr;
  const T* grad = nullptr;
  size_t n = 0;
  const char* name = "";
};

struct AdamConfig {
  double lr0 = 1e-3;
  double decay = 0.7;  // per-epoch multiplier on the learning rate
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam over a fixed set of bindings. Moments are dense and the
// update touches every bound coordinate on every step, so the per-step cost
// scales with the full trainable parameter count.
template <typename T>
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : cfg_(cfg) {
    if (cfg.decay <= 0 || cfg.decay > 1)
      throw std::invalid_argument("adam: decay must be in (0, 1]");
  }

  void bind(const std::vector<ParamBinding<T>>& bindings) {
    bindings_ = bindings;
    m_.clear();
    v_.clear();
    for (const auto& b : bindings_) {
      m_.emplace_back(b.n, 0.0f);
      v_.emplace_back(b.n, 0.0f);
    }
  }

  void set_epoch(int epoch) { epoch_ = epoch; }
  int64_t step_count() const { return step_; }
  double effective_lr() const { return cfg_.lr0 * std::pow(cfg_.decay, epoch_); }
  const AdamConfig& config() const { return cfg_; }

  void step() {
    ++step_;
    const double lr = effective_lr();
    const double b1 = cfg_.beta1, b2 = cfg_.beta2, eps = cfg_.eps;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (size_t k = 0; k < bindings_.size(); ++k) {
      auto& b = bindings_[k];
      float* __restrict__ m = m_[k].data();
      float* __restrict__ v = v_[k].data();
      T* __restrict__ p = b.param;
      const T* __restrict__ g = b.grad;
      for (size_t i = 0; i < b.n; ++i) {
        const double gi = static_cast<double>(g[i]);
        const double mi = b1 * m[i] + (1.0 - b1) * gi;
        const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
        m[i] = static_cast<float>(mi);
        v[i] = static_cast<float>(vi);
        const double mhat = mi / bc1;
        const double vhat = vi / bc2;
        p[i] = static_cast<T>(static_cast<double>(p[i]) - lr * mhat / (std::sqrt(vhat) + eps));
      }
    }
  }

 private:
  AdamConfig cfg_;
  std::vector<ParamBinding<T>> bindings_;
  std::vector<std::vector<float>> m_, v_;
  int64_t step_ = 0;
  int epoch_ = 0;
};

}  // namespace textcnn::nn
