#pragma once

#include <cmath>
#include <vector>

#include "ugodit/error.hpp"
#include "ugodit/network.hpp"
#include "ugodit/simd/kernels.hpp"

namespace ugodit {

// Adaptive-moment optimizer state for one parameter group. Moments persist
// for the lifetime of the object.
class Adam {
public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  explicit Adam(double learning_rate) : lr_(learning_rate) {}

  template <class Params> void step(Params &params, const Params &grad) {
    std::vector<Tensor *> p;
    std::vector<const Tensor *> g;
    for_each_tensor(params, [&](Tensor &t) { p.push_back(&t); });
    for_each_tensor(grad, [&](const Tensor &t) { g.push_back(&t); });
    require(p.size() == g.size(), "gradient layout does not match parameters");
    if (m_.empty()) {
      for (Tensor *t : p) {
        m_.emplace_back(t->shape());
        v_.emplace_back(t->shape());
      }
    }
    require(m_.size() == p.size(), "optimizer state belongs to a different parameter group");
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    const double lr_t = lr_ * std::sqrt(bc2) / bc1;
    const double eps_t = kEps * std::sqrt(bc2);
    const auto &K = simd::active();
    for (std::size_t i = 0; i < p.size(); ++i) {
      require(p[i]->size() == g[i]->size(), "gradient tensor size mismatch");
      K.adam_step(p[i]->size(), kBeta1, kBeta2, lr_t, eps_t, g[i]->data(), m_[i].data(), v_[i].data(), p[i]->data());
    }
  }

  long steps() const { return t_; }
  double learning_rate() const { return lr_; }

private:
  double lr_;
  long t_ = 0;
  std::vector<Tensor> m_, v_;
};

} // namespace ugodit
