#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "msa/dense.hpp"

namespace msa {

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam over a flat parameter vector.
class Adam {
 public:
  Adam(std::size_t n, AdamParams params = {})
      : p_(params), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(p_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(p_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i];
      m_[i] = p_.beta1 * m_[i] + (1.0 - p_.beta1) * g;
      v_[i] = p_.beta2 * v_[i] + (1.0 - p_.beta2) * g * g;
      const double mhat = m_[i] / c1;
      const double vhat = v_[i] / c2;
      params[i] -= p_.learning_rate * mhat / (std::sqrt(vhat) + p_.epsilon);
    }
  }

 private:
  AdamParams p_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

}  // namespace msa
