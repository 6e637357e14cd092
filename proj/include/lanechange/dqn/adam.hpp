#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "lanechange/dqn/network.hpp"

namespace lanechange::dqn {

template <typename T>
struct AdamState {
  Parameters<T> first_moment;
  Parameters<T> second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamState&) const = default;
};

// In-place Adam update with bias correction.
template <typename T>
void adam_step(Parameters<T>& params, const Parameters<T>& grads, AdamState<T>& adam, double lr) {
  if (params.values.size() != grads.values.size() ||
      adam.first_moment.values.size() != params.values.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  ++adam.step;
  const auto b1 = static_cast<T>(adam.beta1);
  const auto b2 = static_cast<T>(adam.beta2);
  const double correction1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step));
  const double correction2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step));
  // lr * m_hat / (sqrt(v_hat) + eps) == step_size * m / (sqrt(v) + eps_hat)
  const auto step_size = static_cast<T>(lr * std::sqrt(correction2) / correction1);
  const auto eps_hat = static_cast<T>(adam.epsilon * std::sqrt(correction2));

  T* w = params.values.data();
  const T* g = grads.values.data();
  T* m = adam.first_moment.values.data();
  T* v = adam.second_moment.values.data();
  const std::size_t n = params.values.size();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = b1 * m[i] + (T{1} - b1) * g[i];
    v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
    w[i] -= step_size * m[i] / (std::sqrt(v[i]) + eps_hat);
  }
}

}  // namespace lanechange::dqn
