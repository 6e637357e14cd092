#include "lanechange/dqn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lanechange::dqn {

namespace {

using namespace shape;

template <typename T>
inline T dot(const T* a, const T* b, int n) {
  T acc{0};
#pragma omp simd reduction(+ : acc)
  for (int k = 0; k < n; ++k) acc += a[k] * b[k];
  return acc;
}

template <typename T>
inline void axpy(T alpha, const T* x, T* y, int n) {
#pragma omp simd
  for (int k = 0; k < n; ++k) y[k] += alpha * x[k];
}

template <typename T>
inline T relu(T x) {
  return x > T{0} ? x : T{0};
}

// out[b][o] = act(bias[o] + W[o] . in[b]) with W row-major [out][in].
template <typename T>
void dense_forward(const T* weight, const T* bias, int in_dim, int out_dim,
                   std::span<const T* const> in, std::span<T* const> out, bool rectify) {
  const std::size_t n = in.size();
  for (int o = 0; o < out_dim; ++o) {
    const T* row = weight + static_cast<std::size_t>(o) * in_dim;
    std::size_t b = 0;
    // Four samples per pass: independent accumulators and one read of the row.
    for (; b + 4 <= n; b += 4) {
      const T* x0 = in[b];
      const T* x1 = in[b + 1];
      const T* x2 = in[b + 2];
      const T* x3 = in[b + 3];
      T a0{0}, a1{0}, a2{0}, a3{0};
#pragma omp simd reduction(+ : a0, a1, a2, a3)
      for (int k = 0; k < in_dim; ++k) {
        a0 += row[k] * x0[k];
        a1 += row[k] * x1[k];
        a2 += row[k] * x2[k];
        a3 += row[k] * x3[k];
      }
      const T acc[4] = {a0, a1, a2, a3};
      for (int j = 0; j < 4; ++j) {
        const T v = bias[o] + acc[j];
        out[b + static_cast<std::size_t>(j)][o] = rectify ? relu(v) : v;
      }
    }
    for (; b < n; ++b) {
      const T v = bias[o] + dot(row, in[b], in_dim);
      out[b][o] = rectify ? relu(v) : v;
    }
  }
}

// dout is already multiplied by the activation derivative. din may be empty.
template <typename T>
void dense_backward(const T* weight, int in_dim, int out_dim, std::span<const T* const> in,
                    std::span<const T* const> dout, std::span<T* const> din, T* gweight,
                    T* gbias) {
  for (int o = 0; o < out_dim; ++o) {
    const T* row = weight + static_cast<std::size_t>(o) * in_dim;
    T* grow = gweight + static_cast<std::size_t>(o) * in_dim;
    for (std::size_t b = 0; b < in.size(); ++b) {
      const T g = dout[b][o];
      if (g == T{0}) continue;
      axpy(g, in[b], grow, in_dim);
      gbias[o] += g;
      if (!din.empty()) axpy(g, row, din[b], in_dim);
    }
  }
}

template <typename T>
void fill_uniform(Rng& rng, std::span<T> out, double bound) {
  for (auto& w : out) w = static_cast<T>(uniform(rng, -bound, bound));
}

}  // namespace

template <typename T>
bool Parameters<T>::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
Parameters<T> init_parameters(Rng& rng) {
  Parameters<T> p;
  const auto he = [](int fan_in) { return std::sqrt(6.0 / fan_in); };
  fill_uniform(rng, p.tensor(Tensor::kConv1Weight), he(kConv1KernelRows * kConv1KernelCols));
  fill_uniform(rng, p.tensor(Tensor::kConv2Weight), he(kConv2KernelRows * kConv1Filters));
  fill_uniform(rng, p.tensor(Tensor::kDense1Weight), he(kDense1In));
  fill_uniform(rng, p.tensor(Tensor::kDense2Weight), he(kDense1));
  fill_uniform(rng, p.tensor(Tensor::kHeadWeight), std::sqrt(3.0 / kDense2));
  return p;
}

template <typename T>
void ForwardCache<T>::load(const encoding::StateTensor& state) {
  for (std::size_t i = 0; i < input.size(); ++i) input[i] = static_cast<T>(state.grid[i]);
  for (int i = 0; i < kAux; ++i) flat[kFlat + i] = static_cast<T>(state.aux[i]);
}

template <typename T>
void forward_batch(const Parameters<T>& params, std::span<ForwardCache<T>> caches) {
  const T* w1 = params.tensor(Tensor::kConv1Weight).data();
  const T* b1 = params.tensor(Tensor::kConv1Bias).data();
  const T* w2 = params.tensor(Tensor::kConv2Weight).data();
  const T* b2 = params.tensor(Tensor::kConv2Bias).data();
  constexpr int kWindow1 = kConv1KernelRows * kConv1KernelCols;
  constexpr int kWindow2 = kConv2KernelRows * kConv1Filters;

  // Filter-minor copies of the kernels so the inner loops run across filters.
  std::array<T, kWindow1 * kConv1Filters> w1t;
  for (int f = 0; f < kConv1Filters; ++f)
    for (int k = 0; k < kWindow1; ++k) w1t[k * kConv1Filters + f] = w1[f * kWindow1 + k];
  std::array<T, kWindow2 * kConv2Filters> w2t;
  for (int g = 0; g < kConv2Filters; ++g)
    for (int k = 0; k < kWindow2; ++k) w2t[k * kConv2Filters + g] = w2[g * kWindow2 + k];

  for (auto& c : caches) {
    // With a single output column, the 3x3 window starting at row r is the
    // contiguous slice input[r*3 .. r*3+9).
    for (int r = 0; r < kConv1Rows; ++r) {
      const T* window = c.input.data() + r * kInputCols;
      T acc[kConv1Filters];
      for (int f = 0; f < kConv1Filters; ++f) acc[f] = b1[f];
      for (int k = 0; k < kWindow1; ++k) {
        const T x = window[k];
        const T* wk = w1t.data() + k * kConv1Filters;
#pragma omp simd
        for (int f = 0; f < kConv1Filters; ++f) acc[f] += wk[f] * x;
      }
      for (int f = 0; f < kConv1Filters; ++f) c.conv1[r * kConv1Filters + f] = relu(acc[f]);
    }
    for (int r = 0; r < kConv2Rows; ++r) {
      const T* window = c.conv1.data() + r * kConv1Filters;
      T acc[kConv2Filters];
      for (int g = 0; g < kConv2Filters; ++g) acc[g] = b2[g];
      for (int k = 0; k < kWindow2; ++k) {
        const T x = window[k];
        const T* wk = w2t.data() + k * kConv2Filters;
#pragma omp simd
        for (int g = 0; g < kConv2Filters; ++g) acc[g] += wk[g] * x;
      }
      for (int g = 0; g < kConv2Filters; ++g) c.flat[r * kConv2Filters + g] = relu(acc[g]);
    }
  }

  std::vector<const T*> in(caches.size());
  std::vector<T*> out(caches.size());
  const auto layer = [&](Tensor w, Tensor b, int in_dim, int out_dim, auto in_of, auto out_of,
                         bool rectify) {
    for (std::size_t i = 0; i < caches.size(); ++i) {
      in[i] = in_of(caches[i]);
      out[i] = out_of(caches[i]);
    }
    dense_forward<T>(params.tensor(w).data(), params.tensor(b).data(), in_dim, out_dim, in, out,
                     rectify);
  };
  layer(Tensor::kDense1Weight, Tensor::kDense1Bias, kDense1In, kDense1,
        [](ForwardCache<T>& c) { return c.flat.data(); },
        [](ForwardCache<T>& c) { return c.hidden1.data(); }, true);
  layer(Tensor::kDense2Weight, Tensor::kDense2Bias, kDense1, kDense2,
        [](ForwardCache<T>& c) { return c.hidden1.data(); },
        [](ForwardCache<T>& c) { return c.hidden2.data(); }, true);
  layer(Tensor::kHeadWeight, Tensor::kHeadBias, kDense2, kOutputs,
        [](ForwardCache<T>& c) { return c.hidden2.data(); },
        [](ForwardCache<T>& c) { return c.q.data(); }, false);
}

template <typename T>
void backward_batch(const Parameters<T>& params, std::span<const ForwardCache<T>> caches,
                    std::span<const std::array<T, kOutputs>> dq, Parameters<T>& grads) {
  if (dq.size() != caches.size()) throw std::invalid_argument("backward_batch: size mismatch");
  const std::size_t n = caches.size();

  std::vector<std::array<T, kDense2>> d_hidden2(n);
  std::vector<std::array<T, kDense1>> d_hidden1(n);
  std::vector<std::array<T, kDense1In>> d_flat(n);
  for (std::size_t b = 0; b < n; ++b) {
    d_hidden2[b].fill(T{0});
    d_hidden1[b].fill(T{0});
    d_flat[b].fill(T{0});
  }

  std::vector<const T*> in(n), dout(n);
  std::vector<T*> din(n);

  // Head.
  for (std::size_t b = 0; b < n; ++b) {
    in[b] = caches[b].hidden2.data();
    dout[b] = dq[b].data();
    din[b] = d_hidden2[b].data();
  }
  dense_backward<T>(params.tensor(Tensor::kHeadWeight).data(), kDense2, kOutputs, in, dout, din,
                    grads.tensor(Tensor::kHeadWeight).data(),
                    grads.tensor(Tensor::kHeadBias).data());

  // Dense 2.
  for (std::size_t b = 0; b < n; ++b) {
    for (int k = 0; k < kDense2; ++k)
      if (caches[b].hidden2[k] <= T{0}) d_hidden2[b][k] = T{0};
    in[b] = caches[b].hidden1.data();
    dout[b] = d_hidden2[b].data();
    din[b] = d_hidden1[b].data();
  }
  dense_backward<T>(params.tensor(Tensor::kDense2Weight).data(), kDense1, kDense2, in, dout, din,
                    grads.tensor(Tensor::kDense2Weight).data(),
                    grads.tensor(Tensor::kDense2Bias).data());

  // Dense 1.
  for (std::size_t b = 0; b < n; ++b) {
    for (int k = 0; k < kDense1; ++k)
      if (caches[b].hidden1[k] <= T{0}) d_hidden1[b][k] = T{0};
    in[b] = caches[b].flat.data();
    dout[b] = d_hidden1[b].data();
    din[b] = d_flat[b].data();
  }
  dense_backward<T>(params.tensor(Tensor::kDense1Weight).data(), kDense1In, kDense1, in, dout,
                    din, grads.tensor(Tensor::kDense1Weight).data(),
                    grads.tensor(Tensor::kDense1Bias).data());

  // Convolutions, per sample.
  const T* w2 = params.tensor(Tensor::kConv2Weight).data();
  T* gw1 = grads.tensor(Tensor::kConv1Weight).data();
  T* gb1 = grads.tensor(Tensor::kConv1Bias).data();
  T* gw2 = grads.tensor(Tensor::kConv2Weight).data();
  T* gb2 = grads.tensor(Tensor::kConv2Bias).data();
  constexpr int kWindow1 = kConv1KernelRows * kConv1KernelCols;
  constexpr int kWindow2 = kConv2KernelRows * kConv1Filters;

  std::array<T, kConv1Rows * kConv1Filters> d_conv1{};
  for (std::size_t b = 0; b < n; ++b) {
    const ForwardCache<T>& c = caches[b];
    d_conv1.fill(T{0});
    for (int r = 0; r < kConv2Rows; ++r) {
      const T* window = c.conv1.data() + r * kConv1Filters;
      T* d_window = d_conv1.data() + r * kConv1Filters;
      for (int g = 0; g < kConv2Filters; ++g) {
        const int idx = r * kConv2Filters + g;
        if (c.flat[idx] <= T{0}) continue;
        const T delta = d_flat[b][idx];
        if (delta == T{0}) continue;
        axpy(delta, window, gw2 + g * kWindow2, kWindow2);
        gb2[g] += delta;
        axpy(delta, w2 + g * kWindow2, d_window, kWindow2);
      }
    }
    for (int r = 0; r < kConv1Rows; ++r) {
      const T* window = c.input.data() + r * kInputCols;
      for (int f = 0; f < kConv1Filters; ++f) {
        const int idx = r * kConv1Filters + f;
        if (c.conv1[idx] <= T{0}) continue;
        const T delta = d_conv1[idx];
        if (delta == T{0}) continue;
        axpy(delta, window, gw1 + f * kWindow1, kWindow1);
        gb1[f] += delta;
      }
    }
  }
}

template <typename T>
QValues forward(const Parameters<T>& params, const encoding::StateTensor& state) {
  ForwardCache<T> cache;
  cache.load(state);
  forward_batch<T>(params, std::span<ForwardCache<T>>(&cache, 1));
  return {static_cast<double>(cache.q[0]), static_cast<double>(cache.q[1]),
          static_cast<double>(cache.q[2])};
}

template <typename T>
std::vector<T> td_targets(std::span<const Transition> batch, const Parameters<T>& target,
                          double gamma) {
  std::vector<ForwardCache<T>> caches(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) caches[i].load(batch[i].next_state);
  forward_batch<T>(target, caches);
  std::vector<T> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& q = caches[i].q;
    const T best = std::max({q[0], q[1], q[2]});
    y[i] = batch[i].terminal
               ? static_cast<T>(batch[i].reward)
               : static_cast<T>(batch[i].reward + gamma * static_cast<double>(best));
  }
  return y;
}

template <typename T>
T loss_and_gradients(const Parameters<T>& params, std::span<const Transition> batch,
                     std::span<const T> targets, Parameters<T>& grads) {
  if (batch.empty()) throw std::invalid_argument("loss_and_gradients: empty batch");
  if (targets.size() != batch.size())
    throw std::invalid_argument("loss_and_gradients: targets/batch size mismatch");

  std::vector<ForwardCache<T>> caches(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) caches[i].load(batch[i].state);
  forward_batch<T>(params, caches);

  const T scale = T{2} / static_cast<T>(batch.size());
  T loss{0};
  std::vector<std::array<T, kOutputs>> dq(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int a = to_index(batch[i].action);
    const T err = caches[i].q[a] - targets[i];
    loss += err * err;
    dq[i].fill(T{0});
    dq[i][a] = scale * err;
  }
  loss /= static_cast<T>(batch.size());
  if (!std::isfinite(loss))
    throw DivergenceError("non-finite TD loss (" + std::to_string(static_cast<double>(loss)) + ")");

  grads.set_zero();
  backward_batch<T>(params, caches, dq, grads);
  return loss;
}

#define LANECHANGE_INSTANTIATE(T)                                                            \
  template struct Parameters<T>;                                                             \
  template struct ForwardCache<T>;                                                           \
  template Parameters<T> init_parameters<T>(Rng&);                                           \
  template void forward_batch<T>(const Parameters<T>&, std::span<ForwardCache<T>>);          \
  template void backward_batch<T>(const Parameters<T>&, std::span<const ForwardCache<T>>,    \
                                  std::span<const std::array<T, kOutputs>>, Parameters<T>&); \
  template QValues forward<T>(const Parameters<T>&, const encoding::StateTensor&);           \
  template std::vector<T> td_targets<T>(std::span<const Transition>, const Parameters<T>&,   \
                                        double);                                             \
  template T loss_and_gradients<T>(const Parameters<T>&, std::span<const Transition>,        \
                                   std::span<const T>, Parameters<T>&);

LANECHANGE_INSTANTIATE(float)
LANECHANGE_INSTANTIATE(double)

#undef LANECHANGE_INSTANTIATE

}  // namespace lanechange::dqn
