#pragma once

// Q-network: two valid convolutions over the 45x3 occupancy grid, the auxiliary
// 3-vector concatenated after the convolutions, two hidden dense layers and a
// linear 3-way head. Parameters live in one flat buffer so that optimizers,
// checkpoints and gradient checks can treat them uniformly.

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "lanechange/action.hpp"
#include "lanechange/random.hpp"
#include "lanechange/state_encoder.hpp"

namespace lanechange::dqn {

namespace shape {
inline constexpr int kInputRows = encoding::kGridRows;
inline constexpr int kInputCols = encoding::kGridCols;
inline constexpr int kAux = encoding::kAuxSize;

inline constexpr int kConv1Filters = 16;
inline constexpr int kConv1KernelRows = 3;
inline constexpr int kConv1KernelCols = 3;
inline constexpr int kConv1Rows = kInputRows - kConv1KernelRows + 1;
inline constexpr int kConv1Cols = kInputCols - kConv1KernelCols + 1;

// The first convolution collapses the three lane columns, so the second kernel
// spans 3 rows of a single column across all input channels.
inline constexpr int kConv2Filters = 32;
inline constexpr int kConv2KernelRows = 3;
inline constexpr int kConv2KernelCols = kConv1Cols;
inline constexpr int kConv2Rows = kConv1Rows - kConv2KernelRows + 1;
inline constexpr int kConv2Cols = kConv1Cols - kConv2KernelCols + 1;

inline constexpr int kFlat = kConv2Rows * kConv2Cols * kConv2Filters;
inline constexpr int kDense1In = kFlat + kAux;
inline constexpr int kDense1 = 128;
inline constexpr int kDense2 = 64;
inline constexpr int kOutputs = kActionCount;

static_assert(kConv1Rows == 43 && kConv1Cols == 1, "conv1 must map 45x3 to 43x1");
static_assert(kConv2Rows == 41 && kConv2Cols == 1, "conv2 must map 43x1 to 41x1");
static_assert(kFlat == 1312 && kDense1In == 1315);
static_assert(kOutputs == 3);
}  // namespace shape

// Declaration order; also the checkpoint serialization order.
enum class Tensor : int {
  kConv1Weight,  // [filter][kernel row][kernel col]
  kConv1Bias,
  kConv2Weight,  // [filter][kernel row][input channel]
  kConv2Bias,
  kDense1Weight,  // [out][in]
  kDense1Bias,
  kDense2Weight,
  kDense2Bias,
  kHeadWeight,
  kHeadBias,
};
inline constexpr int kTensorCount = 10;

inline constexpr std::array<std::size_t, kTensorCount> kTensorSizes = {
    shape::kConv1Filters * shape::kConv1KernelRows * shape::kConv1KernelCols,
    shape::kConv1Filters,
    shape::kConv2Filters * shape::kConv2KernelRows * shape::kConv1Filters,
    shape::kConv2Filters,
    static_cast<std::size_t>(shape::kDense1) * shape::kDense1In,
    shape::kDense1,
    shape::kDense2 * shape::kDense1,
    shape::kDense2,
    shape::kOutputs * shape::kDense2,
    shape::kOutputs,
};

constexpr std::size_t tensor_offset(Tensor t) {
  std::size_t off = 0;
  for (int i = 0; i < static_cast<int>(t); ++i) off += kTensorSizes[static_cast<std::size_t>(i)];
  return off;
}

inline constexpr std::size_t kParameterCount =
    tensor_offset(Tensor::kHeadBias) + kTensorSizes[kTensorCount - 1];

template <typename T>
struct Parameters {
  std::vector<T> values = std::vector<T>(kParameterCount, T{0});

  std::span<T> tensor(Tensor t) {
    return {values.data() + tensor_offset(t), kTensorSizes[static_cast<std::size_t>(t)]};
  }
  std::span<const T> tensor(Tensor t) const {
    return {values.data() + tensor_offset(t), kTensorSizes[static_cast<std::size_t>(t)]};
  }

  template <typename U>
  Parameters<U> cast() const {
    Parameters<U> out;
    for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = static_cast<U>(values[i]);
    return out;
  }

  void set_zero() { std::fill(values.begin(), values.end(), T{0}); }
  bool all_finite() const;

  bool operator==(const Parameters&) const = default;
};

// He-uniform for ReLU layers, LeCun-uniform for the linear head, zero biases.
template <typename T>
Parameters<T> init_parameters(Rng& rng);

using QValues = std::array<double, kActionCount>;

// Per-sample activations kept for backpropagation.
template <typename T>
struct ForwardCache {
  std::array<T, shape::kInputRows * shape::kInputCols> input{};
  std::array<T, shape::kConv1Rows * shape::kConv1Filters> conv1{};  // post-ReLU, [row][filter]
  std::array<T, shape::kDense1In> flat{};  // conv2 post-ReLU [row][filter], then aux
  std::array<T, shape::kDense1> hidden1{};
  std::array<T, shape::kDense2> hidden2{};
  std::array<T, shape::kOutputs> q{};

  void load(const encoding::StateTensor& state);
};

template <typename T>
void forward_batch(const Parameters<T>& params, std::span<ForwardCache<T>> caches);

// Accumulates d(objective)/d(params) into `grads` given d(objective)/dq for each sample.
template <typename T>
void backward_batch(const Parameters<T>& params, std::span<const ForwardCache<T>> caches,
                    std::span<const std::array<T, shape::kOutputs>> dq, Parameters<T>& grads);

template <typename T>
QValues forward(const Parameters<T>& params, const encoding::StateTensor& state);

struct Transition {
  encoding::StateTensor state;
  Action action = Action::kKeepLane;
  double reward = 0.0;
  encoding::StateTensor next_state;
  bool terminal = false;

  bool operator==(const Transition&) const = default;
};

// y = r for terminal transitions, r + gamma * max_a' Q_target(s', a') otherwise.
template <typename T>
std::vector<T> td_targets(std::span<const Transition> batch, const Parameters<T>& target,
                          double gamma);

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mean squared TD error over the batch; `grads` is overwritten with its exact gradient.
template <typename T>
T loss_and_gradients(const Parameters<T>& params, std::span<const Transition> batch,
                     std::span<const T> targets, Parameters<T>& grads);

}  // namespace lanechange::dqn
