#include "lanechange/dqn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace lanechange::dqn {

namespace {

constexpr std::array<char, 4> kMagic = {'L', 'C', 'D', 'Q'};

std::array<std::uint32_t, 8> architecture_dims() {
  using namespace shape;
  return {kInputRows, kInputCols, kAux, kConv1Filters, kConv2Filters, kDense1, kDense2, kOutputs};
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void params(const Parameters<float>& p) {
    for (float v : p.values) f32(v);
  }
  void state(const encoding::StateTensor& s) {
    for (float v : s.grid) f32(v);
    for (float v : s.aux) f32(v);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string bytes() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Parameters<float> params() {
    Parameters<float> p;
    for (float& v : p.values) v = f32();
    return p;
  }
  encoding::StateTensor state() {
    encoding::StateTensor s;
    for (float& v : s.grid) v = f32();
    for (float& v : s.aux) v = f32();
    return s;
  }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw CheckpointError("checkpoint: truncated file");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  for (char c : kMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kCheckpointVersion);
  for (std::uint32_t d : architecture_dims()) w.u32(d);
  w.u64(kParameterCount);

  const TrainConfig& cfg = ckpt.config;
  w.f64(cfg.gamma);
  w.f64(cfg.lr);
  w.u32(cfg.batch_size);
  w.u32(cfg.buffer_capacity);
  w.u32(cfg.target_sync_every);
  w.f64(cfg.eps0);
  w.f64(cfg.eps_decay);
  w.f64(cfg.eps_min);

  w.params(ckpt.online);
  w.u8(ckpt.training ? 1 : 0);
  if (ckpt.training) {
    const TrainingState& st = *ckpt.training;
    w.params(st.target);
    w.params(st.adam.first_moment);
    w.params(st.adam.second_moment);
    w.u64(st.adam.step);
    w.f64(st.epsilon);
    w.u64(st.grad_steps);
    w.u64(st.episodes_completed);
    w.bytes(st.rng_state);
    w.u64(st.replay.size());
    for (const Transition& t : st.replay) {
      w.state(t.state);
      w.u8(static_cast<std::uint8_t>(to_index(t.action)));
      w.f64(t.reward);
      w.state(t.next_state);
      w.u8(t.terminal ? 1 : 0);
    }
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  for (char c : kMagic)
    if (r.u8() != static_cast<std::uint8_t>(c)) throw CheckpointError("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  for (std::uint32_t expected : architecture_dims()) {
    const std::uint32_t got = r.u32();
    if (got != expected)
      throw CheckpointError("checkpoint: architecture mismatch (dimension " + std::to_string(got) +
                            ", expected " + std::to_string(expected) + ")");
  }
  if (r.u64() != kParameterCount) throw CheckpointError("checkpoint: parameter count mismatch");

  Checkpoint ckpt;
  TrainConfig& cfg = ckpt.config;
  cfg.gamma = r.f64();
  cfg.lr = r.f64();
  cfg.batch_size = r.u32();
  cfg.buffer_capacity = r.u32();
  cfg.target_sync_every = r.u32();
  cfg.eps0 = r.f64();
  cfg.eps_decay = r.f64();
  cfg.eps_min = r.f64();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: invalid training config: ") + e.what());
  }

  ckpt.online = r.params();
  if (!ckpt.online.all_finite()) throw CheckpointError("checkpoint: non-finite parameters");
  const std::uint8_t has_training = r.u8();
  if (has_training > 1) throw CheckpointError("checkpoint: bad training-state flag");
  if (has_training) {
    TrainingState st;
    st.target = r.params();
    st.adam.first_moment = r.params();
    st.adam.second_moment = r.params();
    st.adam.step = r.u64();
    st.epsilon = r.f64();
    st.grad_steps = r.u64();
    st.episodes_completed = r.u64();
    st.rng_state = r.bytes();
    const std::uint64_t n = r.u64();
    if (n > cfg.buffer_capacity) throw CheckpointError("checkpoint: replay larger than capacity");
    st.replay.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      Transition t;
      t.state = r.state();
      const auto action = action_from_index(r.u8());
      if (!action) throw CheckpointError("checkpoint: bad action in replay");
      t.action = *action;
      t.reward = r.f64();
      t.next_state = r.state();
      t.terminal = r.u8() != 0;
      st.replay.push_back(std::move(t));
    }
    ckpt.training = std::move(st);
  }
  if (!r.at_end()) throw CheckpointError("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace lanechange::dqn
