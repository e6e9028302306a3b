#pragma once

// Binary checkpoint: everything needed to resume training or run evaluation
// bit-for-bit — network parameters, Adam moments and step, curriculum
// progress, and the observation-normalizer statistics.
//
// Layout (little-endian):
//   bytes 0-3   magic "CATC"
//   u32         version (1)
//   u32         input_dim, u32 action_dim, u32 hidden_count, u32 hidden[...]
//   u8          observation normalization enabled
//   i64         Adam step
//   f64         training progress in [0, 1]
//   arrays      params, adam_m, adam_v, obs_mean, obs_var — each u64 count
//               followed by count f64 values
//   f64         normalizer sample count

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "catrl/mlp.hpp"
#include "catrl/policy.hpp"

namespace catrl {

inline constexpr char kCheckpointMagic[4] = {'C', 'A', 'T', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckpointData {
  NetworkShape shape;
  Eigen::VectorXd params;
  Eigen::VectorXd adam_m;
  Eigen::VectorXd adam_v;
  std::int64_t adam_step = 0;
  double progress = 0.0;
  bool obs_norm_enabled = false;
  Eigen::VectorXd obs_mean;
  Eigen::VectorXd obs_var;
  double obs_count = 0.0;

  ActorCritic build_net() const {
    ActorCritic net(shape, /*seed=*/0);
    if (net.parameter_count() != params.size())
      throw CheckpointError("checkpoint parameter count does not match its shape");
    net.params() = params;
    net.adam_m() = adam_m;
    net.adam_v() = adam_v;
    net.adam_step() = adam_step;
    return net;
  }

  ObservationNormalizer build_normalizer() const {
    ObservationNormalizer norm(shape.input_dim, obs_norm_enabled);
    norm.restore(obs_mean, obs_var, obs_count, obs_norm_enabled);
    return norm;
  }
};

namespace detail {

template <class T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::istream& is, const char* what) {
  T value;
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw CheckpointError(std::string("checkpoint truncated at ") + what);
  return value;
}

inline void write_array(std::ostream& os, const Eigen::VectorXd& v) {
  write_pod(os, static_cast<std::uint64_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline Eigen::VectorXd read_array(std::istream& is, const char* what) {
  const auto count = read_pod<std::uint64_t>(is, what);
  if (count > (1ull << 32))
    throw CheckpointError(std::string("checkpoint array too large at ") + what);
  Eigen::VectorXd v(static_cast<Eigen::Index>(count));
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw CheckpointError(std::string("checkpoint truncated at ") + what);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const ActorCritic& net,
                            const ObservationNormalizer& norm, double progress) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot open '" + path + "' for writing");
  os.write(kCheckpointMagic, 4);
  detail::write_pod(os, kCheckpointVersion);
  const NetworkShape& s = net.shape();
  detail::write_pod(os, static_cast<std::uint32_t>(s.input_dim));
  detail::write_pod(os, static_cast<std::uint32_t>(s.action_dim));
  detail::write_pod(os, static_cast<std::uint32_t>(s.hidden.size()));
  for (int h : s.hidden) detail::write_pod(os, static_cast<std::uint32_t>(h));
  detail::write_pod(os, static_cast<std::uint8_t>(norm.enabled() ? 1 : 0));
  detail::write_pod(os, static_cast<std::int64_t>(net.adam_step()));
  detail::write_pod(os, progress);
  detail::write_array(os, net.params());
  detail::write_array(os, net.adam_m());
  detail::write_array(os, net.adam_v());
  detail::write_array(os, norm.mean());
  detail::write_array(os, norm.variance());
  detail::write_pod(os, norm.count());
  if (!os) throw CheckpointError("write to '" + path + "' failed");
}

inline CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw CheckpointError("'" + path + "' is not a checkpoint (bad magic)");
  const auto version = detail::read_pod<std::uint32_t>(is, "version");
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));

  CheckpointData data;
  data.shape.input_dim =
      static_cast<int>(detail::read_pod<std::uint32_t>(is, "input_dim"));
  data.shape.action_dim =
      static_cast<int>(detail::read_pod<std::uint32_t>(is, "action_dim"));
  const auto hidden_count = detail::read_pod<std::uint32_t>(is, "hidden_count");
  if (hidden_count > 64)
    throw CheckpointError("checkpoint declares an implausible layer count");
  data.shape.hidden.resize(hidden_count);
  for (auto& h : data.shape.hidden)
    h = static_cast<int>(detail::read_pod<std::uint32_t>(is, "hidden"));
  data.shape.validate();
  data.obs_norm_enabled = detail::read_pod<std::uint8_t>(is, "obs_norm") != 0;
  data.adam_step = detail::read_pod<std::int64_t>(is, "adam_step");
  data.progress = detail::read_pod<double>(is, "progress");
  data.params = detail::read_array(is, "params");
  data.adam_m = detail::read_array(is, "adam_m");
  data.adam_v = detail::read_array(is, "adam_v");
  data.obs_mean = detail::read_array(is, "obs_mean");
  data.obs_var = detail::read_array(is, "obs_var");
  data.obs_count = detail::read_pod<double>(is, "obs_count");

  if (data.adam_m.size() != data.params.size() ||
      data.adam_v.size() != data.params.size())
    throw CheckpointError("checkpoint moment arrays do not match the parameters");
  if (data.obs_mean.size() != data.shape.input_dim ||
      data.obs_var.size() != data.shape.input_dim)
    throw CheckpointError("checkpoint normalizer arrays do not match input_dim");
  return data;
}

}  // namespace catrl
