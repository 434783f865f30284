#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace aimc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// All stochastic components draw from an explicitly passed engine.
using Rng = std::mt19937_64;

enum class ErrorKind {
  InvalidArgument,
  ShapeMismatch,
  NoSymmetricPoint,
  QuadratureFailure,
  MissingResidualArray,
  MissingBuffer,
  EmptyBatch,
  BadMagic,
  CountMismatch,
  TruncatedFile,
  SingularSystem,
  ConfigError,
  UnknownPreset,
  IoError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// SplitMix64 finalizer. Substreams are derived as
// mix(master ^ mix(stream_id + 1)) so adding a stream never shifts another one.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_id) {
  return splitmix64(master ^ splitmix64(stream_id + 1));
}

inline double standard_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace aimc
