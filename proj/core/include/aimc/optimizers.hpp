#pragma once

#include "aimc/analog_array.hpp"
#include "aimc/common.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace aimc {

/// Stochastic gradient oracle: weights at which to evaluate, and a random stream.
using GradientFn = std::function<Matrix(const Matrix&, Rng&)>;

struct SgdConfig {
  double alpha = 0.1;
  // alpha_k = alpha / (1 + alpha_decay * k)
  double alpha_decay = 0.0;

  void validate() const;
  double rate(std::int64_t k) const { return alpha / (1.0 + alpha_decay * static_cast<double>(k)); }
};

enum class ResidualVariant { RL, RLv2, TTv2 };

const char* to_string(ResidualVariant variant);

struct ResidualConfig {
  double alpha = 0.05;  // residual-array learning rate
  double beta = 0.01;   // transfer rate; also the buffer's moving-average weight
  double gamma = 0.4;   // mixing coefficient of the residual into the evaluated weight
  int transfer_columns = 1;
  ResidualVariant variant = ResidualVariant::RL;
  // Buffer magnitude that triggers one pulse into W. Defaults to W's dw_min.
  std::optional<double> transfer_threshold;
  // Whether the residual read that forms the mixed weight carries read noise.
  bool noisy_mixing_read = true;
  // Element-wise guard on the undamped TTv2 buffer.
  double buffer_clip = 1.0;
  // Move the residual array to its symmetric point and zero-shift it at start.
  bool zero_shift_residual = false;

  void validate() const;
};

/// Common driver interface: `prepare` yields the weights at which the gradient
/// must be evaluated, `apply_gradient` consumes that gradient.
class Optimizer {
 public:
  virtual ~Optimizer() = default;

  virtual std::string name() const = 0;
  virtual const Matrix& prepare(Rng& rng) = 0;
  virtual void apply_gradient(const Matrix& grad, Rng& rng) = 0;

  /// Noise-free model weights used for evaluation.
  virtual Matrix weights() const = 0;

  virtual const AnalogArray* main_array() const { return nullptr; }
  virtual const AnalogArray* residual_array() const { return nullptr; }

  void step(const GradientFn& grad_fn, Rng& rng) {
    const Matrix& at = prepare(rng);
    apply_gradient(grad_fn(at, rng), rng);
  }

  std::int64_t iteration() const { return iteration_; }

 protected:
  std::int64_t iteration_ = 0;
};

/// Reference floating-point SGD: W <- W - alpha_k * grad.
class DigitalSgd final : public Optimizer {
 public:
  DigitalSgd(Matrix initial, SgdConfig cfg);

  std::string name() const override { return "dsgd"; }
  const Matrix& prepare(Rng&) override { return weights_; }
  void apply_gradient(const Matrix& grad, Rng& rng) override;
  Matrix weights() const override { return weights_; }

 private:
  Matrix weights_;
  SgdConfig cfg_;
};

/// Gradient step written into an analog array: the desired increment
/// -alpha * grad is realized through the array's response, i.e.
/// W' = W - alpha grad . F(W) - alpha |grad| . G(W) for the closed form.
class AnalogSgd final : public Optimizer {
 public:
  AnalogSgd(AnalogArray array, SgdConfig cfg);

  std::string name() const override { return "asgd"; }
  const Matrix& prepare(Rng& rng) override;
  void apply_gradient(const Matrix& grad, Rng& rng) override;
  Matrix weights() const override { return array_.logical(); }
  const AnalogArray* main_array() const override { return &array_; }
  AnalogArray& array() { return array_; }

 private:
  AnalogArray array_;
  SgdConfig cfg_;
  Matrix eval_;
};

/// Residual learning over a main array W and a residual array P.
///
/// RL:   P tracks the residual by descending f(W + gamma P) through its own
///       analog response; after every step the scheduled columns of a fresh
///       P read are transferred into W with rate beta.
/// RLv2: as RL, but P reads are filtered by a digital buffer
///       H <- (1 - beta) H + beta read(P), and W receives one signed pulse per
///       element whenever |H| crosses the threshold (H is then reduced by dw_min).
/// TTv2: undamped buffer H <- H + beta read(P), and gradients at W instead of
///       the mixed weight.
class ResidualLearning final : public Optimizer {
 public:
  ResidualLearning(AnalogArray main, AnalogArray residual, ResidualConfig cfg);

  std::string name() const override { return to_string(cfg_.variant); }
  const Matrix& prepare(Rng& rng) override;
  void apply_gradient(const Matrix& grad, Rng& rng) override;
  /// W + gamma * P (noise-free); plain W for TTv2.
  Matrix weights() const override;
  const AnalogArray* main_array() const override { return &main_; }
  const AnalogArray* residual_array() const override { return &residual_; }

  AnalogArray& main() { return main_; }
  AnalogArray& residual() { return residual_; }
  const ResidualConfig& config() const { return cfg_; }

  /// Digital buffer H (v2 variants only).
  const Matrix& buffer() const;
  void set_buffer(const Matrix& h);

  /// Signed number of dw_min decrements applied to the buffer.
  std::int64_t buffer_decrements() const { return buffer_decrements_; }
  double transfer_threshold() const;

 private:
  void transfer(const Matrix& p_read, Rng& rng);
  void buffered_transfer(const Matrix& p_read, Rng& rng);

  AnalogArray main_;
  AnalogArray residual_;
  ResidualConfig cfg_;
  std::optional<Matrix> buffer_;
  Eigen::Index next_column_ = 0;
  std::int64_t buffer_decrements_ = 0;
  Matrix eval_;
};

}  // namespace aimc
