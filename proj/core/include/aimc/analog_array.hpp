#pragma once

#include "aimc/common.hpp"
#include "aimc/pulse.hpp"
#include "aimc/response.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aimc {

enum class UpdateBackend { ClosedForm, PulseTrain };

const char* to_string(UpdateBackend backend);

/// Independent per-element copies of `base` with tau (and gamma_res where the
/// family has one) multiplied by exp(spread * N(0,1)), clipped to
/// [exp(-3 spread), exp(3 spread)]. Row-major order.
std::vector<ResponseModel> with_element_variation(const ResponseModel& base, double spread, Eigen::Index rows,
                                                  Eigen::Index cols, Rng& rng);

/// A weight matrix stored on resistive elements. Weights only change through
/// analog updates (closed form or pulse trains); digital code sees them through
/// `read`, optionally relative to a zero-shift reference and with read noise.
class AnalogArray {
 public:
  AnalogArray(Eigen::Index rows, Eigen::Index cols, ResponseModel response, PulseConfig pulse,
              UpdateBackend backend = UpdateBackend::ClosedForm, double read_noise_sigma = 0.0);

  /// Per-element responses, row-major, size rows * cols.
  AnalogArray(Eigen::Index rows, Eigen::Index cols, std::vector<ResponseModel> responses, PulseConfig pulse,
              UpdateBackend backend = UpdateBackend::ClosedForm, double read_noise_sigma = 0.0);

  Eigen::Index rows() const { return weights_.rows(); }
  Eigen::Index cols() const { return weights_.cols(); }

  const Matrix& weights() const { return weights_; }
  /// Programs the conductances directly (clamped to each element's range).
  void set_weights(const Matrix& w);

  const ResponseModel& response(Eigen::Index i, Eigen::Index j) const {
    return responses_.size() == 1 ? responses_.front() : responses_[static_cast<std::size_t>(i * cols() + j)];
  }
  bool element_varied() const { return responses_.size() > 1; }

  const PulseConfig& pulse_config() const { return pulse_; }
  UpdateBackend backend() const { return backend_; }
  double read_noise_sigma() const { return read_noise_sigma_; }
  void set_read_noise_sigma(double sigma) { read_noise_sigma_ = sigma; }

  const std::optional<Matrix>& reference() const { return reference_; }

  /// Desired increment -lr * desired, element-wise through the backend.
  void apply_update(const Matrix& desired, double lr, Rng& rng);
  /// Signed increments, element-wise through the backend.
  void apply_increment(const Matrix& delta, Rng& rng);
  /// Signed increments for a single column.
  void apply_column_increment(Eigen::Index col, const Vector& delta, Rng& rng);
  /// Exactly one pulse into element (i, j). ClosedForm fires a noiseless pulse.
  void fire_pulse(Eigen::Index i, Eigen::Index j, PulseSign sign, Rng& rng);

  /// weights - reference + sigma_read * N(0, 1) per element. No state change.
  Matrix read(Rng& rng) const;
  /// weights - reference, without read noise.
  Matrix logical() const;

  /// Stores the current conductances as the reference subtracted on read.
  void zero_shift();
  /// Programs every element to its symmetric point, then zero-shifts.
  void reset_to_symmetric_point();

  /// Signed count of single pulses fired through fire_pulse.
  std::int64_t fired_pulses() const { return fired_pulses_; }

  void save_csv(const std::string& path) const;
  void load_csv(const std::string& path);
  void save_binary(const std::string& path) const;
  void load_binary(const std::string& path);

 private:
  double update_element(Eigen::Index i, Eigen::Index j, double delta, Rng& rng) const;

  Matrix weights_;
  std::vector<ResponseModel> responses_;
  PulseConfig pulse_;
  UpdateBackend backend_;
  double read_noise_sigma_;
  std::optional<Matrix> reference_;
  std::int64_t fired_pulses_ = 0;
};

}  // namespace aimc
