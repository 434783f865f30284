#pragma once

#include "aimc/common.hpp"
#include "aimc/response.hpp"

#include <vector>

namespace aimc {

/// Element-level pulse physics.
struct PulseConfig {
  double delta_w_min = 1e-3;  // response granularity
  int max_bl = 32;            // pulses fired per update are capped here
  double sigma_c = 0.0;       // cycle-to-cycle variation (fraction of response)

  void validate() const;
};

enum class PulseSign { Positive, Negative };

/// Pulses needed for a desired increment: ceil(|dw| / dw_min), capped at max_bl.
/// Ratios within 1e-9 (relative) of an integer are not rounded up.
int bit_length(const PulseConfig& cfg, double delta_w);

/// One pulse: w +/- dw_min * (q_sign(w) + sigma_c * xi), clamped to the range.
/// Draws xi only when sigma_c > 0.
double pulse_update_once(const ResponseModel& model, const PulseConfig& cfg, double w, PulseSign sign,
                         Rng& rng);

/// Fires bit_length(cfg, delta_w) pulses in the direction of delta_w.
double pulse_train_update(const ResponseModel& model, const PulseConfig& cfg, double w, double delta_w,
                          Rng& rng);

/// w + dw * q+(w) for dw >= 0, w + dw * q-(w) otherwise; clamped.
double closed_form_update(const ResponseModel& model, double w, double delta_w);

/// Same update written as w + dw * F(w) - |dw| * G(w); clamped.
double compact_form_update(const ResponseModel& model, double w, double delta_w);

struct PulseApproximationError {
  double delta_w = 0.0;
  double relative_error = 0.0;
};

/// Compares the pulse train against the closed-form update for each dw in the
/// grid, with granularity dw_min = granularity_scale * dw^2 (cycle noise off).
/// Points where the pulse train does not move w are skipped.
std::vector<PulseApproximationError> approximation_error_sweep(const ResponseModel& model,
                                                               const PulseConfig& base, double w,
                                                               const std::vector<double>& delta_w_grid,
                                                               double granularity_scale = 1.0);

}  // namespace aimc
