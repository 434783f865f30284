#include "aimc/pulse.hpp"

#include <cmath>

namespace aimc {

void PulseConfig::validate() const {
  if (!(delta_w_min > 0.0)) throw Error(ErrorKind::InvalidArgument, "delta_w_min must be positive");
  if (max_bl < 1) throw Error(ErrorKind::InvalidArgument, "max_bl must be >= 1");
  if (!(sigma_c >= 0.0)) throw Error(ErrorKind::InvalidArgument, "sigma_c must be non-negative");
}

int bit_length(const PulseConfig& cfg, double delta_w) {
  if (delta_w == 0.0) return 0;
  const double ratio = std::abs(delta_w) / cfg.delta_w_min;
  if (ratio >= static_cast<double>(cfg.max_bl)) return cfg.max_bl;
  const double nearest = std::round(ratio);
  const double pulses = std::abs(ratio - nearest) <= 1e-9 * nearest ? nearest : std::ceil(ratio);
  return std::max(1, static_cast<int>(pulses));
}

double pulse_update_once(const ResponseModel& model, const PulseConfig& cfg, double w, PulseSign sign,
                         Rng& rng) {
  const bool up = sign == PulseSign::Positive;
  double response = model.q(w, up);
  if (cfg.sigma_c > 0.0) response += cfg.sigma_c * standard_normal(rng);
  const double step = cfg.delta_w_min * response;
  return model.range().clamp(up ? w + step : w - step);
}

double pulse_train_update(const ResponseModel& model, const PulseConfig& cfg, double w, double delta_w,
                          Rng& rng) {
  const int pulses = bit_length(cfg, delta_w);
  const PulseSign sign = delta_w > 0.0 ? PulseSign::Positive : PulseSign::Negative;
  for (int i = 0; i < pulses; ++i) w = pulse_update_once(model, cfg, w, sign, rng);
  return w;
}

double closed_form_update(const ResponseModel& model, double w, double delta_w) {
  const double q = delta_w >= 0.0 ? model.q_plus(w) : model.q_minus(w);
  return model.range().clamp(w + delta_w * q);
}

double compact_form_update(const ResponseModel& model, double w, double delta_w) {
  const auto [f, g] = model.decompose(w);
  return model.range().clamp(w + delta_w * f - std::abs(delta_w) * g);
}

std::vector<PulseApproximationError> approximation_error_sweep(const ResponseModel& model,
                                                               const PulseConfig& base, double w,
                                                               const std::vector<double>& delta_w_grid,
                                                               double granularity_scale) {
  std::vector<PulseApproximationError> out;
  out.reserve(delta_w_grid.size());
  Rng unused(0);
  for (double dw : delta_w_grid) {
    PulseConfig cfg = base;
    cfg.sigma_c = 0.0;
    cfg.delta_w_min = granularity_scale * dw * dw;
    cfg.validate();
    const double pulsed = pulse_train_update(model, cfg, w, dw, unused);
    const double moved = std::abs(pulsed - w);
    if (moved == 0.0) continue;
    out.push_back({dw, std::abs(pulsed - closed_form_update(model, w, dw)) / moved});
  }
  return out;
}

}  // namespace aimc
