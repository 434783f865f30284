#include "aimc/pulse.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace aimc;

namespace {

PulseConfig cfg(double dw_min, int max_bl = 32, double sigma_c = 0.0) {
  PulseConfig c;
  c.delta_w_min = dw_min;
  c.max_bl = max_bl;
  c.sigma_c = sigma_c;
  return c;
}

// n unit pulses applied by hand
double pulse_recursion(const ResponseModel& m, double w, double dw_min, int n, bool up) {
  for (int i = 0; i < n; ++i) w += (up ? dw_min : -dw_min) * m.q(w, up);
  return w;
}

}  // namespace

TEST(Pulse, BitLength) {
  EXPECT_EQ(bit_length(cfg(1e-3), 0.0025), 3);
  EXPECT_EQ(bit_length(cfg(1e-3), -0.0025), 3);
  EXPECT_EQ(bit_length(cfg(1e-3), 0.0), 0);
  EXPECT_EQ(bit_length(cfg(1e-3), 1.0), 32);
  // exact multiples are not bumped by rounding noise
  EXPECT_EQ(bit_length(cfg(0.1), 0.3), 3);
  EXPECT_EQ(bit_length(cfg(1e-3), 0.001 * 7), 7);
  EXPECT_EQ(bit_length(cfg(1e-3), 1e-7), 1);
}

TEST(Pulse, ConfigValidation) {
  EXPECT_AIMC_ERROR(cfg(0.0).validate(), InvalidArgument);
  EXPECT_AIMC_ERROR(cfg(1e-3, 0).validate(), InvalidArgument);
  EXPECT_AIMC_ERROR(cfg(1e-3, 1, -1).validate(), InvalidArgument);
}

TEST(Pulse, SinglePulse) {
  const auto m = ResponseModel::generic_linear(1, 0);
  Rng rng(1);
  EXPECT_DOUBLE_EQ(pulse_update_once(m, cfg(0.01), 0.0, PulseSign::Positive, rng), 0.01);
  EXPECT_DOUBLE_EQ(pulse_update_once(m, cfg(0.01), 0.5, PulseSign::Negative, rng), 0.485);
}

TEST(Pulse, CycleNoiseIsZeroMean) {
  const auto m = ResponseModel::generic_linear(1, 0);
  const auto c = cfg(0.01, 32, 0.1);
  Rng rng(42);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += (pulse_update_once(m, c, 0.0, PulseSign::Positive, rng) - 0.0) / 0.01;
  EXPECT_NEAR(sum / n, 1.0, 3 * 0.1 / std::sqrt(n));
}

TEST(Pulse, Train) {
  Rng rng(3);
  const auto ideal = ResponseModel::generic_linear(1e9, 0);
  EXPECT_NEAR(pulse_train_update(ideal, cfg(1e-3), 0.0, 10e-3, rng), 10e-3, 1e-12);

  const auto m = ResponseModel::generic_linear(1, 0);
  EXPECT_DOUBLE_EQ(pulse_train_update(m, cfg(0.1), 0.0, 0.1, rng), 0.1);

  const double pt = pulse_train_update(m, cfg(0.001, 1000), 0.0, 0.1, rng);
  EXPECT_NEAR(pt, pulse_recursion(m, 0.0, 0.001, 100, true), 1e-14);
  EXPECT_LE(std::abs(pt - closed_form_update(m, 0.0, 0.1)), 5e-3);
  EXPECT_NEAR(pt, 0.095, 1e-3);
}

TEST(Pulse, TrainRespectsCap) {
  Rng rng(3);
  const auto ideal = ResponseModel::generic_linear(1e9, 0);
  EXPECT_NEAR(pulse_train_update(ideal, cfg(1e-3, 8), 0.0, 1.0, rng), 8e-3, 1e-12);
}

TEST(Pulse, ClosedForm) {
  const auto m = ResponseModel::generic_linear(1, 0);
  EXPECT_DOUBLE_EQ(closed_form_update(m, 0.5, 0.1), 0.55);
  EXPECT_DOUBLE_EQ(closed_form_update(m, 0.5, -0.1), 0.35);
  EXPECT_EQ(closed_form_update(m, 0.3, 0.0), 0.3);
  EXPECT_EQ(closed_form_update(m, 0.9, 5.0), 1.0);  // clamped
}

TEST(Pulse, CompactFormAgrees) {
  Rng rng(11);
  for (const auto& m : {ResponseModel::generic_linear(2, 0.3), ResponseModel::power(1, 0.5),
                        ResponseModel::exponential(1.5, 3)}) {
    std::uniform_real_distribution<double> uw(m.range().lo, m.range().hi), ud(-0.1, 0.1);
    for (int i = 0; i < 10000; ++i) {
      const double w = uw(rng), dw = ud(rng);
      EXPECT_NEAR(closed_form_update(m, w, dw), compact_form_update(m, w, dw), 1e-14);
    }
  }
}

TEST(Pulse, SignConsistencyAndRange) {
  Rng rng(5);
  const auto m = ResponseModel::generic_linear(1, 0.2);
  std::uniform_real_distribution<double> uw(-0.99, 0.99), ud(-0.5, 0.5);
  for (int i = 0; i < 2000; ++i) {
    const double w = uw(rng), dw = ud(rng);
    const double out = pulse_train_update(m, cfg(1e-2), w, dw, rng);
    if (dw > 0) EXPECT_GT(out, w);
    if (dw < 0) EXPECT_LT(out, w);
    EXPECT_TRUE(m.range().contains(out));
  }
  // a noisy train never leaves the range either
  const auto noisy = cfg(0.05, 32, 1.5);
  double w = 0.0;
  for (int i = 0; i < 2000; ++i) {
    w = pulse_train_update(m, noisy, w, ud(rng) * 4, rng);
    ASSERT_TRUE(m.range().contains(w));
  }
}

TEST(Pulse, Deterministic) {
  const auto m = ResponseModel::power(1, 0.5);
  const auto c = cfg(1e-3, 32, 0.6);
  Rng a(9), b(9);
  double wa = 0.1, wb = 0.1;
  for (int i = 0; i < 1000; ++i) {
    const double dw = 0.01 * std::sin(i);
    wa = pulse_train_update(m, c, wa, dw, a);
    wb = pulse_train_update(m, c, wb, dw, b);
  }
  EXPECT_EQ(wa, wb);
}

TEST(PulseSweep, ErrorShrinksWithStep) {
  const std::vector<double> grid{0.2, 0.1, 0.05, 0.025};
  const PulseConfig wide = cfg(1e-3, 1 << 20);
  for (const auto& m : {ResponseModel::generic_linear(1, 0), ResponseModel::generic_linear(2, 0.3),
                        ResponseModel::power(1, 0.5), ResponseModel::exponential(1, 2)}) {
    const auto e = approximation_error_sweep(m, wide, 0.3, grid);
    ASSERT_EQ(e.size(), grid.size());
    for (std::size_t i = 1; i < e.size(); ++i) EXPECT_LT(e[i].relative_error, e[i - 1].relative_error);
  }
  const auto ideal = approximation_error_sweep(ResponseModel::generic_linear(1e9, 0), wide, 0.3, grid);
  for (const auto& p : ideal) EXPECT_LE(p.relative_error, 1e-9);
}

TEST(PulseSweep, SinglePulseIsExact) {
  // dw = dw_min: one pulse, same as the closed form
  const auto e = approximation_error_sweep(ResponseModel::generic_linear(1e9, 0), cfg(1e-3), 0.0, {0.1}, 10.0);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_LE(e[0].relative_error, 1e-9);
  const auto l = approximation_error_sweep(ResponseModel::generic_linear(1, 0), cfg(1e-3), 0.4, {0.1}, 10.0);
  EXPECT_LE(l[0].relative_error, 1e-12);
}
