#include "aimc/optimizers.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace aimc;

namespace {

Matrix s(double v) { return Matrix::Constant(1, 1, v); }

PulseConfig pulses(double dw_min) {
  PulseConfig c;
  c.delta_w_min = dw_min;
  return c;
}

AnalogArray arr(const ResponseModel& m, double w = 0.0, double dw_min = 1e-3, double read_noise = 0.0) {
  AnalogArray a(1, 1, m, pulses(dw_min), UpdateBackend::ClosedForm, read_noise);
  a.set_weights(s(w));
  return a;
}

const ResponseModel kIdeal = ResponseModel::generic_linear(1e9, 0.0);

}  // namespace

TEST(DigitalSgd, Steps) {
  Rng rng(1);
  SgdConfig c;
  c.alpha = 0.1;
  DigitalSgd d(s(0.0), c);
  d.apply_gradient(s(1.0), rng);
  EXPECT_DOUBLE_EQ(d.weights()(0, 0), -0.1);
  d.apply_gradient(s(0.0), rng);
  EXPECT_DOUBLE_EQ(d.weights()(0, 0), -0.1);

  Matrix g1(2, 1), g2(2, 1);
  g1 << 0.3, -1.0;
  g2 << 2.0, 0.5;
  DigitalSgd e(Matrix::Ones(2, 1), c);
  e.apply_gradient(g1, rng);
  e.apply_gradient(g2, rng);
  EXPECT_LE((e.weights() - (Matrix::Ones(2, 1) - 0.1 * (g1 + g2))).norm(), 1e-15);

  c.alpha_decay = 1.0;
  EXPECT_DOUBLE_EQ(c.rate(3), 0.025);
  EXPECT_AIMC_ERROR(DigitalSgd(s(0), SgdConfig{0.0, 0.0}), InvalidArgument);
}

TEST(AnalogSgd, Steps) {
  Rng rng(2);
  SgdConfig c;
  c.alpha = 0.1;
  AnalogSgd a(arr(ResponseModel::generic_linear(1, 0), 0.5), c);
  a.apply_gradient(s(-1.0), rng);
  EXPECT_DOUBLE_EQ(a.weights()(0, 0), 0.55);
  a.apply_gradient(s(0.0), rng);
  EXPECT_DOUBLE_EQ(a.weights()(0, 0), 0.55);
  EXPECT_AIMC_ERROR(a.apply_gradient(Matrix::Zero(2, 1), rng), ShapeMismatch);
}

TEST(AnalogSgd, NoiseDriftsTowardSymmetricPoint) {
  // at a critical point with gradient noise +-g the mean update is -alpha g G(W)
  const auto m = ResponseModel::generic_linear(2, 0.3);
  const double ws = m.symmetric_point();
  for (double w : {-0.8, 0.0, 0.5, 0.65, 1.5}) {
    for (double g : {0.1, 1.0}) {
      Rng rng(3);
      SgdConfig c;
      c.alpha = 0.01;
      AnalogSgd up(arr(m, w), c), down(arr(m, w), c);
      up.apply_gradient(s(g), rng);
      down.apply_gradient(s(-g), rng);
      const double mean = 0.5 * (up.weights()(0, 0) + down.weights()(0, 0)) - w;
      EXPECT_NEAR(mean, -0.01 * g * m.decompose(w).asymmetric, 1e-15);
      EXPECT_LT(mean * (w - ws), 0.0);
    }
  }
}

TEST(ResidualLearning, IdealFirstStep) {
  Rng rng(4);
  ResidualConfig c;
  c.alpha = 0.1;
  c.beta = 1.0;
  c.gamma = 0.0;
  ResidualLearning rl(arr(kIdeal), arr(kIdeal), c);
  rl.apply_gradient(s(1.0), rng);
  EXPECT_NEAR(rl.residual_array()->weights()(0, 0), -0.1, 1e-9);
  EXPECT_NEAR(rl.main_array()->weights()(0, 0), -0.1, 1e-9);
  EXPECT_AIMC_ERROR((void)rl.buffer(), MissingBuffer);
  EXPECT_AIMC_ERROR(rl.set_buffer(s(0)), MissingBuffer);
}

TEST(ResidualLearning, StationaryAtOrigin) {
  // power response: symmetric point 0, so P = 0 with zero gradient is a fixed point
  const auto m = ResponseModel::power(1, 0.5);
  for (auto v : {ResidualVariant::RL, ResidualVariant::RLv2, ResidualVariant::TTv2}) {
    Rng rng(5);
    ResidualConfig c;
    c.variant = v;
    Matrix w0(2, 3);
    w0 << 0.1, -0.2, 0.3, 0.0, 0.5, -0.5;
    AnalogArray main(2, 3, m, pulses(1e-3));
    main.set_weights(w0);
    ResidualLearning rl(main, AnalogArray(2, 3, m, pulses(1e-3)), c);
    for (int k = 0; k < 50; ++k) rl.apply_gradient(Matrix::Zero(2, 3), rng);
    EXPECT_EQ(rl.main_array()->weights(), w0) << to_string(v);
    EXPECT_EQ(rl.residual_array()->weights(), Matrix::Zero(2, 3));
    if (v != ResidualVariant::RL) EXPECT_EQ(rl.buffer(), Matrix::Zero(2, 3));
  }
}

TEST(ResidualLearning, MatchesHandRecursion) {
  // gamma = 0 and a linear symmetric response: the plain two-array recursion
  const auto m = ResponseModel::generic_linear(1.5, 0.0);
  const double alpha = 0.05, beta = 0.2, target = 0.4;
  ResidualConfig c;
  c.alpha = alpha;
  c.beta = beta;
  c.gamma = 0.0;
  ResidualLearning rl(arr(m), arr(m), c);
  Rng rng(6);
  double w = 0.0, p = 0.0;
  auto compact = [&](double x, double d) { return x + d * m.decompose(x).symmetric - std::abs(d) * m.decompose(x).asymmetric; };
  for (int k = 0; k < 200; ++k) {
    const double g = w - target + 0.3 * std::sin(k);
    rl.step([&](const Matrix& at, Rng&) { return s(at(0, 0) - target + 0.3 * std::sin(k)); }, rng);
    p = compact(p, -alpha * g);
    w = compact(w, beta * p);
  }
  EXPECT_NEAR(rl.main_array()->weights()(0, 0), w, 1e-14);
  EXPECT_NEAR(rl.residual_array()->weights()(0, 0), p, 1e-14);
}

TEST(ResidualLearning, MixedWeights) {
  Rng rng(7);
  ResidualConfig c;
  c.gamma = 0.4;
  c.noisy_mixing_read = false;
  ResidualLearning rl(arr(kIdeal, 0.2), arr(kIdeal, 0.5, 1e-3, 0.3), c);
  EXPECT_DOUBLE_EQ(rl.prepare(rng)(0, 0), 0.4);
  EXPECT_DOUBLE_EQ(rl.weights()(0, 0), 0.4);
  c.noisy_mixing_read = true;
  ResidualLearning noisy(arr(kIdeal, 0.2), arr(kIdeal, 0.5, 1e-3, 0.3), c);
  EXPECT_NE(noisy.prepare(rng)(0, 0), 0.4);
  c.variant = ResidualVariant::TTv2;
  ResidualLearning tt(arr(kIdeal, 0.2), arr(kIdeal, 0.5), c);
  EXPECT_DOUBLE_EQ(tt.prepare(rng)(0, 0), 0.2);
}

TEST(ResidualLearning, BufferFiltersGeometrically) {
  Rng rng(8);
  ResidualConfig c;
  c.variant = ResidualVariant::RLv2;
  c.beta = 0.1;
  c.transfer_threshold = 1e9;  // never transfer
  const double p = 0.3, h0 = -0.2;
  ResidualLearning rl(arr(kIdeal), arr(kIdeal, p), c);
  rl.set_buffer(s(h0));
  for (int k = 1; k <= 30; ++k) {
    rl.apply_gradient(s(0.0), rng);
    EXPECT_NEAR(std::abs(rl.buffer()(0, 0) - p), std::pow(0.9, k) * std::abs(h0 - p), 1e-14);
  }
}

TEST(ResidualLearning, ThresholdRule) {
  const double dw = 1e-3;
  ResidualConfig c;
  c.variant = ResidualVariant::RLv2;
  c.beta = 0.5;
  {
    // read(P) == H, so the filtered value equals H
    Rng rng(9);
    ResidualLearning rl(arr(kIdeal, 0.0, dw), arr(kIdeal, 0.4 * dw), c);
    rl.set_buffer(s(0.4 * dw));
    rl.apply_gradient(s(0.0), rng);
    EXPECT_NEAR(rl.buffer()(0, 0), 0.4 * dw, 1e-18);
    EXPECT_EQ(rl.main_array()->weights()(0, 0), 0.0);
  }
  {
    Rng rng(9);
    ResidualLearning rl(arr(kIdeal, 0.0, dw), arr(kIdeal, 1.3 * dw), c);
    rl.set_buffer(s(1.3 * dw));
    rl.apply_gradient(s(0.0), rng);
    EXPECT_NEAR(rl.buffer()(0, 0), 0.3 * dw, 1e-15);
    EXPECT_NEAR(rl.main_array()->weights()(0, 0), dw, 1e-12);
    EXPECT_EQ(rl.main_array()->fired_pulses(), 1);
    EXPECT_EQ(rl.buffer_decrements(), 1);
  }
}

TEST(ResidualLearning, PulsesMatchBufferDecrements) {
  for (auto v : {ResidualVariant::RLv2, ResidualVariant::TTv2}) {
    Rng rng(10);
    const auto m = ResponseModel::generic_linear(1, 0.1);
    ResidualConfig c;
    c.variant = v;
    c.alpha = 0.05;
    c.beta = 0.3;
    AnalogArray main(3, 4, m, pulses(1e-3), UpdateBackend::PulseTrain);
    AnalogArray res(3, 4, m, pulses(1e-3), UpdateBackend::PulseTrain, 0.06);
    ResidualLearning rl(main, res, c);
    std::normal_distribution<double> n;
    for (int k = 0; k < 2000; ++k) {
      Matrix g(3, 4);
      for (int i = 0; i < 12; ++i) g.data()[i] = n(rng);
      rl.apply_gradient(g, rng);
    }
    EXPECT_NE(rl.buffer_decrements(), 0);
    EXPECT_EQ(rl.main_array()->fired_pulses(), rl.buffer_decrements()) << to_string(v);
    if (v == ResidualVariant::TTv2) EXPECT_LE(rl.buffer().cwiseAbs().maxCoeff(), c.buffer_clip);
  }
}

TEST(ResidualLearning, ColumnSchedule) {
  Rng rng(11);
  ResidualConfig c;
  c.beta = 1.0;
  c.gamma = 0.0;
  c.transfer_columns = 2;
  AnalogArray res(1, 3, kIdeal, pulses(1e-3));
  res.set_weights(Matrix::Constant(1, 3, 0.1));
  ResidualLearning rl(AnalogArray(1, 3, kIdeal, pulses(1e-3)), res, c);
  rl.apply_gradient(Matrix::Zero(1, 3), rng);
  EXPECT_NEAR(rl.main_array()->weights()(0, 0), 0.1, 1e-9);
  EXPECT_NEAR(rl.main_array()->weights()(0, 1), 0.1, 1e-9);
  EXPECT_EQ(rl.main_array()->weights()(0, 2), 0.0);
  rl.apply_gradient(Matrix::Zero(1, 3), rng);
  EXPECT_NEAR(rl.main_array()->weights()(0, 2), 0.1, 1e-9);
  EXPECT_NEAR(rl.main_array()->weights()(0, 0), 0.2, 1e-9);
}

TEST(ResidualLearning, ZeroShiftedResidual) {
  ResidualConfig c;
  c.zero_shift_residual = true;
  const auto m = ResponseModel::generic_linear(2, 0.3);
  ResidualLearning rl(arr(m), arr(m, -0.5), c);
  EXPECT_DOUBLE_EQ(rl.residual_array()->weights()(0, 0), 0.6);
  EXPECT_EQ(rl.residual_array()->logical()(0, 0), 0.0);
}

TEST(ResidualLearning, Deterministic) {
  auto run = [] {
    Rng rng(12);
    const auto m = ResponseModel::power(1, 0.5);
    ResidualConfig c;
    c.variant = ResidualVariant::RLv2;
    PulseConfig pc = pulses(1e-3);
    pc.sigma_c = 0.5;
    ResidualLearning rl(AnalogArray(2, 2, m, pc, UpdateBackend::PulseTrain),
                        AnalogArray(2, 2, m, pc, UpdateBackend::PulseTrain, 0.06), c);
    for (int k = 0; k < 500; ++k)
      rl.step([](const Matrix& w, Rng& r) { return Matrix(w.array() - 0.3 + 0.1 * standard_normal(r)); }, rng);
    return rl.weights();
  };
  EXPECT_EQ(run(), run());
}

TEST(ResidualLearning, ConfigChecks) {
  ResidualConfig c;
  c.beta = 0.0;
  EXPECT_AIMC_ERROR(c.validate(), InvalidArgument);
  c = ResidualConfig{};
  c.transfer_columns = 0;
  EXPECT_AIMC_ERROR(c.validate(), InvalidArgument);
  EXPECT_AIMC_ERROR(ResidualLearning(AnalogArray(1, 2, kIdeal, pulses(1e-3)), arr(kIdeal), ResidualConfig{}),
                    ShapeMismatch);
}
