#include "aimc/response.hpp"

#include "aimc/common.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace aimc {

const char* to_string(ResponseKind kind) {
  switch (kind) {
    case ResponseKind::GenericLinear: return "linear";
    case ResponseKind::Power: return "power";
    case ResponseKind::Exponential: return "exponential";
    case ResponseKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// MonotoneCubic

namespace {

double end_slope(double h0, double h1, double d0, double d1) {
  // Non-centered three-point estimate, limited to keep the end monotone.
  double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (s * d0 <= 0.0) return 0.0;
  if (d0 * d1 <= 0.0 && std::abs(s) > std::abs(3.0 * d0)) return 3.0 * d0;
  return s;
}

}  // namespace

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "monotone cubic needs >= 2 matching samples");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "interpolation knots must be strictly increasing");
    }
  }

  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    delta[i] = (y_[i + 1] - y_[i]) / h[i];
  }

  slope_.assign(n, 0.0);
  if (n == 2) {
    slope_[0] = slope_[1] = delta[0];
    return;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0.0) {
      slope_[k] = 0.0;
    } else {
      const double w1 = 2.0 * h[k] + h[k - 1];
      const double w2 = h[k] + 2.0 * h[k - 1];
      slope_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
  }
  slope_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
  slope_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

std::size_t MonotoneCubic::segment(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(i, x_.size() - 2);
}

double MonotoneCubic::operator()(double x) const {
  x = std::clamp(x, x_.front(), x_.back());
  const std::size_t i = segment(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] + h11 * h * slope_[i + 1];
}

double MonotoneCubic::derivative(double x) const {
  x = std::clamp(x, x_.front(), x_.back());
  const std::size_t i = segment(x);
  const double h = x_[i + 1] - x_[i];
  const double t = (x - x_[i]) / h;
  const double t2 = t * t;
  const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1;
  const double d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
  return (d00 * y_[i] + d01 * y_[i + 1]) / h + d10 * slope_[i] + d11 * slope_[i + 1];
}

// ---------------------------------------------------------------------------
// ResponseModel construction

ResponseModel ResponseModel::generic_linear(double tau, double c_lin) {
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
  if (!(std::abs(c_lin) < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "|c_lin| must be < 1 for positive responses");
  }
  ResponseModel m;
  m.kind_ = ResponseKind::GenericLinear;
  m.tau_ = tau;
  m.c_lin_ = c_lin;
  m.range_ = {-tau, tau};
  m.symmetric_point_ = c_lin * tau;
  m.finalize_bounds();
  return m;
}

ResponseModel ResponseModel::power(double tau, double gamma_res) {
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
  if (!(gamma_res > 0.0)) throw Error(ErrorKind::InvalidArgument, "gamma_res must be positive");
  ResponseModel m;
  m.kind_ = ResponseKind::Power;
  m.tau_ = tau;
  m.gamma_res_ = gamma_res;
  m.range_ = {-tau, tau};
  m.symmetric_point_ = 0.0;
  m.finalize_bounds();
  return m;
}

ResponseModel ResponseModel::exponential(double tau, double gamma_res) {
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
  if (!(gamma_res > 0.0)) throw Error(ErrorKind::InvalidArgument, "gamma_res must be positive");
  ResponseModel m;
  m.kind_ = ResponseKind::Exponential;
  m.tau_ = tau;
  m.gamma_res_ = gamma_res;
  m.range_ = {-tau, tau};
  m.symmetric_point_ = 0.0;
  m.finalize_bounds();
  return m;
}

ResponseModel ResponseModel::tabulated(std::vector<double> w, std::vector<double> q_plus,
                                       std::vector<double> q_minus) {
  if (w.size() != q_plus.size() || w.size() != q_minus.size()) {
    throw Error(ErrorKind::InvalidArgument, "tabulated response columns differ in length");
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    const bool interior = i > 0 && i + 1 < w.size();
    if (q_plus[i] < 0.0 || q_minus[i] < 0.0 || (interior && (q_plus[i] <= 0.0 || q_minus[i] <= 0.0))) {
      throw Error(ErrorKind::InvalidArgument, "tabulated responses must be positive inside the range");
    }
  }
  ResponseModel m;
  m.kind_ = ResponseKind::Tabulated;
  auto table = std::make_shared<Table>();
  table->q_plus = std::make_shared<MonotoneCubic>(w, std::move(q_plus));
  table->q_minus = std::make_shared<MonotoneCubic>(w, std::move(q_minus));
  table->w = std::move(w);
  m.range_ = {table->w.front(), table->w.back()};
  m.tau_ = 0.5 * m.range_.width();
  m.table_ = std::move(table);

  // Symmetric point: first sign change of G on the knots, refined by bisection.
  auto g = [&m](double x) { return m.decompose(x).asymmetric; };
  const auto& knots = m.table_->w;
  for (std::size_t i = 0; i < knots.size(); ++i) {
    const double gi = g(knots[i]);
    if (gi == 0.0) {
      m.symmetric_point_ = knots[i];
      break;
    }
    if (i + 1 < knots.size() && gi * g(knots[i + 1]) < 0.0) {
      double a = knots[i], b = knots[i + 1];
      double ga = gi;
      for (int it = 0; it < 200 && b - a > 0.0; ++it) {
        const double mid = 0.5 * (a + b);
        const double gm = g(mid);
        if (gm == 0.0 || std::abs(gm) < 1e-14) {
          a = b = mid;
          break;
        }
        if ((gm < 0.0) == (ga < 0.0)) {
          a = mid;
          ga = gm;
        } else {
          b = mid;
        }
      }
      m.symmetric_point_ = 0.5 * (a + b);
      break;
    }
  }
  m.finalize_bounds();
  return m;
}

ResponseModel ResponseModel::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open response table " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::InvalidArgument, "empty response table " + path);
  std::vector<double> w, qp, qm;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    double vals[3];
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(ss, cell, ',')) {
        throw Error(ErrorKind::InvalidArgument,
                    path + ":" + std::to_string(lineno) + ": expected 3 columns");
      }
      try {
        vals[c] = std::stod(cell);
      } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidArgument,
                    path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    w.push_back(vals[0]);
    qp.push_back(vals[1]);
    qm.push_back(vals[2]);
  }
  return tabulated(std::move(w), std::move(qp), std::move(qm));
}

void ResponseModel::finalize_bounds() {
  switch (kind_) {
    case ResponseKind::GenericLinear:
      q_min_ = 0.0;
      q_max_ = 2.0 * (1.0 + std::abs(c_lin_));
      break;
    case ResponseKind::Power:
      q_min_ = 0.0;
      q_max_ = std::pow(2.0, gamma_res_);
      break;
    case ResponseKind::Exponential:
      q_min_ = 0.0;
      q_max_ = std::exp(gamma_res_) + 1.0;
      break;
    case ResponseKind::Tabulated: {
      constexpr int kScan = 10000;
      q_min_ = std::numeric_limits<double>::infinity();
      q_max_ = 0.0;
      for (int i = 0; i <= kScan; ++i) {
        const double w = range_.lo + range_.width() * i / kScan;
        const double a = q_plus(w), b = q_minus(w);
        q_min_ = std::min({q_min_, a, b});
        q_max_ = std::max({q_max_, a, b});
      }
      break;
    }
  }
}

ResponseModel ResponseModel::scaled(double tau_factor, double gamma_factor) const {
  switch (kind_) {
    case ResponseKind::GenericLinear: return generic_linear(tau_ * tau_factor, c_lin_);
    case ResponseKind::Power: return power(tau_ * tau_factor, gamma_res_ * gamma_factor);
    case ResponseKind::Exponential: return exponential(tau_ * tau_factor, gamma_res_ * gamma_factor);
    case ResponseKind::Tabulated: {
      std::vector<double> w = table_->w;
      for (double& x : w) x *= tau_factor;
      return tabulated(std::move(w), table_->q_plus->values(), table_->q_minus->values());
    }
  }
  return *this;
}

// ---------------------------------------------------------------------------
// Evaluation

double ResponseModel::q_plus(double w) const {
  w = range_.clamp(w);
  switch (kind_) {
    case ResponseKind::GenericLinear: return (1.0 + c_lin_) * (1.0 - w / tau_);
    case ResponseKind::Power: return std::pow(1.0 - w / tau_, gamma_res_);
    case ResponseKind::Exponential:
      return std::expm1(gamma_res_ * (1.0 - w / tau_)) / std::expm1(gamma_res_);
    case ResponseKind::Tabulated: return std::max(0.0, (*table_->q_plus)(w));
  }
  return 0.0;
}

double ResponseModel::q_minus(double w) const {
  w = range_.clamp(w);
  switch (kind_) {
    case ResponseKind::GenericLinear: return (1.0 - c_lin_) * (1.0 + w / tau_);
    case ResponseKind::Power: return std::pow(1.0 + w / tau_, gamma_res_);
    case ResponseKind::Exponential:
      return std::expm1(gamma_res_ * (1.0 + w / tau_)) / std::expm1(gamma_res_);
    case ResponseKind::Tabulated: return std::max(0.0, (*table_->q_minus)(w));
  }
  return 0.0;
}

double ResponseModel::dq_plus(double w) const {
  w = range_.clamp(w);
  switch (kind_) {
    case ResponseKind::GenericLinear: return -(1.0 + c_lin_) / tau_;
    case ResponseKind::Power:
      return -gamma_res_ / tau_ * std::pow(1.0 - w / tau_, gamma_res_ - 1.0);
    case ResponseKind::Exponential:
      return -gamma_res_ / tau_ * std::exp(gamma_res_ * (1.0 - w / tau_)) / std::expm1(gamma_res_);
    case ResponseKind::Tabulated: return table_->q_plus->derivative(w);
  }
  return 0.0;
}

double ResponseModel::dq_minus(double w) const {
  w = range_.clamp(w);
  switch (kind_) {
    case ResponseKind::GenericLinear: return (1.0 - c_lin_) / tau_;
    case ResponseKind::Power:
      return gamma_res_ / tau_ * std::pow(1.0 + w / tau_, gamma_res_ - 1.0);
    case ResponseKind::Exponential:
      return gamma_res_ / tau_ * std::exp(gamma_res_ * (1.0 + w / tau_)) / std::expm1(gamma_res_);
    case ResponseKind::Tabulated: return table_->q_minus->derivative(w);
  }
  return 0.0;
}

ResponseComponents ResponseModel::decompose(double w) const {
  const double qp = q_plus(w), qm = q_minus(w);
  return {(qm + qp) / 2.0, (qm - qp) / 2.0};
}

double ResponseModel::symmetric_point() const {
  if (!symmetric_point_) {
    throw Error(ErrorKind::NoSymmetricPoint, "asymmetric component has no sign change over the range");
  }
  return *symmetric_point_;
}

double ResponseModel::asymmetry_ratio(double w) const {
  const auto [f, g] = decompose(w);
  return g / f;
}

double ResponseModel::asymmetry_ratio_slope(double w) const {
  if (kind_ == ResponseKind::Tabulated) {
    const double h = range_.width() / 1e4;
    return (asymmetry_ratio(w + h) - asymmetry_ratio(w - h)) / (2.0 * h);
  }
  const auto [f, g] = decompose(w);
  const double dp = dq_plus(w), dm = dq_minus(w);
  const double df = (dm + dp) / 2.0, dg = (dm - dp) / 2.0;
  return (dg * f - g * df) / (f * f);
}

double ResponseModel::penalty(double w) const {
  w = range_.clamp(w);
  const double start = symmetric_point();
  if (kind_ == ResponseKind::GenericLinear && c_lin_ == 0.0) {
    return w * w / (2.0 * tau_);
  }
  if (w == start) return 0.0;
  double error = 0.0;
  auto ratio = [this](double u) { return asymmetry_ratio(u); };
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(ratio, start, w, 20, 1e-13, &error);
  const double tolerance = 1e-10 * std::max(1.0, std::abs(value));
  if (!(error <= tolerance)) {
    std::ostringstream msg;
    msg << "penalty quadrature reached error estimate " << error << " (tolerance " << tolerance << ")";
    throw Error(ErrorKind::QuadratureFailure, msg.str());
  }
  return value;
}

}  // namespace aimc
