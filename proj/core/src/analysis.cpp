#include "aimc/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace aimc {

double amplification_factor(const ResponseModel& model, const Matrix& x) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const auto [f, g] = model.decompose(x(i, j));
      worst = std::max(worst, g * g / f);
    }
  return worst;
}

double amplification_factor(const AnalogArray& array) {
  double worst = 0.0;
  const Matrix& w = array.weights();
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const auto [f, g] = array.response(i, j).decompose(w(i, j));
      worst = std::max(worst, g * g / f);
    }
  return worst;
}

Matrix saturation(const AnalogArray& array) {
  const Matrix& w = array.weights();
  Matrix m(w.rows(), w.cols());
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) m(i, j) = array.response(i, j).saturation(w(i, j));
  return m;
}

double weighted_squared_norm(const Matrix& g, const Matrix& weights) {
  if (g.rows() != weights.rows() || g.cols() != weights.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "weighted norm operands differ in shape");
  }
  return (weights.array() * g.array().square()).sum();
}

Vector implicit_stationary_point(const ResponseModel& model, const QuadraticModel& problem, const Vector& sigma) {
  const Eigen::Index d = problem.minimizer.size();
  if (problem.hessian.rows() != d || problem.hessian.cols() != d || sigma.size() != d) {
    throw Error(ErrorKind::ShapeMismatch, "Hessian, minimizer and Sigma disagree");
  }
  if ((sigma.array() < 0.0).any()) throw Error(ErrorKind::InvalidArgument, "Sigma must be >= 0");

  const double w_sym = model.symmetric_point();
  const double slope = model.asymmetry_ratio_slope(w_sym);
  const Vector penalty_diag = sigma * slope;

  Matrix lhs = problem.hessian;
  lhs.diagonal() += penalty_diag;
  const Vector rhs = problem.hessian * problem.minimizer + penalty_diag * w_sym;

  Eigen::FullPivLU<Matrix> lu(lhs);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularSystem, "penalized Hessian is not invertible");
  return lu.solve(rhs);
}

Vector penalized_gradient(const ResponseModel& model, const QuadraticModel& problem, const Vector& sigma,
                          const Vector& w) {
  Vector g = problem.hessian * (w - problem.minimizer);
  for (Eigen::Index d = 0; d < w.size(); ++d) g(d) += sigma(d) * model.asymmetry_ratio(w(d));
  return g;
}

Matrix empirical_sigma(const StochasticObjective& problem, const Matrix& w, int samples, Rng& rng) {
  if (samples < 1) throw Error(ErrorKind::InvalidArgument, "need at least one sample");
  Matrix acc = Matrix::Zero(w.rows(), w.cols());
  for (int s = 0; s < samples; ++s) acc += problem.stochastic_gradient(w, rng).cwiseAbs();
  return acc / static_cast<double>(samples);
}

Matrix residual_target(const Matrix& w, const Matrix& w_star, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorKind::InvalidArgument, "gamma must be positive");
  if (w.rows() != w_star.rows() || w.cols() != w_star.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "W and W* differ in shape");
  }
  return (w_star - w) / gamma;
}

void MetricsAccumulator::add(const Sample& s) {
  sums_.grad_norm_sq += s.grad_norm_sq;
  sums_.mixed_grad_norm_sq += s.mixed_grad_norm_sq;
  sums_.residual_gap_sq += s.residual_gap_sq;
  sums_.dist_sq += s.dist_sq;
  sums_.amp_main += s.amp_main;
  sums_.amp_residual += s.amp_residual;
  ++count_;
}

void MetricsAccumulator::merge(const MetricsAccumulator& other) {
  sums_.grad_norm_sq += other.sums_.grad_norm_sq;
  sums_.mixed_grad_norm_sq += other.sums_.mixed_grad_norm_sq;
  sums_.residual_gap_sq += other.sums_.residual_gap_sq;
  sums_.dist_sq += other.sums_.dist_sq;
  sums_.amp_main += other.sums_.amp_main;
  sums_.amp_residual += other.sums_.amp_residual;
  count_ += other.count_;
}

double MetricsAccumulator::mean(double sum) const {
  if (count_ < 1) throw Error(ErrorKind::InvalidArgument, "averages need at least one iteration");
  return sum / static_cast<double>(count_);
}

double MetricsAccumulator::e_asgd() const { return mean(sums_.grad_norm_sq); }
double MetricsAccumulator::e_rl() const {
  return mean(sums_.mixed_grad_norm_sq + sums_.residual_gap_sq + sums_.dist_sq);
}
double MetricsAccumulator::s_asgd() const { return mean(sums_.amp_main); }
double MetricsAccumulator::s_rl() const { return mean(sums_.amp_residual); }

}  // namespace aimc
