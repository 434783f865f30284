#pragma once

#include "aimc/analog_array.hpp"
#include "aimc/common.hpp"
#include "aimc/problems.hpp"
#include "aimc/response.hpp"

#include <cstdint>

namespace aimc {

/// max_d G(x_d)^2 / F(x_d), i.e. ||G(X) / sqrt(F(X))||_inf^2.
double amplification_factor(const ResponseModel& model, const Matrix& x);

/// Same quantity over an array's conductances, with per-element responses.
double amplification_factor(const AnalogArray& array);

/// Element-wise q+(W) * q-(W) over an array's conductances.
Matrix saturation(const AnalogArray& array);

/// sum_d m_d * g_d^2.
double weighted_squared_norm(const Matrix& g, const Matrix& weights);

/// Stationary point of the noise-penalized objective f(W) + <Sigma, R_c(W)>
/// linearized at W* and the symmetric point:
///   (H + Diag(Sigma) R'(w_sym))^-1 (H W* + Diag(Sigma) R'(w_sym) W_sym).
/// Throws SingularSystem when the system cannot be solved.
Vector implicit_stationary_point(const ResponseModel& model, const QuadraticModel& problem, const Vector& sigma);

/// Gradient of the penalized objective, H (W - W*) + Sigma . R(W).
Vector penalized_gradient(const ResponseModel& model, const QuadraticModel& problem, const Vector& sigma,
                          const Vector& w);

/// Monte-Carlo element-wise mean of |stochastic gradient| at W.
Matrix empirical_sigma(const StochasticObjective& problem, const Matrix& w, int samples, Rng& rng);

/// Closed-form solution of the lower-level problem, (W* - W) / gamma.
Matrix residual_target(const Matrix& w, const Matrix& w_star, double gamma);

/// Running sums of the per-iteration diagnostics. Hidden constants of the
/// residual-learning metric are taken as 1.
class MetricsAccumulator {
 public:
  struct Sample {
    double grad_norm_sq = 0.0;        // ||grad f(W_k)||^2
    double mixed_grad_norm_sq = 0.0;  // ||grad f(W_bar_k)||^2
    double residual_gap_sq = 0.0;     // ||P_k - P*(W_k)||^2
    double dist_sq = 0.0;             // ||W_k - W*||^2
    double amp_main = 0.0;            // ||G(W_k)/sqrt(F(W_k))||_inf^2
    double amp_residual = 0.0;        // same for P_k
  };

  void add(const Sample& s);
  void merge(const MetricsAccumulator& other);

  std::int64_t count() const { return count_; }

  double e_asgd() const;  // mean ||grad f(W_k)||^2
  double e_rl() const;    // mean of mixed grad + residual gap + distance
  double s_asgd() const;  // mean amp_main
  double s_rl() const;    // mean amp_residual
  const Sample& sums() const { return sums_; }

 private:
  double mean(double sum) const;

  Sample sums_;
  std::int64_t count_ = 0;
};

}  // namespace aimc
