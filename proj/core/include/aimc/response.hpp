#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace aimc {

/// Closed interval of admissible conductance states.
struct DynamicRange {
  double lo = -1.0;
  double hi = 1.0;

  bool contains(double w) const { return w >= lo && w <= hi; }
  double clamp(double w) const { return w < lo ? lo : (w > hi ? hi : w); }
  double width() const { return hi - lo; }
};

enum class ResponseKind { GenericLinear, Power, Exponential, Tabulated };

const char* to_string(ResponseKind kind);

/// Symmetric (F) and asymmetric (G) parts of a response pair:
/// F = (q- + q+) / 2, G = (q- - q+) / 2.
struct ResponseComponents {
  double symmetric = 0.0;
  double asymmetric = 0.0;
};

class MonotoneCubic;

/// Pair of response functions (q+, q-) describing how much one positive or
/// negative pulse moves a resistive element at state w, in units of the
/// response granularity.
///
/// Built-in families live on [-tau, tau]:
///   generic linear  q+ = (1 + c)(1 - w/tau),          q- = (1 - c)(1 + w/tau)
///   power           q+ = (1 - w/tau)^g,               q- = (1 + w/tau)^g
///   exponential     q+ = (e^{g(1 - w/tau)} - 1)/(e^g - 1),  q- mirrored
/// Tabulated models interpolate sampled curves with a monotone piecewise cubic.
///
/// Evaluation outside the range uses the clamped boundary state, where a
/// response may reach 0 (hard saturation). Instances are immutable.
class ResponseModel {
 public:
  static ResponseModel generic_linear(double tau, double c_lin);
  static ResponseModel power(double tau, double gamma_res);
  static ResponseModel exponential(double tau, double gamma_res);
  static ResponseModel tabulated(std::vector<double> w, std::vector<double> q_plus,
                                 std::vector<double> q_minus);
  /// Reads `w,q_plus,q_minus` rows (header required, w strictly increasing).
  static ResponseModel load_csv(const std::string& path);

  ResponseKind kind() const { return kind_; }
  double tau() const { return tau_; }
  double c_lin() const { return c_lin_; }
  double gamma_res() const { return gamma_res_; }
  const DynamicRange& range() const { return range_; }

  // Bounds of both responses over the closed dynamic range.
  double q_min() const { return q_min_; }
  double q_max() const { return q_max_; }

  double q_plus(double w) const;
  double q_minus(double w) const;
  double q(double w, bool positive) const { return positive ? q_plus(w) : q_minus(w); }

  ResponseComponents decompose(double w) const;

  /// State where q+ == q-. Throws NoSymmetricPoint for tabulated curves whose
  /// asymmetric part never changes sign.
  double symmetric_point() const;

  /// R(w) = G(w) / F(w).
  double asymmetry_ratio(double w) const;
  /// dR/dw, analytic for built-in families.
  double asymmetry_ratio_slope(double w) const;

  /// Accumulated asymmetry R_c(w) = integral of G/F from the symmetric point to w.
  double penalty(double w) const;

  /// Saturation q+(w) * q-(w); vanishes at the range edges of built-in families.
  double saturation(double w) const { return q_plus(w) * q_minus(w); }

  /// Copy with tau (and gamma_res, where the family has one) scaled. Tabulated
  /// curves are stretched along w by tau_factor.
  ResponseModel scaled(double tau_factor, double gamma_factor) const;

 private:
  ResponseModel() = default;

  void finalize_bounds();
  double dq_plus(double w) const;
  double dq_minus(double w) const;

  ResponseKind kind_ = ResponseKind::GenericLinear;
  double tau_ = 1.0;
  double c_lin_ = 0.0;
  double gamma_res_ = 1.0;
  DynamicRange range_;
  double q_min_ = 0.0;
  double q_max_ = 0.0;
  std::optional<double> symmetric_point_;

  struct Table {
    std::vector<double> w;
    std::shared_ptr<const MonotoneCubic> q_plus;
    std::shared_ptr<const MonotoneCubic> q_minus;
  };
  std::shared_ptr<const Table> table_;
};

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson
/// slopes). Continuously differentiable; never overshoots the data.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;
  double derivative(double x) const;

  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  std::size_t segment(double x) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> slope_;
};

}  // namespace aimc
