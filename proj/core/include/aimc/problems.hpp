#pragma once

#include "aimc/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace aimc {

/// Second-order description of a strongly convex objective around its minimizer.
struct QuadraticModel {
  Matrix hessian;
  Vector minimizer;
};

/// Objective over a weight matrix (vectors are stored as D x 1) with exact
/// full gradients and unbiased stochastic gradients.
class StochasticObjective {
 public:
  virtual ~StochasticObjective() = default;

  virtual double loss(const Matrix& w) const = 0;
  virtual Matrix full_gradient(const Matrix& w) const = 0;
  virtual Matrix stochastic_gradient(const Matrix& w, Rng& rng) const = 0;
  virtual QuadraticModel quadratic_model() const = 0;
};

enum class NoiseMode { None, Subsample, Additive };

const char* to_string(NoiseMode mode);

struct GradientNoise {
  NoiseMode mode = NoiseMode::None;
  double sigma = 0.0;   // additive mode
  int batch_size = 1;   // subsample mode, rows drawn without replacement
};

/// f(W) = 1/2 ||A W - b||^2 with b = A W*.
class LeastSquares final : public StochasticObjective {
 public:
  LeastSquares(Matrix a, Vector w_star, GradientNoise noise = {});

  const Matrix& a() const { return a_; }
  const Vector& b() const { return b_; }
  const Vector& w_star() const { return w_star_; }
  const GradientNoise& noise() const { return noise_; }
  void set_noise(GradientNoise noise);

  Eigen::Index dim() const { return a_.cols(); }
  Eigen::Index out_dim() const { return a_.rows(); }

  double loss(const Matrix& w) const override;
  Matrix full_gradient(const Matrix& w) const override;
  Matrix stochastic_gradient(const Matrix& w, Rng& rng) const override;
  QuadraticModel quadratic_model() const override;

  /// (D_out / |rows|) * A_rows^T (A_rows W - b_rows). Throws EmptyBatch.
  Matrix gradient_on_rows(const Matrix& w, const std::vector<Eigen::Index>& rows) const;

 private:
  Matrix a_;
  Vector b_;
  Vector w_star_;
  GradientNoise noise_;
};

/// Gaussian A (std sigma_a) and W* (std sigma_w_star) from the given seed.
LeastSquares make_least_squares(Eigen::Index dim = 50, Eigen::Index out_dim = 100, double sigma_a = 1.0,
                                double sigma_w_star = 0.5, std::uint64_t seed = 0, GradientNoise noise = {});

/// f(W) = 1/2 sum_d h_d (W_d - c_d)^2 with additive Gaussian gradient noise.
class DiagonalQuadratic final : public StochasticObjective {
 public:
  DiagonalQuadratic(Vector curvature, Vector center, double sigma);

  const Vector& curvature() const { return curvature_; }
  const Vector& center() const { return center_; }
  double sigma() const { return sigma_; }

  double loss(const Matrix& w) const override;
  Matrix full_gradient(const Matrix& w) const override;
  Matrix stochastic_gradient(const Matrix& w, Rng& rng) const override;
  QuadraticModel quadratic_model() const override;

 private:
  Vector curvature_;
  Vector center_;
  double sigma_;
};

// ---------------------------------------------------------------------------
// MNIST

struct MnistDataset {
  Matrix images;            // 784 x N, one image per column, pixels in [0, 1]
  std::vector<int> labels;  // N labels in [0, 10)
  int rows = 28;
  int cols = 28;

  Eigen::Index size() const { return images.cols(); }
};

/// Reads IDX image (magic 0x00000803) and label (0x00000801) files. `limit`
/// keeps only the first `limit` samples when positive.
MnistDataset load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                            Eigen::Index limit = 0);

/// Writes IDX files; pixels are rounded from [0, 1] back to bytes.
void write_mnist_idx(const MnistDataset& data, const std::string& images_path, const std::string& labels_path);

// ---------------------------------------------------------------------------
// Fully connected classifier

/// Sigmoid MLP with a linear output layer into softmax cross-entropy.
/// Layer l holds a sizes[l+1] x (sizes[l] + 1) matrix whose last column is the bias.
class FcnClassifier {
 public:
  explicit FcnClassifier(std::vector<int> sizes = {784, 256, 128, 10});

  const std::vector<int>& sizes() const { return sizes_; }
  std::size_t layers() const { return sizes_.size() - 1; }

  std::vector<Matrix> zero_parameters() const;
  /// Uniform in [-scale, scale].
  std::vector<Matrix> random_parameters(Rng& rng, double scale = 0.3) const;

  struct Evaluation {
    double loss = 0.0;
    std::vector<Matrix> gradients;
  };

  /// Mean cross-entropy over the batch (columns of `inputs`) and its exact gradient.
  Evaluation forward_backward(const std::vector<Matrix>& params, const Matrix& inputs,
                              const std::vector<int>& labels) const;

  Matrix logits(const std::vector<Matrix>& params, const Matrix& inputs) const;
  double loss(const std::vector<Matrix>& params, const Matrix& inputs, const std::vector<int>& labels) const;
  /// Fraction of correctly classified samples, evaluated in chunks.
  double accuracy(const std::vector<Matrix>& params, const MnistDataset& data) const;

 private:
  void check(const std::vector<Matrix>& params, const Matrix& inputs) const;

  std::vector<int> sizes_;
};

}  // namespace aimc
