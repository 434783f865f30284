#include "aimc/problems.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace aimc;

TEST(LeastSquares, GradientBasics) {
  auto p = make_least_squares(50, 100, 1.0, 0.5, 11);
  EXPECT_EQ(p.dim(), 50);
  EXPECT_EQ(p.out_dim(), 100);
  EXPECT_LE(p.full_gradient(p.w_star()).norm(), 1e-12);
  EXPECT_LE(p.loss(p.w_star()), 1e-24);

  LeastSquares one(Matrix::Constant(1, 1, 2.0), Vector::Constant(1, 1.0));
  EXPECT_DOUBLE_EQ(one.b()(0), 2.0);
  EXPECT_DOUBLE_EQ(one.full_gradient(Matrix::Zero(1, 1))(0, 0), -4.0);
}

TEST(LeastSquares, SeededInstance) {
  const auto a = make_least_squares(20, 30, 1.0, 0.5, 5);
  const auto b = make_least_squares(20, 30, 1.0, 0.5, 5);
  const auto c = make_least_squares(20, 30, 1.0, 0.5, 6);
  EXPECT_EQ(a.a(), b.a());
  EXPECT_EQ(a.w_star(), b.w_star());
  EXPECT_NE(a.a(), c.a());
}

TEST(LeastSquares, RowLayoutKeepsShape) {
  const auto p = make_least_squares(5, 8, 1.0, 0.5, 1);
  Matrix row = random_matrix(1, 5, 106), col = row.transpose();
  EXPECT_EQ(p.full_gradient(row).rows(), 1);
  EXPECT_LE((p.full_gradient(row).transpose() - p.full_gradient(col)).norm(), 1e-14);
  EXPECT_DOUBLE_EQ(p.loss(row), p.loss(col));
  EXPECT_AIMC_ERROR(p.full_gradient(Matrix::Zero(2, 5)), ShapeMismatch);
}

TEST(LeastSquares, SubsampleIsUnbiased) {
  const auto p = make_least_squares(6, 9, 1.0, 0.5, 2);
  const Matrix w = random_matrix(6, 1, 107);
  const Matrix full = p.full_gradient(w);

  Matrix mean = Matrix::Zero(6, 1);
  for (Eigen::Index r = 0; r < 9; ++r) mean += p.gradient_on_rows(w, {r});
  mean /= 9.0;
  EXPECT_LE((mean - full).cwiseAbs().maxCoeff(), 1e-12);

  // all unordered pairs
  mean.setZero();
  int n = 0;
  for (Eigen::Index r = 0; r < 9; ++r)
    for (Eigen::Index q = r + 1; q < 9; ++q, ++n) mean += p.gradient_on_rows(w, {r, q});
  mean /= n;
  EXPECT_LE((mean - full).cwiseAbs().maxCoeff(), 1e-12);

  EXPECT_AIMC_ERROR(p.gradient_on_rows(w, {}), EmptyBatch);
}

TEST(LeastSquares, NoiseModes) {
  auto p = make_least_squares(4, 6, 1.0, 0.5, 3);
  Rng rng(1);
  const Matrix w = random_matrix(4, 1, 108);
  EXPECT_EQ(p.stochastic_gradient(w, rng), p.full_gradient(w));

  p.set_noise({NoiseMode::Additive, 0.5, 1});
  Matrix mean = Matrix::Zero(4, 1);
  const int n = 40000;
  for (int i = 0; i < n; ++i) mean += p.stochastic_gradient(w, rng);
  mean /= n;
  EXPECT_LE((mean - p.full_gradient(w)).cwiseAbs().maxCoeff(), 5 * 0.5 / std::sqrt(n));

  p.set_noise({NoiseMode::Subsample, 0.0, 6});  // full batch without replacement
  EXPECT_LE((p.stochastic_gradient(w, rng) - p.full_gradient(w)).norm(), 1e-12);
  EXPECT_AIMC_ERROR(p.set_noise({NoiseMode::Subsample, 0.0, 7}), InvalidArgument);
}

TEST(LeastSquares, DigitalSgdReachesOptimum) {
  const auto p = make_least_squares(50, 100, 1.0, 0.5, 1234);
  Matrix w = Matrix::Zero(50, 1);
  int k = 0;
  for (; k < 100000 && (w - p.w_star()).norm() >= 1e-6; ++k) w -= 1e-3 * p.full_gradient(w);
  EXPECT_LT((w - p.w_star()).norm(), 1e-6) << k;
}

TEST(LeastSquares, SmoothnessBound) {
  const auto p = make_least_squares(50, 100, 1.0, 0.5, 7);
  const Matrix h = p.a().transpose() * p.a();
  Vector v = Vector::Ones(50);
  double lambda = 0.0;
  for (int i = 0; i < 500; ++i) {
    Vector next = h * v;
    lambda = next.norm() / v.norm();
    v = next.normalized();
  }
  Rng rng(3);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    Matrix x(50, 1), y(50, 1);
    for (int i = 0; i < 50; ++i) {
      x(i) = n(rng);
      y(i) = n(rng);
    }
    worst = std::max(worst, (p.full_gradient(x) - p.full_gradient(y)).norm() / (x - y).norm());
  }
  EXPECT_LE(worst, lambda + 1e-6);
  const auto q = p.quadratic_model();
  EXPECT_LE((q.hessian - h).norm(), 1e-9);
}

TEST(DiagonalQuadratic, Basics) {
  DiagonalQuadratic q(Vector::Constant(2, 2.0), Vector::Constant(2, 1.0), 0.0);
  Rng rng(1);
  const Matrix w = Matrix::Zero(2, 1);
  EXPECT_DOUBLE_EQ(q.loss(w), 2.0);
  EXPECT_DOUBLE_EQ(q.full_gradient(w)(0, 0), -2.0);
  EXPECT_EQ(q.stochastic_gradient(w, rng), q.full_gradient(w));
  EXPECT_EQ(q.quadratic_model().minimizer, Vector::Constant(2, 1.0));
  EXPECT_AIMC_ERROR(DiagonalQuadratic(Vector::Constant(1, -1.0), Vector::Zero(1), 0.0), InvalidArgument);
}

namespace {

MnistDataset tiny_dataset() {
  MnistDataset d;
  d.images = Matrix::Zero(784, 2);
  d.images(0, 0) = 1.0;
  d.images(400, 1) = 128.0 / 255.0;
  d.images(783, 1) = 1.0;
  d.labels = {3, 9};
  return d;
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream(path, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

}  // namespace

TEST(Mnist, IdxRoundTrip) {
  const std::string dir = ::testing::TempDir();
  const auto d = tiny_dataset();
  write_mnist_idx(d, dir + "img", dir + "lab");
  const auto r = load_mnist_idx(dir + "img", dir + "lab");
  EXPECT_EQ(r.size(), 2);
  EXPECT_EQ(r.rows, 28);
  EXPECT_EQ(r.labels, d.labels);
  EXPECT_EQ(r.images, d.images);
  EXPECT_EQ(load_mnist_idx(dir + "img", dir + "lab", 1).size(), 1);
}

TEST(Mnist, IdxErrors) {
  const std::string dir = ::testing::TempDir();
  write_mnist_idx(tiny_dataset(), dir + "img", dir + "lab");
  std::string lab = read_bytes(dir + "lab"), img = read_bytes(dir + "img");

  std::string bad = lab;
  bad[3] = 0x02;
  write_bytes(dir + "lab_bad", bad);
  EXPECT_AIMC_ERROR(load_mnist_idx(dir + "img", dir + "lab_bad"), BadMagic);

  std::string count = lab;
  count[7] = 0x03;
  write_bytes(dir + "lab_count", count);
  EXPECT_AIMC_ERROR(load_mnist_idx(dir + "img", dir + "lab_count"), CountMismatch);

  write_bytes(dir + "img_short", img.substr(0, img.size() - 10));
  EXPECT_AIMC_ERROR(load_mnist_idx(dir + "img_short", dir + "lab"), TruncatedFile);
  write_bytes(dir + "img_head", img.substr(0, 6));
  EXPECT_AIMC_ERROR(load_mnist_idx(dir + "img_head", dir + "lab"), TruncatedFile);
  EXPECT_AIMC_ERROR(load_mnist_idx(dir + "nothing", dir + "lab"), IoError);
}

TEST(Mnist, BundledSubset) {
  const std::string dir = std::string(AIMC_SOURCE_DIR) + "/data/mnist/";
  const auto test = load_mnist_idx(dir + "t10k-images-idx3-ubyte", dir + "t10k-labels-idx1-ubyte");
  EXPECT_EQ(test.size(), 2000);
  EXPECT_EQ(test.rows, 28);
  EXPECT_EQ(test.cols, 28);
  EXPECT_GE(test.images.minCoeff(), 0.0);
  EXPECT_LE(test.images.maxCoeff(), 1.0);
}

TEST(Fcn, ZeroNetworkIsUniform) {
  FcnClassifier net({784, 16, 10});
  const auto params = net.zero_parameters();
  Matrix x = random_matrix(784, 3, 109).cwiseAbs();
  EXPECT_NEAR(net.loss(params, x, {0, 5, 9}), std::log(10.0), 1e-12);
}

TEST(Fcn, FiniteDifferences) {
  FcnClassifier net({12, 7, 5, 4});
  Rng rng(21);
  auto params = net.random_parameters(rng, 0.8);
  Matrix x = random_matrix(12, 5, 110);
  const std::vector<int> y{0, 3, 1, 2, 3};
  const auto ev = net.forward_backward(params, x, y);
  EXPECT_NEAR(ev.loss, net.loss(params, x, y), 1e-14);

  const double h = 1e-5;
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t l = std::uniform_int_distribution<std::size_t>(0, params.size() - 1)(rng);
    const Eigen::Index i = std::uniform_int_distribution<Eigen::Index>(0, params[l].size() - 1)(rng);
    const double keep = params[l].data()[i];
    params[l].data()[i] = keep + h;
    const double up = net.loss(params, x, y);
    params[l].data()[i] = keep - h;
    const double down = net.loss(params, x, y);
    params[l].data()[i] = keep;
    const double fd = (up - down) / (2 * h), an = ev.gradients[l].data()[i];
    worst = std::max(worst, std::abs(an - fd) / (std::abs(an) + 1e-8));
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(Fcn, DuplicatedSample) {
  FcnClassifier net({10, 6, 3});
  Rng rng(22);
  const auto params = net.random_parameters(rng);
  Matrix one = random_matrix(10, 1, 111), two(10, 2);
  two << one, one;
  const auto a = net.forward_backward(params, one, {2});
  const auto b = net.forward_backward(params, two, {2, 2});
  EXPECT_NEAR(a.loss, b.loss, 1e-15);
  for (std::size_t l = 0; l < a.gradients.size(); ++l)
    EXPECT_LE((a.gradients[l] - b.gradients[l]).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Fcn, ShapesAndAccuracy) {
  FcnClassifier net({784, 8, 10});
  Rng rng(23);
  auto params = net.random_parameters(rng);
  EXPECT_EQ(params[0].rows(), 8);
  EXPECT_EQ(params[0].cols(), 785);
  EXPECT_LE(params[0].cwiseAbs().maxCoeff(), 0.3);
  EXPECT_AIMC_ERROR(net.loss(params, Matrix::Zero(783, 1), {0}), ShapeMismatch);
  EXPECT_AIMC_ERROR(net.loss(params, Matrix::Zero(784, 0), {}), EmptyBatch);

  // bias-only network that always says 3
  params = net.zero_parameters();
  params[1](3, 8) = 5.0;
  const auto d = tiny_dataset();
  EXPECT_DOUBLE_EQ(net.accuracy(params, d), 0.5);
}
