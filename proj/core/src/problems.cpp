#include "aimc/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace aimc {

const char* to_string(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::None: return "none";
    case NoiseMode::Subsample: return "subsample";
    case NoiseMode::Additive: return "additive";
  }
  return "unknown";
}

namespace {

// Vectors may be stored as D x 1 or as a 1 x D tile row.
void require_vector(const Matrix& w, Eigen::Index dim) {
  if (w.size() != dim || (w.cols() != 1 && w.rows() != 1)) {
    throw Error(ErrorKind::ShapeMismatch, "expected a " + std::to_string(dim) + "-element weight vector");
  }
}

Eigen::Map<const Vector> as_vector(const Matrix& w) { return {w.data(), w.size()}; }

Matrix like(const Matrix& w, const Vector& v) {
  return w.cols() == 1 ? Matrix(v) : Matrix(v.transpose());
}

void add_gaussian(Matrix& m, double sigma, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) += sigma * standard_normal(rng);
}

}  // namespace

// ---------------------------------------------------------------------------
// LeastSquares

LeastSquares::LeastSquares(Matrix a, Vector w_star, GradientNoise noise)
    : a_(std::move(a)), w_star_(std::move(w_star)) {
  if (a_.cols() != w_star_.size()) throw Error(ErrorKind::ShapeMismatch, "A and W* disagree");
  b_ = a_ * w_star_;
  set_noise(noise);
}

void LeastSquares::set_noise(GradientNoise noise) {
  if (noise.mode == NoiseMode::Subsample && (noise.batch_size < 1 || noise.batch_size > out_dim())) {
    throw Error(ErrorKind::InvalidArgument, "subsample batch size must be in [1, D_out]");
  }
  if (!(noise.sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise sigma must be >= 0");
  noise_ = noise;
}

double LeastSquares::loss(const Matrix& w) const {
  require_vector(w, dim());
  return 0.5 * (a_ * as_vector(w) - b_).squaredNorm();
}

Matrix LeastSquares::full_gradient(const Matrix& w) const {
  require_vector(w, dim());
  return like(w, a_.transpose() * (a_ * as_vector(w) - b_));
}

Matrix LeastSquares::gradient_on_rows(const Matrix& w, const std::vector<Eigen::Index>& rows) const {
  require_vector(w, dim());
  if (rows.empty()) throw Error(ErrorKind::EmptyBatch, "least-squares batch has no rows");
  Vector g = Vector::Zero(dim());
  for (Eigen::Index r : rows) {
    const double residual = a_.row(r).dot(as_vector(w)) - b_(r);
    g += residual * a_.row(r).transpose();
  }
  g *= static_cast<double>(out_dim()) / static_cast<double>(rows.size());
  return like(w, g);
}

Matrix LeastSquares::stochastic_gradient(const Matrix& w, Rng& rng) const {
  switch (noise_.mode) {
    case NoiseMode::None: return full_gradient(w);
    case NoiseMode::Additive: {
      Matrix g = full_gradient(w);
      if (noise_.sigma > 0.0) add_gaussian(g, noise_.sigma, rng);
      return g;
    }
    case NoiseMode::Subsample: {
      // Partial Fisher-Yates: uniform subset without replacement.
      std::vector<Eigen::Index> idx(static_cast<std::size_t>(out_dim()));
      std::iota(idx.begin(), idx.end(), Eigen::Index{0});
      const auto k = static_cast<std::size_t>(noise_.batch_size);
      for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
      }
      idx.resize(k);
      return gradient_on_rows(w, idx);
    }
  }
  return full_gradient(w);
}

QuadraticModel LeastSquares::quadratic_model() const { return {a_.transpose() * a_, w_star_}; }

LeastSquares make_least_squares(Eigen::Index dim, Eigen::Index out_dim, double sigma_a, double sigma_w_star,
                                std::uint64_t seed, GradientNoise noise) {
  if (dim < 1 || out_dim < 1) throw Error(ErrorKind::InvalidArgument, "problem dimensions must be positive");
  Rng rng(seed);
  Matrix a(out_dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j)
    for (Eigen::Index i = 0; i < out_dim; ++i) a(i, j) = sigma_a * standard_normal(rng);
  Vector w_star(dim);
  for (Eigen::Index i = 0; i < dim; ++i) w_star(i) = sigma_w_star * standard_normal(rng);
  return LeastSquares(std::move(a), std::move(w_star), noise);
}

// ---------------------------------------------------------------------------
// DiagonalQuadratic

DiagonalQuadratic::DiagonalQuadratic(Vector curvature, Vector center, double sigma)
    : curvature_(std::move(curvature)), center_(std::move(center)), sigma_(sigma) {
  if (curvature_.size() != center_.size()) throw Error(ErrorKind::ShapeMismatch, "curvature and center differ");
  if ((curvature_.array() <= 0.0).any()) throw Error(ErrorKind::InvalidArgument, "curvature must be positive");
  if (!(sigma_ >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise sigma must be >= 0");
}

double DiagonalQuadratic::loss(const Matrix& w) const {
  require_vector(w, center_.size());
  return 0.5 * (curvature_.array() * (as_vector(w) - center_).array().square()).sum();
}

Matrix DiagonalQuadratic::full_gradient(const Matrix& w) const {
  require_vector(w, center_.size());
  return like(w, (curvature_.array() * (as_vector(w) - center_).array()).matrix());
}

Matrix DiagonalQuadratic::stochastic_gradient(const Matrix& w, Rng& rng) const {
  Matrix g = full_gradient(w);
  if (sigma_ > 0.0) add_gaussian(g, sigma_, rng);
  return g;
}

QuadraticModel DiagonalQuadratic::quadratic_model() const {
  return {Matrix(curvature_.asDiagonal()), center_};
}

// ---------------------------------------------------------------------------
// MNIST IDX

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw Error(ErrorKind::TruncatedFile, path + ": header ends early");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

MnistDataset load_mnist_idx(const std::string& images_path, const std::string& labels_path, Eigen::Index limit) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw Error(ErrorKind::IoError, "cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw Error(ErrorKind::IoError, "cannot open " + labels_path);

  if (read_be32(img, images_path) != 0x00000803) throw Error(ErrorKind::BadMagic, images_path);
  const std::uint32_t n_images = read_be32(img, images_path);
  const std::uint32_t rows = read_be32(img, images_path);
  const std::uint32_t cols = read_be32(img, images_path);
  if (read_be32(lab, labels_path) != 0x00000801) throw Error(ErrorKind::BadMagic, labels_path);
  const std::uint32_t n_labels = read_be32(lab, labels_path);
  if (n_images != n_labels) {
    throw Error(ErrorKind::CountMismatch,
                std::to_string(n_images) + " images vs " + std::to_string(n_labels) + " labels");
  }

  Eigen::Index n = n_images;
  if (limit > 0) n = std::min(n, limit);
  const std::size_t pixels = std::size_t{rows} * cols;

  MnistDataset data;
  data.rows = static_cast<int>(rows);
  data.cols = static_cast<int>(cols);
  data.images.resize(static_cast<Eigen::Index>(pixels), n);
  data.labels.resize(static_cast<std::size_t>(n));

  std::vector<unsigned char> buffer(pixels);
  for (Eigen::Index k = 0; k < n; ++k) {
    img.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(pixels));
    if (!img) throw Error(ErrorKind::TruncatedFile, images_path + ": image " + std::to_string(k));
    for (std::size_t p = 0; p < pixels; ++p) data.images(static_cast<Eigen::Index>(p), k) = buffer[p] / 255.0;
    char label = 0;
    lab.read(&label, 1);
    if (!lab) throw Error(ErrorKind::TruncatedFile, labels_path + ": label " + std::to_string(k));
    const int value = static_cast<unsigned char>(label);
    if (value > 9) throw Error(ErrorKind::InvalidArgument, labels_path + ": label out of range");
    data.labels[static_cast<std::size_t>(k)] = value;
  }
  return data;
}

void write_mnist_idx(const MnistDataset& data, const std::string& images_path, const std::string& labels_path) {
  if (static_cast<Eigen::Index>(data.labels.size()) != data.size()) {
    throw Error(ErrorKind::CountMismatch, "dataset labels and images differ in count");
  }
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw Error(ErrorKind::IoError, "cannot write IDX files");
  write_be32(img, 0x00000803);
  write_be32(img, static_cast<std::uint32_t>(data.size()));
  write_be32(img, static_cast<std::uint32_t>(data.rows));
  write_be32(img, static_cast<std::uint32_t>(data.cols));
  write_be32(lab, 0x00000801);
  write_be32(lab, static_cast<std::uint32_t>(data.size()));
  for (Eigen::Index k = 0; k < data.size(); ++k) {
    for (Eigen::Index p = 0; p < data.images.rows(); ++p) {
      const double v = std::clamp(data.images(p, k), 0.0, 1.0);
      img.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
    lab.put(static_cast<char>(data.labels[static_cast<std::size_t>(k)]));
  }
  if (!img || !lab) throw Error(ErrorKind::IoError, "IDX write failed");
}

// ---------------------------------------------------------------------------
// FcnClassifier

namespace {

Matrix affine(const Matrix& layer, const Matrix& x) {
  const Eigen::Index in = layer.cols() - 1;
  Matrix z = layer.leftCols(in) * x;
  z.colwise() += layer.col(in);
  return z;
}

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

// Column-wise log-softmax.
Matrix log_softmax(const Matrix& z) {
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double m = z.col(j).maxCoeff();
    const double lse = m + std::log((z.col(j).array() - m).exp().sum());
    out.col(j) = z.col(j).array() - lse;
  }
  return out;
}

}  // namespace

FcnClassifier::FcnClassifier(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw Error(ErrorKind::InvalidArgument, "classifier needs at least one layer");
  for (int s : sizes_)
    if (s < 1) throw Error(ErrorKind::InvalidArgument, "layer sizes must be positive");
}

std::vector<Matrix> FcnClassifier::zero_parameters() const {
  std::vector<Matrix> p;
  for (std::size_t l = 0; l < layers(); ++l) p.push_back(Matrix::Zero(sizes_[l + 1], sizes_[l] + 1));
  return p;
}

std::vector<Matrix> FcnClassifier::random_parameters(Rng& rng, double scale) const {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Matrix> p = zero_parameters();
  for (Matrix& m : p)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
  return p;
}

void FcnClassifier::check(const std::vector<Matrix>& params, const Matrix& inputs) const {
  if (params.size() != layers()) throw Error(ErrorKind::ShapeMismatch, "wrong number of layers");
  for (std::size_t l = 0; l < layers(); ++l) {
    if (params[l].rows() != sizes_[l + 1] || params[l].cols() != sizes_[l] + 1) {
      throw Error(ErrorKind::ShapeMismatch, "layer " + std::to_string(l) + " has the wrong shape");
    }
  }
  if (inputs.rows() != sizes_.front()) throw Error(ErrorKind::ShapeMismatch, "input size mismatch");
  if (inputs.cols() == 0) throw Error(ErrorKind::EmptyBatch, "empty batch");
}

Matrix FcnClassifier::logits(const std::vector<Matrix>& params, const Matrix& inputs) const {
  check(params, inputs);
  Matrix a = inputs;
  for (std::size_t l = 0; l + 1 < layers(); ++l) a = sigmoid(affine(params[l], a));
  return affine(params.back(), a);
}

double FcnClassifier::loss(const std::vector<Matrix>& params, const Matrix& inputs,
                           const std::vector<int>& labels) const {
  const Matrix lp = log_softmax(logits(params, inputs));
  if (static_cast<Eigen::Index>(labels.size()) != inputs.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "labels and inputs differ in count");
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < lp.cols(); ++j) total -= lp(labels[static_cast<std::size_t>(j)], j);
  return total / static_cast<double>(lp.cols());
}

FcnClassifier::Evaluation FcnClassifier::forward_backward(const std::vector<Matrix>& params,
                                                          const Matrix& inputs,
                                                          const std::vector<int>& labels) const {
  check(params, inputs);
  const Eigen::Index batch = inputs.cols();
  if (static_cast<Eigen::Index>(labels.size()) != batch) {
    throw Error(ErrorKind::ShapeMismatch, "labels and inputs differ in count");
  }

  std::vector<Matrix> acts;  // acts[l] is the input to layer l
  acts.reserve(layers());
  acts.push_back(inputs);
  for (std::size_t l = 0; l + 1 < layers(); ++l) acts.push_back(sigmoid(affine(params[l], acts.back())));
  const Matrix lp = log_softmax(affine(params.back(), acts.back()));

  Evaluation out;
  Matrix delta = lp.array().exp().matrix();
  for (Eigen::Index j = 0; j < batch; ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    if (y < 0 || y >= lp.rows()) throw Error(ErrorKind::InvalidArgument, "label out of range");
    out.loss -= lp(y, j);
    delta(y, j) -= 1.0;
  }
  out.loss /= static_cast<double>(batch);
  delta /= static_cast<double>(batch);

  out.gradients.resize(layers());
  for (std::size_t l = layers(); l-- > 0;) {
    const Matrix& a = acts[l];
    const Eigen::Index in = params[l].cols() - 1;
    Matrix& g = out.gradients[l];
    g.resize(params[l].rows(), params[l].cols());
    g.leftCols(in) = delta * a.transpose();
    g.col(in) = delta.rowwise().sum();
    if (l > 0) {
      Matrix back = params[l].leftCols(in).transpose() * delta;
      delta = (back.array() * a.array() * (1.0 - a.array())).matrix();
    }
  }
  return out;
}

double FcnClassifier::accuracy(const std::vector<Matrix>& params, const MnistDataset& data) const {
  constexpr Eigen::Index kChunk = 500;
  Eigen::Index correct = 0;
  for (Eigen::Index start = 0; start < data.size(); start += kChunk) {
    const Eigen::Index n = std::min(kChunk, data.size() - start);
    const Matrix z = logits(params, data.images.middleCols(start, n));
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::Index arg = 0;
      z.col(j).maxCoeff(&arg);
      if (arg == data.labels[static_cast<std::size_t>(start + j)]) ++correct;
    }
  }
  return data.size() ? static_cast<double>(correct) / static_cast<double>(data.size()) : 0.0;
}

}  // namespace aimc
