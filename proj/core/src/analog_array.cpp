#include "aimc/analog_array.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace aimc {

namespace {

constexpr char kBinaryMagic[8] = {'A', 'I', 'M', 'C', 'A', 'R', 'R', '1'};

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << what << " is " << m.rows() << "x" << m.cols() << ", array is " << rows << "x" << cols;
    throw Error(ErrorKind::ShapeMismatch, msg.str());
  }
}

}  // namespace

const char* to_string(UpdateBackend backend) {
  return backend == UpdateBackend::ClosedForm ? "closed_form" : "pulse_train";
}

std::vector<ResponseModel> with_element_variation(const ResponseModel& base, double spread, Eigen::Index rows,
                                                  Eigen::Index cols, Rng& rng) {
  if (!(spread >= 0.0 && spread < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "element variation spread must be in [0, 1)");
  }
  const auto n = static_cast<std::size_t>(rows * cols);
  std::vector<ResponseModel> out;
  out.reserve(n);
  const double lo = std::exp(-3.0 * spread), hi = std::exp(3.0 * spread);
  for (std::size_t k = 0; k < n; ++k) {
    if (spread == 0.0) {
      out.push_back(base);
      continue;
    }
    const double tau_factor = std::clamp(std::exp(spread * standard_normal(rng)), lo, hi);
    const double gamma_factor = std::clamp(std::exp(spread * standard_normal(rng)), lo, hi);
    out.push_back(base.scaled(tau_factor, gamma_factor));
  }
  return out;
}

AnalogArray::AnalogArray(Eigen::Index rows, Eigen::Index cols, ResponseModel response, PulseConfig pulse,
                         UpdateBackend backend, double read_noise_sigma)
    : AnalogArray(rows, cols, std::vector<ResponseModel>{std::move(response)}, pulse, backend,
                  read_noise_sigma) {}

AnalogArray::AnalogArray(Eigen::Index rows, Eigen::Index cols, std::vector<ResponseModel> responses,
                         PulseConfig pulse, UpdateBackend backend, double read_noise_sigma)
    : weights_(Matrix::Zero(rows, cols)),
      responses_(std::move(responses)),
      pulse_(pulse),
      backend_(backend),
      read_noise_sigma_(read_noise_sigma) {
  if (rows <= 0 || cols <= 0) throw Error(ErrorKind::InvalidArgument, "array shape must be positive");
  if (responses_.size() != 1 && responses_.size() != static_cast<std::size_t>(rows * cols)) {
    throw Error(ErrorKind::ShapeMismatch, "need one shared response or one per element");
  }
  if (!(read_noise_sigma_ >= 0.0)) throw Error(ErrorKind::InvalidArgument, "read noise must be >= 0");
  pulse_.validate();
  // Zero may lie outside a tabulated range.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) weights_(i, j) = response(i, j).range().clamp(0.0);
}

void AnalogArray::set_weights(const Matrix& w) {
  require_shape(w, rows(), cols(), "weights");
  for (Eigen::Index i = 0; i < rows(); ++i)
    for (Eigen::Index j = 0; j < cols(); ++j) weights_(i, j) = response(i, j).range().clamp(w(i, j));
}

double AnalogArray::update_element(Eigen::Index i, Eigen::Index j, double delta, Rng& rng) const {
  const ResponseModel& model = response(i, j);
  const double w = weights_(i, j);
  if (backend_ == UpdateBackend::ClosedForm) return compact_form_update(model, w, delta);
  return pulse_train_update(model, pulse_, w, delta, rng);
}

void AnalogArray::apply_update(const Matrix& desired, double lr, Rng& rng) {
  require_shape(desired, rows(), cols(), "update");
  if (!(lr > 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rate must be positive");
  for (Eigen::Index j = 0; j < cols(); ++j)
    for (Eigen::Index i = 0; i < rows(); ++i) {
      const double delta = -lr * desired(i, j);
      if (delta != 0.0) weights_(i, j) = update_element(i, j, delta, rng);
    }
}

void AnalogArray::apply_increment(const Matrix& delta, Rng& rng) {
  require_shape(delta, rows(), cols(), "increment");
  for (Eigen::Index j = 0; j < cols(); ++j)
    for (Eigen::Index i = 0; i < rows(); ++i)
      if (delta(i, j) != 0.0) weights_(i, j) = update_element(i, j, delta(i, j), rng);
}

void AnalogArray::apply_column_increment(Eigen::Index col, const Vector& delta, Rng& rng) {
  if (col < 0 || col >= cols() || delta.size() != rows()) {
    throw Error(ErrorKind::ShapeMismatch, "column increment does not fit the array");
  }
  for (Eigen::Index i = 0; i < rows(); ++i)
    if (delta(i) != 0.0) weights_(i, col) = update_element(i, col, delta(i), rng);
}

void AnalogArray::fire_pulse(Eigen::Index i, Eigen::Index j, PulseSign sign, Rng& rng) {
  const ResponseModel& model = response(i, j);
  if (backend_ == UpdateBackend::ClosedForm) {
    const double step = sign == PulseSign::Positive ? pulse_.delta_w_min : -pulse_.delta_w_min;
    weights_(i, j) = closed_form_update(model, weights_(i, j), step);
  } else {
    weights_(i, j) = pulse_update_once(model, pulse_, weights_(i, j), sign, rng);
  }
  fired_pulses_ += sign == PulseSign::Positive ? 1 : -1;
}

Matrix AnalogArray::logical() const {
  return reference_ ? Matrix(weights_ - *reference_) : weights_;
}

Matrix AnalogArray::read(Rng& rng) const {
  Matrix out = logical();
  if (read_noise_sigma_ > 0.0) {
    for (Eigen::Index j = 0; j < cols(); ++j)
      for (Eigen::Index i = 0; i < rows(); ++i) out(i, j) += read_noise_sigma_ * standard_normal(rng);
  }
  return out;
}

void AnalogArray::zero_shift() { reference_ = weights_; }

void AnalogArray::reset_to_symmetric_point() {
  for (Eigen::Index i = 0; i < rows(); ++i)
    for (Eigen::Index j = 0; j < cols(); ++j) weights_(i, j) = response(i, j).symmetric_point();
  zero_shift();
}

void AnalogArray::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out.precision(17);
  for (Eigen::Index i = 0; i < rows(); ++i) {
    for (Eigen::Index j = 0; j < cols(); ++j) {
      if (j) out << ',';
      out << weights_(i, j);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

void AnalogArray::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  Matrix w(rows(), cols());
  std::string line;
  Eigen::Index i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (i >= rows()) throw Error(ErrorKind::ShapeMismatch, path + " has more rows than the array");
    std::stringstream ss(line);
    std::string cell;
    Eigen::Index j = 0;
    while (std::getline(ss, cell, ',')) {
      if (j >= cols()) throw Error(ErrorKind::ShapeMismatch, path + " has more columns than the array");
      w(i, j++) = std::stod(cell);
    }
    if (j != cols()) throw Error(ErrorKind::ShapeMismatch, path + " has a short row");
    ++i;
  }
  if (i != rows()) throw Error(ErrorKind::ShapeMismatch, path + " has fewer rows than the array");
  set_weights(w);
}

void AnalogArray::save_binary(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(rows()), static_cast<std::uint64_t>(cols())};
  out.write(kBinaryMagic, sizeof kBinaryMagic);
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  for (Eigen::Index i = 0; i < rows(); ++i)
    for (Eigen::Index j = 0; j < cols(); ++j) {
      const double v = weights_(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + path);
}

void AnalogArray::load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  char magic[8];
  std::uint64_t dims[2];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!in) throw Error(ErrorKind::TruncatedFile, path);
  if (std::memcmp(magic, kBinaryMagic, sizeof magic) != 0) throw Error(ErrorKind::BadMagic, path);
  if (dims[0] != static_cast<std::uint64_t>(rows()) || dims[1] != static_cast<std::uint64_t>(cols())) {
    throw Error(ErrorKind::ShapeMismatch, path + " holds a different shape");
  }
  Matrix w(rows(), cols());
  for (Eigen::Index i = 0; i < rows(); ++i)
    for (Eigen::Index j = 0; j < cols(); ++j) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      w(i, j) = v;
    }
  if (!in) throw Error(ErrorKind::TruncatedFile, path);
  set_weights(w);
}

}  // namespace aimc
