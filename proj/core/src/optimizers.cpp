#include "aimc/optimizers.hpp"

#include <algorithm>
#include <cmath>

namespace aimc {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + " shape does not match the weights");
  }
}

}  // namespace

void SgdConfig::validate() const {
  if (!(alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be positive");
  if (!(alpha_decay >= 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha_decay must be >= 0");
}

const char* to_string(ResidualVariant variant) {
  switch (variant) {
    case ResidualVariant::RL: return "rl";
    case ResidualVariant::RLv2: return "rlv2";
    case ResidualVariant::TTv2: return "ttv2";
  }
  return "unknown";
}

void ResidualConfig::validate() const {
  if (!(alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "alpha must be positive");
  if (!(beta > 0.0)) throw Error(ErrorKind::InvalidArgument, "beta must be positive");
  if (!(gamma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "gamma must be >= 0");
  if (transfer_columns < 1) throw Error(ErrorKind::InvalidArgument, "transfer_columns must be >= 1");
  if (transfer_threshold && !(*transfer_threshold > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "transfer_threshold must be positive");
  }
  if (!(buffer_clip > 0.0)) throw Error(ErrorKind::InvalidArgument, "buffer_clip must be positive");
}

// ---------------------------------------------------------------------------

DigitalSgd::DigitalSgd(Matrix initial, SgdConfig cfg) : weights_(std::move(initial)), cfg_(cfg) {
  cfg_.validate();
}

void DigitalSgd::apply_gradient(const Matrix& grad, Rng&) {
  require_same_shape(grad, weights_, "gradient");
  weights_ -= cfg_.rate(iteration_) * grad;
  ++iteration_;
}

// ---------------------------------------------------------------------------

AnalogSgd::AnalogSgd(AnalogArray array, SgdConfig cfg) : array_(std::move(array)), cfg_(cfg) {
  cfg_.validate();
}

const Matrix& AnalogSgd::prepare(Rng&) {
  eval_ = array_.logical();
  return eval_;
}

void AnalogSgd::apply_gradient(const Matrix& grad, Rng& rng) {
  require_same_shape(grad, array_.weights(), "gradient");
  array_.apply_update(grad, cfg_.rate(iteration_), rng);
  ++iteration_;
}

// ---------------------------------------------------------------------------

ResidualLearning::ResidualLearning(AnalogArray main, AnalogArray residual, ResidualConfig cfg)
    : main_(std::move(main)), residual_(std::move(residual)), cfg_(cfg) {
  cfg_.validate();
  if (main_.rows() != residual_.rows() || main_.cols() != residual_.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "residual array must match the main array");
  }
  if (cfg_.zero_shift_residual) residual_.reset_to_symmetric_point();
  if (cfg_.variant != ResidualVariant::RL) buffer_ = Matrix::Zero(main_.rows(), main_.cols());
}

double ResidualLearning::transfer_threshold() const {
  return cfg_.transfer_threshold.value_or(main_.pulse_config().delta_w_min);
}

const Matrix& ResidualLearning::buffer() const {
  if (!buffer_) throw Error(ErrorKind::MissingBuffer, "plain residual learning keeps no digital buffer");
  return *buffer_;
}

void ResidualLearning::set_buffer(const Matrix& h) {
  if (!buffer_) throw Error(ErrorKind::MissingBuffer, "plain residual learning keeps no digital buffer");
  require_same_shape(h, *buffer_, "buffer");
  *buffer_ = h;
}

Matrix ResidualLearning::weights() const {
  if (cfg_.variant == ResidualVariant::TTv2 || cfg_.gamma == 0.0) return main_.logical();
  return main_.logical() + cfg_.gamma * residual_.logical();
}

const Matrix& ResidualLearning::prepare(Rng& rng) {
  eval_ = main_.logical();
  if (cfg_.variant != ResidualVariant::TTv2 && cfg_.gamma != 0.0) {
    eval_ += cfg_.gamma * (cfg_.noisy_mixing_read ? residual_.read(rng) : residual_.logical());
  }
  return eval_;
}

void ResidualLearning::apply_gradient(const Matrix& grad, Rng& rng) {
  require_same_shape(grad, main_.weights(), "gradient");
  residual_.apply_update(grad, cfg_.alpha, rng);
  const Matrix p_read = residual_.read(rng);
  if (buffer_) {
    buffered_transfer(p_read, rng);
  } else {
    transfer(p_read, rng);
  }
  next_column_ = (next_column_ + cfg_.transfer_columns) % main_.cols();
  ++iteration_;
}

void ResidualLearning::transfer(const Matrix& p_read, Rng& rng) {
  const Eigen::Index cols = main_.cols();
  const int count = std::min<Eigen::Index>(cfg_.transfer_columns, cols);
  for (int c = 0; c < count; ++c) {
    const Eigen::Index col = (next_column_ + c) % cols;
    main_.apply_column_increment(col, cfg_.beta * p_read.col(col), rng);
  }
}

void ResidualLearning::buffered_transfer(const Matrix& p_read, Rng& rng) {
  Matrix& h = *buffer_;
  const double threshold = transfer_threshold();
  const double quantum = main_.pulse_config().delta_w_min;
  const bool decay = cfg_.variant == ResidualVariant::RLv2;
  const Eigen::Index cols = main_.cols();
  const int count = std::min<Eigen::Index>(cfg_.transfer_columns, cols);
  for (int c = 0; c < count; ++c) {
    const Eigen::Index col = (next_column_ + c) % cols;
    for (Eigen::Index i = 0; i < main_.rows(); ++i) {
      double half = decay ? (1.0 - cfg_.beta) * h(i, col) + cfg_.beta * p_read(i, col)
                          : h(i, col) + cfg_.beta * p_read(i, col);
      if (!decay) half = std::clamp(half, -cfg_.buffer_clip, cfg_.buffer_clip);
      if (std::abs(half) >= threshold) {
        const bool up = half > 0.0;
        main_.fire_pulse(i, col, up ? PulseSign::Positive : PulseSign::Negative, rng);
        half += up ? -quantum : quantum;
        buffer_decrements_ += up ? 1 : -1;
      }
      h(i, col) = half;
    }
  }
}

}  // namespace aimc
