#include "aimc/common.hpp"

namespace aimc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NoSymmetricPoint: return "NoSymmetricPoint";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::MissingResidualArray: return "MissingResidualArray";
    case ErrorKind::MissingBuffer: return "MissingBuffer";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::CountMismatch: return "CountMismatch";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::UnknownPreset: return "UnknownPreset";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace aimc
