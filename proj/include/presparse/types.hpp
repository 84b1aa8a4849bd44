#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace presparse {

using Index = Eigen::Index;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Batches are one row per sample, one column per neuron; column-major storage
// keeps each neuron's values contiguous across the batch.
using MatX = Mat<double>;
using VecX = Eigen::VectorXd;

// Adjacency and path-count matrices hold exact integers.
using CountMat = Mat<std::int64_t>;

enum class ErrorCode {
  NonIntegralFanIn,
  FanOutTooLarge,
  EmptyNetwork,
  BadSpan,
  InfeasibleLocality,
  NonIntegralWindow,
  DimensionMismatch,
  LengthMismatch,
  BadLabel,
  EmptyDataset,
  FrameOverflow,
  BadMagic,
  TruncatedFile,
  CountMismatch,
  InfeasibleOverallDensity,
  BadFormat,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonIntegralFanIn: return "NonIntegralFanIn";
    case ErrorCode::FanOutTooLarge: return "FanOutTooLarge";
    case ErrorCode::EmptyNetwork: return "EmptyNetwork";
    case ErrorCode::BadSpan: return "BadSpan";
    case ErrorCode::InfeasibleLocality: return "InfeasibleLocality";
    case ErrorCode::NonIntegralWindow: return "NonIntegralWindow";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::FrameOverflow: return "FrameOverflow";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::InfeasibleOverallDensity: return "InfeasibleOverallDensity";
    case ErrorCode::BadFormat: return "BadFormat";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace presparse
