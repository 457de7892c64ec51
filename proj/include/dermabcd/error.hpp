#pragma once

#include <stdexcept>
#include <string>

namespace dermabcd {

// Base for failures caused by the image content rather than by bad usage.
// The CLI maps these to exit code 2.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Segmentation produced no usable lesion (empty or near-full mask).
class SegmentationError : public DomainError {
 public:
  using DomainError::DomainError;
};

// A feature could not be measured on this lesion.
class FeatureError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Training or evaluation could not proceed on the given data.
class EvaluationError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Malformed metadata, manifest, feature or config file.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long row = -1)
      : std::runtime_error(row >= 0 ? "row " + std::to_string(row) + ": " + what : what),
        row_(row) {}

  long row() const noexcept { return row_; }

 private:
  long row_;
};

// Filesystem or codec failure. The CLI maps these to exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dermabcd
