#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmsurv {

// Error taxonomy; the CLI maps these onto exit codes (validation 1,
// numerical 2, I/O 3).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : ValidationError {
  using ValidationError::ValidationError;
};
struct DomainError : ValidationError {
  using ValidationError::ValidationError;
};
struct StateError : ValidationError {
  using ValidationError::ValidationError;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CalibrationError : NumericError {
  using NumericError::NumericError;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
  std::span<const double> row_span(int i) const { return {row(i), static_cast<std::size_t>(cols)}; }
};

/// FNV-1a 64-bit digest, used for file/content fingerprints in manifests.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::uint64_t digest_file(const std::string& path);
std::string digest_hex(std::uint64_t d);

/// Formats a double with enough digits to round-trip bit-exactly.
std::string format_exact(double v);
/// Fixed 6-decimal formatting for metric CSVs.
std::string format_metric(double v);

}  // namespace mmsurv
