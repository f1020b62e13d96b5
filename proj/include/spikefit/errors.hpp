#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spikefit {

// Bad caller input: wrong sizes, invalid flags, non-finite data.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative solver failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

// A quantity left its mathematical domain (log of zero, empty mixture row).
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed file contents. `offset` is the byte position where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace spikefit
