#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ngcn {

/// Invalid shapes, flags or hyperparameters supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data. Carries the offending file and
/// 1-based record number when known (0 = whole file).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
  DataError(std::string file, std::size_t line, const std::string& what)
      : std::runtime_error(file + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_ = 0;
};

/// A training run failed (e.g. the loss diverged).
class RunError : public std::runtime_error {
 public:
  RunError(int step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ": " + what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

}  // namespace ngcn
