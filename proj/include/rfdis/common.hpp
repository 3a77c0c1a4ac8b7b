#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfdis {

enum class ErrorKind {
  Usage,           // malformed invocation
  Parameter,       // out-of-range argument
  InvalidTask,     // task unlearnable (e.g. a single class)
  Structural,      // shape / ordering mismatch between inputs
  Validation,      // file contents fail validation
  Stratification,  // split impossible for the class distribution
  Degenerate,      // degenerate numeric input (zero norms etc.)
  Resource,        // request exceeds a configured cap
  Runtime,         // anything else that fails at run time
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  std::span<const double> row_span(std::size_t i) const { return {row(i), cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// SplitMix64 stream. Every randomized procedure in the library draws from a
/// stream derived with derive_seed, so results do not depend on the thread
/// schedule or on the platform's std::random distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  std::uint64_t next_below(std::uint64_t bound);  // uniform in [0, bound)
  double next_double();                           // uniform in [0, 1)
  double next_gaussian();                         // standard normal

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

namespace seed_stream {
inline constexpr std::uint64_t kTree = 1;
inline constexpr std::uint64_t kView = 2;
inline constexpr std::uint64_t kFinal = 3;
inline constexpr std::uint64_t kRun = 4;
inline constexpr std::uint64_t kSplit = 5;
inline constexpr std::uint64_t kSynth = 6;
inline constexpr std::uint64_t kDataset = 7;
}  // namespace seed_stream

/// Derives an independent stream seed from (master, stream, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

void set_max_threads(int threads);
int max_threads();

/// Runs fn(i) for every i in [0, count), split into contiguous blocks across
/// worker threads. Callers must write to disjoint slots only.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

/// ceil(sqrt(value)); the default mtry rule.
int ceil_sqrt(int value);

std::uint64_t fnv1a(const void* bytes, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace rfdis
