#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace eulerlu {

using Index = std::int64_t;

enum class ErrorKind {
  NegativeWeight,
  IndexOutOfRange,
  InvalidSpec,
  ParseError,
  NonFinite,
  SingularPivotBlock,
  NotPsd,
  KernelMismatch,
  DimensionMismatch,
  TooLarge,
  IsolatedVertex,
  InvariantViolation,
  EmptyDistribution,
  AttemptsExhausted,
  NotEulerian,
  BudgetExceeded,
  RcddFailure,
  SparsifierFailure,
  NonConvergentPhases,
  EmptyPool,
  ZeroInteriorPivot,
  Divergence,
  NotConverged,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NegativeWeight: return "NegativeWeight";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::SingularPivotBlock: return "SingularPivotBlock";
    case ErrorKind::NotPsd: return "NotPsd";
    case ErrorKind::KernelMismatch: return "KernelMismatch";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::IsolatedVertex: return "IsolatedVertex";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::EmptyDistribution: return "EmptyDistribution";
    case ErrorKind::AttemptsExhausted: return "AttemptsExhausted";
    case ErrorKind::NotEulerian: return "NotEulerian";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::RcddFailure: return "RcddFailure";
    case ErrorKind::SparsifierFailure: return "SparsifierFailure";
    case ErrorKind::NonConvergentPhases: return "NonConvergentPhases";
    case ErrorKind::EmptyPool: return "EmptyPool";
    case ErrorKind::ZeroInteriorPivot: return "ZeroInteriorPivot";
    case ErrorKind::Divergence: return "Divergence";
    case ErrorKind::NotConverged: return "NotConverged";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// the CLI can map it to an exit code and a machine-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

// Deterministic random source. The standard distributions are
// implementation-defined, so draws are derived from the raw 64-bit engine
// output to keep results identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound). Rejection sampling, so no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  /// Independent stream derived from this one (splitmix64 of a fresh draw).
  Rng split() {
    std::uint64_t z = engine_() + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace eulerlu
