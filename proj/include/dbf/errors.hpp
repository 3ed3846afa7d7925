#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dbf {

enum class ErrorKind {
  InvalidArgument,
  NuTooSmall,
  UnsupportedOrder,
  TruncationTooLarge,
  NotInRange,
  NyquistViolation,
  NotContractive,
  NoConvergence,
  WrongCase,
  RangeViolation,
  HypothesisViolated,
  NeumannDiverges,
  UnsupportedSymbol,
  GridMisaligned,
  Schema,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; `kind()` carries the failure class so
// front ends can map it to exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NuTooSmall: return "NuTooSmall";
    case ErrorKind::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorKind::TruncationTooLarge: return "TruncationTooLarge";
    case ErrorKind::NotInRange: return "NotInRange";
    case ErrorKind::NyquistViolation: return "NyquistViolation";
    case ErrorKind::NotContractive: return "NotContractive";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::WrongCase: return "WrongCase";
    case ErrorKind::RangeViolation: return "RangeViolation";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::NeumannDiverges: return "NeumannDiverges";
    case ErrorKind::UnsupportedSymbol: return "UnsupportedSymbol";
    case ErrorKind::GridMisaligned: return "GridMisaligned";
    case ErrorKind::Schema: return "Schema";
  }
  return "Unknown";
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace dbf
