#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uavrf {

enum class ErrorCode {
  InvalidArgument,
  InvalidClass,
  NonPositiveParam,
  TooShort,
  Empty,
  BadConfig,
  AllZero,
  ZeroProbabilityEntry,
  DegenerateTransient,
  SingleClass,
  SingletonClass,
  TooFewSamples,
  NonFiniteObjective,
  ArityMismatch,
  Io,
  FormatVersionMismatch,
  CorruptRecord,
  NotFound,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidClass: return "InvalidClass";
    case ErrorCode::NonPositiveParam: return "NonPositiveParam";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::ZeroProbabilityEntry: return "ZeroProbabilityEntry";
    case ErrorCode::DegenerateTransient: return "DegenerateTransient";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::SingletonClass: return "SingletonClass";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::Io: return "Io";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
    case ErrorCode::NotFound: return "NotFound";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace uavrf
