#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kgp {

enum class ErrorCode {
  MalformedLine,
  UnknownId,
  DimensionMismatch,
  ZeroResidual,
  ZeroGradient,
  EmptyStore,
  TargetInTrainingSet,
  NoCandidates,
  NoPaths,
  EmptyResults,
  InsufficientEligibleTargets,
  ConflictingPerturbation,
  BadCheckpoint,
  InvalidConfig,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroResidual: return "ZeroResidual";
    case ErrorCode::ZeroGradient: return "ZeroGradient";
    case ErrorCode::EmptyStore: return "EmptyStore";
    case ErrorCode::TargetInTrainingSet: return "TargetInTrainingSet";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::NoPaths: return "NoPaths";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::InsufficientEligibleTargets: return "InsufficientEligibleTargets";
    case ErrorCode::ConflictingPerturbation: return "ConflictingPerturbation";
    case ErrorCode::BadCheckpoint: return "BadCheckpoint";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

// Every library failure is reported through this one exception type; callers
// that need to recover (attack aborts, skipped paths) switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, std::string_view what) {
  if (!cond) throw Error(code, std::string(what));
}

}  // namespace kgp
