#pragma once

#include <stdexcept>
#include <string>

namespace crvb {

enum class ErrorKind {
  InvalidArgument,
  DegenerateSurface,
  GaugeSingular,
  UnsupportedScale,
  UnsupportedSurface,
  NoSolution,
  NonUniqueSolution,
  SolverFailure,
  SmallnessViolation,
  Diverged,
  FrameDegenerate,
  Format,
  Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::DegenerateSurface: return "degenerate-surface";
    case ErrorKind::GaugeSingular: return "gauge-singular";
    case ErrorKind::UnsupportedScale: return "unsupported-scale";
    case ErrorKind::UnsupportedSurface: return "unsupported-surface";
    case ErrorKind::NoSolution: return "no-solution";
    case ErrorKind::NonUniqueSolution: return "non-unique-solution";
    case ErrorKind::SolverFailure: return "solver-failure";
    case ErrorKind::SmallnessViolation: return "smallness-violation";
    case ErrorKind::Diverged: return "diverged";
    case ErrorKind::FrameDegenerate: return "frame-degenerate";
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorKind::InvalidArgument, what);
}

}  // namespace crvb
