#pragma once

#include <stdexcept>
#include <string>

namespace psbal {

// Error codes surfaced by the library. The CLI maps InvalidInput-type codes
// to exit 2 and numeric-failure codes to exit 1.
enum class Errc {
  MissingColumn,
  NonBinaryGroup,
  MissingValue,
  EmptyGroup,
  RankDeficient,
  Separation,
  NoConvergence,
  DimensionMismatch,
  AllZeroWeights,
  ZeroGroupWeight,
  SingularJacobian,
  RequiresUntrimmed,
  DegenerateResample,
  NegativeOutcome,
  InvalidScenario,
  InvalidConfig,
};

const char* errc_name(Errc c);

// Whether an error class indicates malformed input/config (CLI exit 2) as
// opposed to a numeric failure during fitting/estimation (CLI exit 1).
bool errc_is_validation(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void throw_error(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace psbal
