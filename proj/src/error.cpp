#include "psbal/error.hpp"

namespace psbal {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::NonBinaryGroup: return "NonBinaryGroup";
    case Errc::MissingValue: return "MissingValue";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::Separation: return "Separation";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::AllZeroWeights: return "AllZeroWeights";
    case Errc::ZeroGroupWeight: return "ZeroGroupWeight";
    case Errc::SingularJacobian: return "SingularJacobian";
    case Errc::RequiresUntrimmed: return "RequiresUntrimmed";
    case Errc::DegenerateResample: return "DegenerateResample";
    case Errc::NegativeOutcome: return "NegativeOutcome";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "Error";
}

bool errc_is_validation(Errc c) {
  switch (c) {
    case Errc::MissingColumn:
    case Errc::NonBinaryGroup:
    case Errc::MissingValue:
    case Errc::EmptyGroup:
    case Errc::DimensionMismatch:
    case Errc::InvalidScenario:
    case Errc::InvalidConfig:
      return true;
    default:
      return false;
  }
}

}  // namespace psbal
