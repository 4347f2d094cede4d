#include "proxsim/error.hpp"

namespace proxsim {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_domain: return "InvalidDomain";
    case Errc::unknown_variable: return "UnknownVariable";
    case Errc::missing_variable: return "MissingVariable";
    case Errc::out_of_domain: return "OutOfDomain";
    case Errc::unknown_level: return "UnknownLevel";
    case Errc::malformed_one_hot: return "MalformedOneHot";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::duplicate_input: return "DuplicateInput";
    case Errc::rank_deficient: return "RankDeficient";
    case Errc::too_few_points: return "TooFewPoints";
    case Errc::not_positive_definite: return "NotPositiveDefinite";
    case Errc::empty_holdout: return "EmptyHoldout";
    case Errc::empty_pool: return "EmptyPool";
    case Errc::batch_too_large: return "BatchTooLarge";
    case Errc::simulator_failure: return "SimulatorFailure";
    case Errc::corrupt_journal: return "CorruptJournal";
    case Errc::domain_mismatch: return "DomainMismatch";
    case Errc::incompatible_wiring: return "IncompatibleWiring";
    case Errc::range_violation: return "RangeViolation";
    case Errc::shared_variable_mismatch: return "SharedVariableMismatch";
    case Errc::combiner_error: return "CombinerError";
    case Errc::missing_file: return "MissingFile";
    case Errc::missing_column: return "MissingColumn";
    case Errc::key_collision: return "KeyCollision";
    case Errc::unmappable_value: return "UnmappableValue";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::invalid_model: return "InvalidModel";
    case Errc::unknown_simulator: return "UnknownSimulator";
  }
  return "Unknown";
}

}  // namespace proxsim
