#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace proxsim {

enum class Errc {
  invalid_domain,
  unknown_variable,
  missing_variable,
  out_of_domain,
  unknown_level,
  malformed_one_hot,
  dimension_mismatch,
  duplicate_input,
  rank_deficient,
  too_few_points,
  not_positive_definite,
  empty_holdout,
  empty_pool,
  batch_too_large,
  simulator_failure,
  corrupt_journal,
  domain_mismatch,
  incompatible_wiring,
  range_violation,
  shared_variable_mismatch,
  combiner_error,
  missing_file,
  missing_column,
  key_collision,
  unmappable_value,
  invalid_config,
  invalid_model,
  unknown_simulator,
};

std::string_view errc_name(Errc code) noexcept;

/// Library-wide exception. `variable` and `index` are filled in where an
/// error can be pinned to one input variable, CSV column, row or point.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string variable = {},
        std::optional<std::size_t> index = std::nullopt)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        message_(message),
        variable_(std::move(variable)),
        index_(index) {}

  Errc code() const noexcept { return code_; }
  /// what() without the leading code name.
  const std::string& message() const noexcept { return message_; }
  const std::string& variable() const noexcept { return variable_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  Errc code_;
  std::string message_;
  std::string variable_;
  std::optional<std::size_t> index_;
};

}  // namespace proxsim
