#pragma once

#include <Eigen/Core>
#include <json.hpp>

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace proxsim {

enum class VariableKind { continuous, integer, categorical };

const char* to_string(VariableKind kind) noexcept;

/// One declared input or output variable. Continuous and integer inputs must
/// carry bounds; categorical inputs carry their ordered level labels. Output
/// variables are continuous KPIs whose bounds are optional and informational.
struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::continuous;
  std::optional<double> lower;
  std::optional<double> upper;
  std::vector<std::string> levels;
  std::string unit;

  bool operator==(const VariableSpec&) const = default;

  static VariableSpec continuous(std::string name, double lower, double upper,
                                 std::string unit = {});
  static VariableSpec integer(std::string name, double lower, double upper,
                              std::string unit = {});
  static VariableSpec categorical(std::string name,
                                  std::vector<std::string> levels);
  static VariableSpec output(std::string name, std::string unit = {});

  /// Encoded width: 1 for numeric slots, |levels| for one-hot blocks.
  std::size_t width() const noexcept;
};

using RawValue = std::variant<double, std::string>;

/// User-facing point: input variable name to number or category label.
using RawPoint = std::map<std::string, RawValue>;

/// Row-major encoded inputs in raw units (one-hot blocks expanded).
using EncodedPoint = Eigen::VectorXd;

/// The bounded input region (plus KPI list) a metamodel is trained on.
class Domain {
 public:
  Domain(std::vector<VariableSpec> inputs, std::vector<VariableSpec> outputs);

  const std::vector<VariableSpec>& inputs() const noexcept { return inputs_; }
  const std::vector<VariableSpec>& outputs() const noexcept { return outputs_; }

  std::size_t encoded_dim() const noexcept { return dim_; }
  std::size_t output_count() const noexcept { return outputs_.size(); }

  /// Offset of the first encoded slot of input `i`.
  std::size_t slot_offset(std::size_t i) const { return offsets_.at(i); }

  std::optional<std::size_t> input_index(const std::string& name) const;
  std::optional<std::size_t> output_index(const std::string& name) const;

  EncodedPoint encode(const RawPoint& point) const;
  RawPoint decode(const EncodedPoint& x) const;

  /// Maps numeric slots affinely onto [0,1] using the declared bounds;
  /// one-hot slots pass through unchanged.
  Eigen::MatrixXd scale_rows(const Eigen::MatrixXd& X) const;
  EncodedPoint unscale(const EncodedPoint& s) const;

  /// True when `x` satisfies the bounds and one-hot shape of this domain.
  bool contains(const EncodedPoint& x) const;

  /// Snaps integer slots to the nearest integer (clamped to bounds).
  void round_integers(EncodedPoint& x) const;

  bool operator==(const Domain& other) const {
    return inputs_ == other.inputs_ && outputs_ == other.outputs_;
  }

 private:
  std::vector<VariableSpec> inputs_;
  std::vector<VariableSpec> outputs_;
  std::vector<std::size_t> offsets_;
  std::size_t dim_ = 0;
};

using DomainPtr = std::shared_ptr<const Domain>;

/// Labelled (input, output) rows. X is n x D in encoded raw units, Y is n x m.
struct TrainingSet {
  DomainPtr domain;
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;

  explicit TrainingSet(DomainPtr d);
  TrainingSet(DomainPtr d, Eigen::MatrixXd x, Eigen::MatrixXd y);

  std::size_t size() const noexcept { return static_cast<std::size_t>(X.rows()); }
  bool empty() const noexcept { return X.rows() == 0; }
};

struct PredictionSet {
  DomainPtr domain;
  Eigen::MatrixXd X;
};

enum class DuplicatePolicy { allow, reject };

/// Returns `ts` with the rows of (X, Y) appended in order. Under
/// DuplicatePolicy::reject, a new row equal to an existing (or earlier new)
/// input row raises Errc::duplicate_input.
TrainingSet append_labeled(const TrainingSet& ts, const Eigen::MatrixXd& X,
                           const Eigen::MatrixXd& Y,
                           DuplicatePolicy policy = DuplicatePolicy::allow);

PredictionSet make_prediction_set(DomainPtr domain,
                                  const std::vector<RawPoint>& points);

// JSON forms. Absent optional fields are omitted, never null.
void to_json(nlohmann::json& j, const VariableSpec& v);
void from_json(const nlohmann::json& j, VariableSpec& v);
nlohmann::json domain_to_json(const Domain& d);
DomainPtr domain_from_json(const nlohmann::json& j);
nlohmann::json raw_point_to_json(const RawPoint& p);
RawPoint raw_point_from_json(const nlohmann::json& j);
nlohmann::json raw_value_to_json(const RawValue& v);

}  // namespace proxsim
