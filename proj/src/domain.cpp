#include "proxsim/domain.hpp"

#include "proxsim/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace proxsim {

using nlohmann::json;

const char* to_string(VariableKind kind) noexcept {
  switch (kind) {
    case VariableKind::continuous: return "continuous";
    case VariableKind::integer: return "integer";
    case VariableKind::categorical: return "categorical";
  }
  return "continuous";
}

VariableSpec VariableSpec::continuous(std::string name, double lower,
                                      double upper, std::string unit) {
  return {std::move(name), VariableKind::continuous, lower, upper, {},
          std::move(unit)};
}

VariableSpec VariableSpec::integer(std::string name, double lower, double upper,
                                   std::string unit) {
  return {std::move(name), VariableKind::integer, lower, upper, {},
          std::move(unit)};
}

VariableSpec VariableSpec::categorical(std::string name,
                                       std::vector<std::string> levels) {
  return {std::move(name), VariableKind::categorical, std::nullopt,
          std::nullopt, std::move(levels), {}};
}

VariableSpec VariableSpec::output(std::string name, std::string unit) {
  return {std::move(name), VariableKind::continuous, std::nullopt,
          std::nullopt, {}, std::move(unit)};
}

std::size_t VariableSpec::width() const noexcept {
  return kind == VariableKind::categorical ? levels.size() : 1;
}

namespace {

void validate_input(const VariableSpec& v) {
  if (v.name.empty()) {
    throw Error(Errc::invalid_domain, "variable name must be non-empty");
  }
  if (v.kind == VariableKind::categorical) {
    if (v.levels.empty()) {
      throw Error(Errc::invalid_domain, "categorical variable has no levels",
                  v.name);
    }
    std::set<std::string> seen(v.levels.begin(), v.levels.end());
    if (seen.size() != v.levels.size()) {
      throw Error(Errc::invalid_domain, "duplicate level labels", v.name);
    }
    return;
  }
  if (!v.lower || !v.upper || !std::isfinite(*v.lower) ||
      !std::isfinite(*v.upper) || !(*v.lower < *v.upper)) {
    throw Error(Errc::invalid_domain,
                "numeric input '" + v.name + "' needs finite lower < upper",
                v.name);
  }
}

void validate_output(const VariableSpec& v) {
  if (v.name.empty()) {
    throw Error(Errc::invalid_domain, "variable name must be non-empty");
  }
  if (v.kind != VariableKind::continuous) {
    throw Error(Errc::invalid_domain,
                "output '" + v.name + "' must be a continuous KPI", v.name);
  }
  if (v.lower.has_value() != v.upper.has_value() ||
      (v.lower && !(*v.lower < *v.upper))) {
    throw Error(Errc::invalid_domain,
                "output '" + v.name + "' bounds must satisfy lower < upper",
                v.name);
  }
}

std::string describe(const RawValue& v) {
  if (const auto* d = std::get_if<double>(&v)) {
    return json(*d).dump();
  }
  return "\"" + std::get<std::string>(v) + "\"";
}

}  // namespace

Domain::Domain(std::vector<VariableSpec> inputs,
               std::vector<VariableSpec> outputs)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
  if (inputs_.empty() || outputs_.empty()) {
    throw Error(Errc::invalid_domain,
                "a domain needs at least one input and one output");
  }
  std::set<std::string> names;
  for (const auto& v : inputs_) {
    validate_input(v);
    if (!names.insert(v.name).second) {
      throw Error(Errc::invalid_domain, "duplicate variable name '" + v.name + "'",
                  v.name);
    }
    offsets_.push_back(dim_);
    dim_ += v.width();
  }
  for (const auto& v : outputs_) {
    validate_output(v);
    if (!names.insert(v.name).second) {
      throw Error(Errc::invalid_domain, "duplicate variable name '" + v.name + "'",
                  v.name);
    }
  }
}

std::optional<std::size_t> Domain::input_index(const std::string& name) const {
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    if (inputs_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Domain::output_index(const std::string& name) const {
  for (std::size_t i = 0; i < outputs_.size(); ++i) {
    if (outputs_[i].name == name) return i;
  }
  return std::nullopt;
}

EncodedPoint Domain::encode(const RawPoint& point) const {
  for (const auto& [name, _] : point) {
    if (!input_index(name)) {
      throw Error(Errc::unknown_variable, "unknown input '" + name + "'", name);
    }
  }
  EncodedPoint x = EncodedPoint::Zero(static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    const auto& v = inputs_[i];
    const auto it = point.find(v.name);
    if (it == point.end()) {
      throw Error(Errc::missing_variable, "input '" + v.name + "' missing",
                  v.name);
    }
    const auto off = static_cast<Eigen::Index>(offsets_[i]);
    if (v.kind == VariableKind::categorical) {
      const auto* label = std::get_if<std::string>(&it->second);
      if (label == nullptr) {
        throw Error(Errc::unknown_level,
                    "'" + v.name + "' expects a level label, got " +
                        describe(it->second),
                    v.name);
      }
      const auto pos = std::find(v.levels.begin(), v.levels.end(), *label);
      if (pos == v.levels.end()) {
        throw Error(Errc::unknown_level,
                    "'" + *label + "' is not a level of '" + v.name + "'",
                    v.name);
      }
      x[off + (pos - v.levels.begin())] = 1.0;
      continue;
    }
    const auto* value = std::get_if<double>(&it->second);
    if (value == nullptr || !std::isfinite(*value) || *value < *v.lower ||
        *value > *v.upper) {
      throw Error(Errc::out_of_domain,
                  "'" + v.name + "' = " + describe(it->second) +
                      " outside [" + json(*v.lower).dump() + ", " +
                      json(*v.upper).dump() + "]",
                  v.name);
    }
    x[off] = *value;
  }
  return x;
}

RawPoint Domain::decode(const EncodedPoint& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_) {
    throw Error(Errc::dimension_mismatch,
                "encoded point has " + std::to_string(x.size()) +
                    " slots, domain expects " + std::to_string(dim_));
  }
  RawPoint out;
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    const auto& v = inputs_[i];
    const auto off = static_cast<Eigen::Index>(offsets_[i]);
    if (v.kind != VariableKind::categorical) {
      out.emplace(v.name, x[off]);
      continue;
    }
    std::optional<std::size_t> hot;
    for (std::size_t k = 0; k < v.levels.size(); ++k) {
      const double e = x[off + static_cast<Eigen::Index>(k)];
      if (e == 1.0 && !hot) {
        hot = k;
      } else if (e != 0.0) {
        throw Error(Errc::malformed_one_hot,
                    "one-hot block of '" + v.name + "' is not a unit vector",
                    v.name);
      }
    }
    if (!hot) {
      throw Error(Errc::malformed_one_hot,
                  "one-hot block of '" + v.name + "' sums to 0", v.name);
    }
    out.emplace(v.name, v.levels[*hot]);
  }
  return out;
}

Eigen::MatrixXd Domain::scale_rows(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd S = X;
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    const auto& v = inputs_[i];
    if (v.kind == VariableKind::categorical) continue;
    const auto c = static_cast<Eigen::Index>(offsets_[i]);
    S.col(c) = (X.col(c).array() - *v.lower) / (*v.upper - *v.lower);
  }
  return S;
}

EncodedPoint Domain::unscale(const EncodedPoint& s) const {
  EncodedPoint x = s;
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    const auto& v = inputs_[i];
    if (v.kind == VariableKind::categorical) continue;
    const auto c = static_cast<Eigen::Index>(offsets_[i]);
    x[c] = *v.lower + s[c] * (*v.upper - *v.lower);
  }
  return x;
}

bool Domain::contains(const EncodedPoint& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_) return false;
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    const auto& v = inputs_[i];
    const auto off = static_cast<Eigen::Index>(offsets_[i]);
    if (v.kind != VariableKind::categorical) {
      if (!(x[off] >= *v.lower && x[off] <= *v.upper)) return false;
      continue;
    }
    int ones = 0;
    for (std::size_t k = 0; k < v.levels.size(); ++k) {
      const double e = x[off + static_cast<Eigen::Index>(k)];
      if (e == 1.0) {
        ++ones;
      } else if (e != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  return true;
}

void Domain::round_integers(EncodedPoint& x) const {
  for (std::size_t i = 0; i < inputs_.size(); ++i) {
    const auto& v = inputs_[i];
    if (v.kind != VariableKind::integer) continue;
    const auto off = static_cast<Eigen::Index>(offsets_[i]);
    const double lo = std::ceil(*v.lower);
    const double hi = std::floor(*v.upper);
    x[off] = std::clamp(std::round(x[off]), lo, hi);
  }
}

TrainingSet::TrainingSet(DomainPtr d) : domain(std::move(d)) {
  X.resize(0, static_cast<Eigen::Index>(domain->encoded_dim()));
  Y.resize(0, static_cast<Eigen::Index>(domain->output_count()));
}

TrainingSet::TrainingSet(DomainPtr d, Eigen::MatrixXd x, Eigen::MatrixXd y)
    : domain(std::move(d)), X(std::move(x)), Y(std::move(y)) {
  if (static_cast<std::size_t>(X.cols()) != domain->encoded_dim() ||
      static_cast<std::size_t>(Y.cols()) != domain->output_count() ||
      X.rows() != Y.rows()) {
    throw Error(Errc::dimension_mismatch,
                "training set shapes do not match the domain");
  }
}

TrainingSet append_labeled(const TrainingSet& ts, const Eigen::MatrixXd& X,
                           const Eigen::MatrixXd& Y, DuplicatePolicy policy) {
  if (X.rows() != Y.rows() || X.cols() != ts.X.cols() ||
      Y.cols() != ts.Y.cols()) {
    throw Error(Errc::dimension_mismatch,
                "appended rows do not match the training set shape");
  }
  const Eigen::Index n = ts.X.rows();
  Eigen::MatrixXd nx(n + X.rows(), ts.X.cols());
  Eigen::MatrixXd ny(n + Y.rows(), ts.Y.cols());
  nx << ts.X, X;
  ny << ts.Y, Y;
  if (policy == DuplicatePolicy::reject) {
    for (Eigen::Index i = n; i < nx.rows(); ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        if (nx.row(i) == nx.row(j)) {
          throw Error(Errc::duplicate_input,
                      "row " + std::to_string(i) + " duplicates row " +
                          std::to_string(j) + " under a noise-free model",
                      {}, static_cast<std::size_t>(i));
        }
      }
    }
  }
  return TrainingSet(ts.domain, std::move(nx), std::move(ny));
}

PredictionSet make_prediction_set(DomainPtr domain,
                                  const std::vector<RawPoint>& points) {
  PredictionSet p{domain, Eigen::MatrixXd(static_cast<Eigen::Index>(points.size()),
                                          static_cast<Eigen::Index>(domain->encoded_dim()))};
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      p.X.row(static_cast<Eigen::Index>(i)) = domain->encode(points[i]).transpose();
    } catch (const Error& e) {
      throw Error(e.code(), "point " + std::to_string(i) + ": " + e.message(),
                  e.variable(), i);
    }
  }
  return p;
}

void to_json(json& j, const VariableSpec& v) {
  j = json::object();
  j["name"] = v.name;
  j["kind"] = to_string(v.kind);
  if (v.lower) j["lower"] = *v.lower;
  if (v.upper) j["upper"] = *v.upper;
  if (v.kind == VariableKind::categorical) j["levels"] = v.levels;
  if (!v.unit.empty()) j["unit"] = v.unit;
}

void from_json(const json& j, VariableSpec& v) {
  if (!j.is_object() || !j.contains("name") || !j["name"].is_string()) {
    throw Error(Errc::invalid_domain, "variable needs a string 'name'");
  }
  v = VariableSpec{};
  v.name = j["name"].get<std::string>();
  const std::string kind = j.value("kind", std::string("continuous"));
  if (kind == "continuous") {
    v.kind = VariableKind::continuous;
  } else if (kind == "integer") {
    v.kind = VariableKind::integer;
  } else if (kind == "categorical") {
    v.kind = VariableKind::categorical;
  } else {
    throw Error(Errc::invalid_domain, "unknown kind '" + kind + "'", v.name);
  }
  try {
    if (j.contains("lower")) v.lower = j["lower"].get<double>();
    if (j.contains("upper")) v.upper = j["upper"].get<double>();
    if (j.contains("levels")) v.levels = j["levels"].get<std::vector<std::string>>();
    if (j.contains("unit")) v.unit = j["unit"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_domain, std::string("variable '") + v.name +
                                          "': " + e.what(),
                v.name);
  }
}

json domain_to_json(const Domain& d) {
  return {{"inputs", d.inputs()}, {"outputs", d.outputs()}};
}

DomainPtr domain_from_json(const json& j) {
  if (!j.is_object() || !j.contains("inputs") || !j.contains("outputs") ||
      !j["inputs"].is_array() || !j["outputs"].is_array()) {
    throw Error(Errc::invalid_domain, "domain needs 'inputs' and 'outputs' arrays");
  }
  return std::make_shared<const Domain>(
      j["inputs"].get<std::vector<VariableSpec>>(),
      j["outputs"].get<std::vector<VariableSpec>>());
}

json raw_value_to_json(const RawValue& v) {
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::get<std::string>(v);
}

json raw_point_to_json(const RawPoint& p) {
  json j = json::object();
  for (const auto& [k, v] : p) j[k] = raw_value_to_json(v);
  return j;
}

RawPoint raw_point_from_json(const json& j) {
  if (!j.is_object()) {
    throw Error(Errc::dimension_mismatch, "a raw point must be a JSON object");
  }
  RawPoint p;
  for (const auto& [k, v] : j.items()) {
    if (v.is_number()) {
      p.emplace(k, v.get<double>());
    } else if (v.is_string()) {
      p.emplace(k, v.get<std::string>());
    } else {
      throw Error(Errc::out_of_domain,
                  "'" + k + "' must be a number or a level label", k);
    }
  }
  return p;
}

}  // namespace proxsim
