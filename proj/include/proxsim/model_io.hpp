#pragma once

#include "proxsim/gp.hpp"
#include "proxsim/linear_model.hpp"

#include <json.hpp>

#include <string>
#include <variant>

namespace proxsim {

/// {"domain", "inputs": [raw points], "outputs": [[kpi...]]}; inputs are
/// decoded back to raw values so files stay readable and unit-true.
nlohmann::json training_set_to_json(const TrainingSet& ts);
TrainingSet training_set_from_json(const nlohmann::json& j);

/// {"lengthscales", "signal_variance", "noise_variance"}.
nlohmann::json hyperparameters_to_json(const GPHyperparameters& theta);
GPHyperparameters hyperparameters_from_json(const nlohmann::json& j);

using Metamodel = std::variant<GPModel, LinearMetamodel>;

/// {"kind": "gp" | "linear", "domain", "hyperparameters" | "coefficients",
///  "training", "diagnostics"}. Cholesky factors are not stored.
nlohmann::json model_to_json(const GPModel& m);
nlohmann::json model_to_json(const LinearMetamodel& m, const TrainingSet* training = nullptr);

/// Loading a GP refits its factorization from the stored hyperparameters.
Metamodel model_from_json(const nlohmann::json& j);

void save_model(const std::string& path, const nlohmann::json& doc);
Metamodel load_model(const std::string& path);

const DomainPtr& model_domain(const Metamodel& m);
PredictionBatch predict(const Metamodel& m, const Eigen::MatrixXd& X);

}  // namespace proxsim
