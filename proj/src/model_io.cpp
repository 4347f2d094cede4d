#include "proxsim/model_io.hpp"

#include "proxsim/error.hpp"

#include <fstream>

namespace proxsim {

using nlohmann::json;

json training_set_to_json(const TrainingSet& ts) {
  json inputs = json::array();
  json outputs = json::array();
  for (Eigen::Index i = 0; i < ts.X.rows(); ++i) {
    inputs.push_back(raw_point_to_json(ts.domain->decode(ts.X.row(i).transpose())));
    json row = json::array();
    for (Eigen::Index k = 0; k < ts.Y.cols(); ++k) row.push_back(ts.Y(i, k));
    outputs.push_back(std::move(row));
  }
  return {{"domain", domain_to_json(*ts.domain)}, {"inputs", inputs}, {"outputs", outputs}};
}

TrainingSet training_set_from_json(const json& j) {
  try {
    auto domain = domain_from_json(j.at("domain"));
    const auto& in = j.at("inputs");
    const auto& out = j.at("outputs");
    if (!in.is_array() || !out.is_array() || in.size() != out.size()) {
      throw Error(Errc::invalid_model, "training inputs and outputs differ in length");
    }
    const auto n = static_cast<Eigen::Index>(in.size());
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(domain->encoded_dim()));
    Eigen::MatrixXd Y(n, static_cast<Eigen::Index>(domain->output_count()));
    for (Eigen::Index i = 0; i < n; ++i) {
      X.row(i) = domain->encode(raw_point_from_json(in[static_cast<std::size_t>(i)])).transpose();
      const auto row = out[static_cast<std::size_t>(i)].get<std::vector<double>>();
      if (row.size() != domain->output_count()) {
        throw Error(Errc::dimension_mismatch, "output row " + std::to_string(i) + " has wrong length");
      }
      for (Eigen::Index k = 0; k < Y.cols(); ++k) Y(i, k) = row[static_cast<std::size_t>(k)];
    }
    return TrainingSet(std::move(domain), std::move(X), std::move(Y));
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_model, std::string("training set: ") + e.what());
  }
}

namespace {

json vec(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace

json hyperparameters_to_json(const GPHyperparameters& t) {
  return {{"lengthscales", vec(t.lengthscales)},
          {"signal_variance", t.signal_variance},
          {"noise_variance", t.noise_variance}};
}

GPHyperparameters hyperparameters_from_json(const json& h) {
  GPHyperparameters t;
  const auto ell = h.at("lengthscales").get<std::vector<double>>();
  t.lengthscales =
      Eigen::Map<const Eigen::VectorXd>(ell.data(), static_cast<Eigen::Index>(ell.size()));
  t.signal_variance = h.at("signal_variance").get<double>();
  t.noise_variance = h.at("noise_variance").get<double>();
  return t;
}

json model_to_json(const GPModel& m) {
  const Domain& d = *m.domain();
  json hyper = json::array();
  json diag = json::array();
  for (std::size_t k = 0; k < m.outputs().size(); ++k) {
    const auto& o = m.outputs()[k];
    json h = hyperparameters_to_json(o.theta);
    h["output"] = d.outputs()[k].name;
    hyper.push_back(std::move(h));
    diag.push_back({{"output", d.outputs()[k].name},
                    {"log_marginal_likelihood", o.lml},
                    {"jitter", o.jitter},
                    {"prior_mean", o.mean}});
  }
  return {{"kind", "gp"},
          {"domain", domain_to_json(d)},
          {"hyperparameters", hyper},
          {"training", training_set_to_json(m.training())},
          {"diagnostics", diag}};
}

json model_to_json(const LinearMetamodel& m, const TrainingSet* training) {
  const Domain& d = *m.domain;
  json coef = json::array();
  for (std::size_t k = 0; k < m.outputs.size(); ++k) {
    const auto& o = m.outputs[k];
    coef.push_back({{"output", d.outputs()[k].name},
                    {"intercept", o.beta0},
                    {"beta", vec(o.beta)},
                    {"sigma2", o.sigma2}});
  }
  json j = {{"kind", "linear"}, {"domain", domain_to_json(d)}, {"coefficients", coef}};
  if (training != nullptr) j["training"] = training_set_to_json(*training);
  return j;
}

Metamodel model_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "gp") {
      TrainingSet ts = training_set_from_json(j.at("training"));
      if (!(*ts.domain == *domain_from_json(j.at("domain")))) {
        throw Error(Errc::domain_mismatch, "training data domain differs from model domain");
      }
      std::vector<GPHyperparameters> thetas;
      for (const auto& h : j.at("hyperparameters")) thetas.push_back(hyperparameters_from_json(h));
      if (thetas.size() != ts.domain->output_count()) {
        throw Error(Errc::invalid_model, "need one hyperparameter set per output");
      }
      GPFitOptions o;
      o.optimize = false;
      o.check_duplicates = false;
      return fit_gp(ts, thetas, o);
    }
    if (kind == "linear") {
      LinearMetamodel m{domain_from_json(j.at("domain")), {}};
      std::size_t k = 0;
      for (const auto& c : j.at("coefficients")) {
        LinearModel lm;
        lm.domain = m.domain;
        lm.output_index = k++;
        lm.beta0 = c.at("intercept").get<double>();
        const auto beta = c.at("beta").get<std::vector<double>>();
        lm.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(),
                                                    static_cast<Eigen::Index>(beta.size()));
        lm.sigma2 = c.at("sigma2").get<double>();
        if (static_cast<std::size_t>(lm.beta.size()) != m.domain->encoded_dim()) {
          throw Error(Errc::invalid_model, "coefficient vector has the wrong length");
        }
        m.outputs.push_back(std::move(lm));
      }
      if (m.outputs.size() != m.domain->output_count()) {
        throw Error(Errc::invalid_model, "need one coefficient set per output");
      }
      return m;
    }
    throw Error(Errc::invalid_model, "unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_model, std::string("model document: ") + e.what());
  }
}

void save_model(const std::string& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::missing_file, "cannot write '" + path + "'", path);
  out << doc.dump(2) << '\n';
}

Metamodel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open '" + path + "'", path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_model, "'" + path + "': " + e.what());
  }
  return model_from_json(j);
}

const DomainPtr& model_domain(const Metamodel& m) {
  if (const auto* gp = std::get_if<GPModel>(&m)) return gp->domain();
  return std::get<LinearMetamodel>(m).domain;
}

PredictionBatch predict(const Metamodel& m, const Eigen::MatrixXd& X) {
  return std::visit([&](const auto& model) { return model.predict(X); }, m);
}

}  // namespace proxsim
