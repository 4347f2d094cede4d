#include "proxsim/service.hpp"

#include "proxsim/error.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace proxsim {

using nlohmann::json;
namespace fs = std::filesystem;

ApiResponse api_error(int status, const std::string& code, const std::string& message,
                      const json& details) {
  json body = {{"code", code}, {"message", message}};
  if (!details.is_null()) body["details"] = details;
  return {status, std::move(body)};
}

struct ApiService::Entry {
  std::string id;
  json simulator_ref;
  json config;
  DomainPtr domain;

  std::mutex writer;                    // held for the duration of an advance
  std::unique_ptr<Campaign> campaign;   // touched only under `writer`

  mutable std::mutex snapshot_mutex;
  std::shared_ptr<const CampaignState> snapshot;

  void publish(const CampaignState& s) {
    auto copy = std::make_shared<const CampaignState>(s);
    std::lock_guard lock(snapshot_mutex);
    snapshot = std::move(copy);
  }

  std::shared_ptr<const CampaignState> view() const {
    std::lock_guard lock(snapshot_mutex);
    return snapshot;
  }

  json describe(const CampaignState& s) const {
    json j = state_summary(s, 10);
    j["campaign_id"] = id;
    j["simulator"] = simulator_ref;
    j["config"] = config;
    j["domain"] = domain_to_json(*domain);
    return j;
  }
};

namespace {

std::shared_ptr<ApiService::Entry> make_entry(const std::string& id,
                                              std::unique_ptr<Campaign> c) {
  auto e = std::make_shared<ApiService::Entry>();
  e->id = id;
  e->simulator_ref = c->simulator_ref();
  e->config = c->config().to_json();
  e->domain = c->simulator()->domain();
  e->publish(c->state());
  auto* raw = e.get();
  c->set_observer([raw](const CampaignState& s) { raw->publish(s); });
  e->campaign = std::move(c);
  return e;
}

json matrix(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < M.cols(); ++k) row.push_back(M(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

json output_names(const Domain& d) {
  json names = json::array();
  for (const auto& o : d.outputs()) names.push_back(o.name);
  return names;
}

ApiResponse point_error(const Error& e) {
  json details = {{"reason", errc_name(e.code())}};
  if (e.index()) details["index"] = *e.index();
  if (!e.variable().empty()) details["variable"] = e.variable();
  return api_error(422, "out_of_domain", e.message(), details);
}

// Prediction against the latest published model.
ApiResponse run_prediction(const CampaignState* state, const std::vector<RawPoint>& points,
                           json extra) {
  if (state == nullptr || !state->model) {
    return api_error(409, "no_model_yet", "the campaign has not fitted a model yet");
  }
  PredictionSet set;
  try {
    set = make_prediction_set(state->model->domain(), points);
  } catch (const Error& e) {
    return point_error(e);
  }
  const PredictionBatch p = state->model->predict(set.X);
  extra["outputs"] = output_names(*state->model->domain());
  extra["mean"] = matrix(p.mean);
  extra["variance"] = matrix(p.variance);
  return {200, std::move(extra)};
}

std::string fresh_id(const std::string& dir, const std::set<std::string>& taken) {
  static std::mutex m;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(m);
  for (;;) {
    std::ostringstream s;
    s << "c" << std::hex << (gen() & 0xffffffffffffULL);
    const std::string id = s.str();
    if (taken.count(id) == 0 && !fs::exists(fs::path(dir) / (id + ".jsonl"))) return id;
  }
}

}  // namespace

ApiService::ApiService(SimulatorRegistry registry, std::string data_dir)
    : registry_(std::move(registry)), data_dir_(std::move(data_dir)) {
  fs::create_directories(data_dir_);
  load_existing();
}

ApiService::~ApiService() = default;

void ApiService::load_existing() {
  for (const auto& f : fs::directory_iterator(data_dir_)) {
    if (f.path().extension() != ".jsonl") continue;
    const std::string id = f.path().stem().string();
    try {
      auto c = std::make_unique<Campaign>(Campaign::open(f.path().string(), registry_));
      campaigns_[id] = make_entry(id, std::move(c));
    } catch (const std::exception& e) {
      std::cerr << "proxsim: skipping campaign " << id << ": " << e.what() << '\n';
    }
  }
}

std::shared_ptr<ApiService::Entry> ApiService::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = campaigns_.find(id);
  return it == campaigns_.end() ? nullptr : it->second;
}

ApiResponse ApiService::list_simulators() const {
  json out = json::array();
  for (const auto& id : registry_.ids()) out.push_back(describe(*registry_.create(id)));
  return {200, out};
}

ApiResponse ApiService::get_simulator(const std::string& id) const {
  if (!registry_.contains(id)) {
    return api_error(404, "unknown_simulator", "no simulator named '" + id + "'", {{"id", id}});
  }
  return {200, describe(*registry_.create(id))};
}

ApiResponse ApiService::create_campaign(const json& body) {
  if (!body.is_object() || !body.contains("simulator_id") || !body["simulator_id"].is_string()) {
    return api_error(422, "invalid_request", "body needs a string 'simulator_id'",
                     {{"field", "simulator_id"}});
  }
  const std::string sim_id = body["simulator_id"].get<std::string>();
  if (!registry_.contains(sim_id)) {
    return api_error(404, "unknown_simulator", "no simulator named '" + sim_id + "'",
                     {{"id", sim_id}});
  }
  CampaignConfig config;
  SimulatorPtr sim;
  json ref = sim_id;
  try {
    config = CampaignConfig::from_json(body.value("config", json::object()));
    if (body.contains("simulator_options")) {
      ref = {{"id", sim_id}, {"options", body["simulator_options"]}};
    }
    sim = resolve_simulator(ref, registry_);
  } catch (const Error& e) {
    json details = nullptr;
    if (!e.variable().empty()) details = {{"field", e.variable()}};
    return api_error(422, "invalid_config", e.message(), details);
  }

  std::unique_lock lock(mutex_);
  std::set<std::string> taken;
  for (const auto& [id, e] : campaigns_) taken.insert(id);
  const std::string id = fresh_id(data_dir_, taken);
  auto c = std::make_unique<Campaign>(sim, ref, config,
                                      (fs::path(data_dir_) / (id + ".jsonl")).string());
  auto entry = make_entry(id, std::move(c));
  campaigns_[id] = entry;
  lock.unlock();
  return {201, entry->describe(*entry->view())};
}

ApiResponse ApiService::list_campaigns() const {
  std::shared_lock lock(mutex_);
  json out = json::array();
  for (const auto& [id, e] : campaigns_) {
    const auto s = e->view();
    out.push_back({{"campaign_id", id},
                   {"simulator", e->simulator_ref},
                   {"iteration", s->iteration},
                   {"simulator_calls_used", s->simulator_calls_used},
                   {"stop_reason", s->stop_reason ? json(to_string(*s->stop_reason)) : json()}});
  }
  return {200, out};
}

ApiResponse ApiService::get_campaign(const std::string& id) const {
  const auto e = find(id);
  if (!e) return api_error(404, "not_found", "no campaign '" + id + "'", {{"id", id}});
  return {200, e->describe(*e->view())};
}

ApiResponse ApiService::advance(const std::string& id, const json& body) {
  const auto e = find(id);
  if (!e) return api_error(404, "not_found", "no campaign '" + id + "'", {{"id", id}});
  std::size_t n = 1;
  if (body.is_object() && body.contains("iterations")) {
    const auto& v = body["iterations"];
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1 || v.get<std::int64_t>() > 100000) {
      return api_error(422, "invalid_request", "'iterations' must be an integer in [1, 100000]",
                       {{"field", "iterations"}});
    }
    n = v.get<std::size_t>();
  } else if (!body.is_object()) {
    return api_error(422, "invalid_request", "body must be a JSON object");
  }

  std::unique_lock lock(e->writer, std::try_to_lock);
  if (!lock.owns_lock()) {
    return api_error(409, "campaign_busy", "another advance is in progress on '" + id + "'");
  }
  if (e->campaign->stopped()) {
    return api_error(410, "campaign_stopped", "campaign '" + id + "' has stopped",
                     {{"stop_reason", to_string(*e->campaign->state().stop_reason)}});
  }
  try {
    e->campaign->advance(n);
  } catch (const Error& err) {
    e->publish(e->campaign->state());
    const bool sim = err.code() == Errc::simulator_failure;
    return api_error(500, sim ? "simulator_failure" : "internal_error", err.message(),
                     {{"reason", errc_name(err.code())}});
  }
  e->publish(e->campaign->state());
  return {200, e->describe(*e->view())};
}

ApiResponse ApiService::predict(const std::string& id, const json& body) const {
  const auto e = find(id);
  if (!e) return api_error(404, "not_found", "no campaign '" + id + "'", {{"id", id}});
  if (!body.is_object() || !body.contains("points") || !body["points"].is_array()) {
    return api_error(422, "invalid_request", "body needs a 'points' array", {{"field", "points"}});
  }
  const auto state = e->view();
  if (!state->model) return api_error(409, "no_model_yet", "the campaign has not fitted a model yet");
  std::vector<RawPoint> points;
  points.reserve(body["points"].size());
  for (std::size_t i = 0; i < body["points"].size(); ++i) {
    try {
      points.push_back(raw_point_from_json(body["points"][i]));
    } catch (const Error& err) {
      return point_error(Error(err.code(), "point " + std::to_string(i) + ": " + err.message(),
                               err.variable(), i));
    }
  }
  return run_prediction(state.get(), points, json::object());
}

std::vector<RawPoint> expand_sweep(const Domain& domain, const json& req, json& grid) {
  auto bad = [](const std::string& field, const std::string& msg) {
    return Error(Errc::invalid_config, msg, field);
  };
  if (!req.is_object()) throw bad("body", "sweep request must be a JSON object");
  if (!req.contains("vary") || !req["vary"].is_string()) {
    throw bad("vary", "'vary' must name an input variable");
  }
  const std::string vary = req["vary"].get<std::string>();
  const auto vi = domain.input_index(vary);
  if (!vi) throw bad("vary", "'" + vary + "' is not an input variable");
  const json fixed = req.value("fixed", json::object());
  if (!fixed.is_object()) throw bad("fixed", "'fixed' must be an object");
  if (fixed.contains(vary)) throw bad("fixed", "'" + vary + "' is both varied and fixed");
  for (const auto& [k, v] : fixed.items()) {
    if (!domain.input_index(k)) throw bad("fixed", "'" + k + "' is not an input variable");
  }
  for (const auto& v : domain.inputs()) {
    if (v.name != vary && !fixed.contains(v.name)) {
      throw bad("fixed", "'fixed' lacks input '" + v.name + "'");
    }
  }

  const auto& spec = domain.inputs()[*vi];
  std::vector<RawValue> values;
  if (spec.kind == VariableKind::categorical) {
    for (const auto& l : spec.levels) values.emplace_back(l);
  } else {
    if (!req.contains("steps") || !req["steps"].is_number_integer() ||
        req["steps"].get<std::int64_t>() < 2 || req["steps"].get<std::int64_t>() > 100000) {
      throw bad("steps", "'steps' must be an integer in [2, 100000]");
    }
    const auto steps = req["steps"].get<std::size_t>();
    const double lo = *spec.lower;
    const double hi = *spec.upper;
    for (std::size_t i = 0; i < steps; ++i) {
      double x = i + 1 == steps ? hi : lo + (hi - lo) * static_cast<double>(i) /
                                               static_cast<double>(steps - 1);
      if (spec.kind == VariableKind::integer) {
        x = std::round(x);
        if (!values.empty() && std::get<double>(values.back()) == x) continue;
      }
      values.emplace_back(x);
    }
  }

  const RawPoint base = raw_point_from_json(fixed);
  std::vector<RawPoint> points;
  grid = json::array();
  for (const auto& v : values) {
    RawPoint p = base;
    p[vary] = v;
    points.push_back(std::move(p));
    grid.push_back(raw_value_to_json(v));
  }
  return points;
}

ApiResponse ApiService::sweep(const std::string& id, const json& body) const {
  const auto e = find(id);
  if (!e) return api_error(404, "not_found", "no campaign '" + id + "'", {{"id", id}});
  json grid;
  std::vector<RawPoint> points;
  try {
    points = expand_sweep(*e->domain, body, grid);
  } catch (const Error& err) {
    if (err.code() != Errc::invalid_config) return point_error(err);
    return api_error(422, "bad_sweep", err.message(), {{"field", err.variable()}});
  }
  const auto state = e->view();
  return run_prediction(state.get(), points, {{"vary", body["vary"]}, {"grid", grid}});
}

ApiResponse ApiService::handle(const std::string& method, const std::string& path,
                               const std::string& raw_body) {
  std::vector<std::string> seg;
  {
    std::string cur;
    std::istringstream in(path);
    while (std::getline(in, cur, '/')) {
      if (!cur.empty()) seg.push_back(cur);
    }
  }
  if (seg.size() < 3 || seg[0] != "api" || seg[1] != "v1") {
    return api_error(404, "not_found", "no route for " + path);
  }
  seg.erase(seg.begin(), seg.begin() + 2);

  json body = json::object();
  if (method == "POST" && !raw_body.empty()) {
    body = json::parse(raw_body, nullptr, false);
    if (body.is_discarded()) return api_error(400, "bad_request", "request body is not valid JSON");
  }
  auto not_allowed = [&] {
    return api_error(405, "method_not_allowed", method + " is not supported on " + path);
  };

  try {
    if (seg[0] == "simulators") {
      if (method != "GET") return not_allowed();
      if (seg.size() == 1) return list_simulators();
      if (seg.size() == 2) return get_simulator(seg[1]);
    } else if (seg[0] == "campaigns") {
      if (seg.size() == 1) {
        if (method == "GET") return list_campaigns();
        if (method == "POST") return create_campaign(body);
        return not_allowed();
      }
      if (seg.size() == 2) {
        if (method != "GET") return not_allowed();
        return get_campaign(seg[1]);
      }
      if (seg.size() == 3) {
        if (method != "POST") return not_allowed();
        if (seg[2] == "advance") return advance(seg[1], body);
        if (seg[2] == "predict") return predict(seg[1], body);
        if (seg[2] == "sweep") return sweep(seg[1], body);
      }
    }
  } catch (const std::exception& e) {
    return api_error(500, "internal_error", e.what());
  }
  return api_error(404, "not_found", "no route for " + path);
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) return {bind.empty() ? "127.0.0.1" : bind, 8080};
  std::string host = bind.substr(0, colon);
  if (host.empty()) host = "0.0.0.0";
  const std::string port = bind.substr(colon + 1);
  try {
    std::size_t used = 0;
    const int p = std::stoi(port, &used);
    if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range(port);
    return {host, p};
  } catch (const std::exception&) {
    throw Error(Errc::invalid_config, "bad listen address '" + bind + "'", "bind");
  }
}

}  // namespace proxsim
