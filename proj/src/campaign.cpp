#include "proxsim/campaign.hpp"

#include "proxsim/design.hpp"
#include "proxsim/error.hpp"
#include "proxsim/model_io.hpp"
#include "proxsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <set>
#include <thread>

namespace proxsim {

using nlohmann::json;

const char* to_string(StopReason r) noexcept {
  switch (r) {
    case StopReason::budget_exhausted: return "budget_exhausted";
    case StopReason::iterations_reached: return "iterations_reached";
    case StopReason::rmse_met: return "rmse_met";
    case StopReason::manual: return "manual";
  }
  return "manual";
}

std::optional<StopReason> stop_reason_from_string(const std::string& s) {
  for (auto r : {StopReason::budget_exhausted, StopReason::iterations_reached,
                 StopReason::rmse_met, StopReason::manual}) {
    if (s == to_string(r)) return r;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- config

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw Error(Errc::invalid_config, field + " " + why, field);
}

std::uint64_t get_unsigned(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) bad_field(field, "must not be negative");
    return v.get<std::uint64_t>();
  }
  bad_field(field, "must be a non-negative integer");
}

double get_real(const json& v, const std::string& field) {
  if (!v.is_number()) bad_field(field, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) bad_field(field, "must be finite");
  return x;
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& prefix) {
  for (const auto& [key, value] : j.items()) {
    if (known.count(key) == 0) bad_field(prefix + key, "is not a recognised setting");
  }
}

}  // namespace

void CampaignConfig::validate() const {
  if (initial_design_size == 0) bad_field("initial_design_size", "must be positive");
  if (candidate_pool_size == 0) bad_field("candidate_pool_size", "must be positive");
  if (batch_size == 0) bad_field("batch_size", "must be positive");
  if (batch_size > candidate_pool_size) {
    bad_field("batch_size", "must not exceed candidate_pool_size");
  }
  if (optimize_hyperparameters_every == 0) {
    bad_field("optimize_hyperparameters_every", "must be positive");
  }
  if (restarts == 0) bad_field("restarts", "must be positive");
  if (!stopping.max_simulator_calls && !stopping.max_iterations && !stopping.rmse_threshold) {
    bad_field("stopping", "needs at least one of max_simulator_calls, max_iterations, "
                          "rmse_threshold");
  }
  if (stopping.rmse_threshold) {
    if (!(*stopping.rmse_threshold > 0.0) || !std::isfinite(*stopping.rmse_threshold)) {
      bad_field("stopping.rmse_threshold", "must be a positive number");
    }
    if (holdout_size == 0) bad_field("holdout_size", "must be positive with an rmse_threshold");
  }
  if (stopping.max_simulator_calls &&
      *stopping.max_simulator_calls < initial_design_size + holdout_size) {
    bad_field("stopping.max_simulator_calls",
              "must cover initial_design_size + holdout_size (" +
                  std::to_string(initial_design_size + holdout_size) + ")");
  }
  if (noise_variance && !(*noise_variance >= 0.0 && std::isfinite(*noise_variance))) {
    bad_field("noise_variance", "must be a finite non-negative number");
  }
}

CampaignConfig CampaignConfig::from_json(const json& j) {
  if (!j.is_object()) bad_field("config", "must be a JSON object");
  reject_unknown(j,
                 {"initial_design_size", "candidate_pool_size", "batch_size", "acquisition",
                  "stopping", "holdout_size", "seed", "optimize_hyperparameters_every",
                  "restarts", "noise_variance"},
                 "");
  CampaignConfig c;
  auto count = [&](const char* key, std::size_t& out) {
    if (j.contains(key)) out = static_cast<std::size_t>(get_unsigned(j.at(key), key));
  };
  count("initial_design_size", c.initial_design_size);
  count("candidate_pool_size", c.candidate_pool_size);
  count("batch_size", c.batch_size);
  count("optimize_hyperparameters_every", c.optimize_hyperparameters_every);
  count("restarts", c.restarts);
  if (j.contains("seed")) c.seed = get_unsigned(j.at("seed"), "seed");
  if (j.contains("acquisition")) {
    const auto& a = j.at("acquisition");
    if (a == "max_variance") {
      c.acquisition = Acquisition::max_variance;
    } else if (a == "random") {
      c.acquisition = Acquisition::random;
    } else {
      bad_field("acquisition", "must be \"max_variance\" or \"random\"");
    }
  }
  if (j.contains("stopping")) {
    const auto& s = j.at("stopping");
    if (!s.is_object()) bad_field("stopping", "must be a JSON object");
    reject_unknown(s, {"max_simulator_calls", "max_iterations", "rmse_threshold"}, "stopping.");
    if (s.contains("max_simulator_calls")) {
      c.stopping.max_simulator_calls = static_cast<std::size_t>(
          get_unsigned(s.at("max_simulator_calls"), "stopping.max_simulator_calls"));
    }
    if (s.contains("max_iterations")) {
      c.stopping.max_iterations = static_cast<std::size_t>(
          get_unsigned(s.at("max_iterations"), "stopping.max_iterations"));
    }
    if (s.contains("rmse_threshold")) {
      c.stopping.rmse_threshold = get_real(s.at("rmse_threshold"), "stopping.rmse_threshold");
    }
  }
  if (j.contains("holdout_size")) {
    c.holdout_size = static_cast<std::size_t>(get_unsigned(j.at("holdout_size"), "holdout_size"));
  } else if (c.stopping.rmse_threshold) {
    c.holdout_size = 50;
  }
  if (j.contains("noise_variance") && !j.at("noise_variance").is_null()) {
    c.noise_variance = get_real(j.at("noise_variance"), "noise_variance");
  }
  c.validate();
  return c;
}

json CampaignConfig::to_json() const {
  json stop = json::object();
  if (stopping.max_simulator_calls) stop["max_simulator_calls"] = *stopping.max_simulator_calls;
  if (stopping.max_iterations) stop["max_iterations"] = *stopping.max_iterations;
  if (stopping.rmse_threshold) stop["rmse_threshold"] = *stopping.rmse_threshold;
  json j = {{"initial_design_size", initial_design_size},
            {"candidate_pool_size", candidate_pool_size},
            {"batch_size", batch_size},
            {"acquisition", proxsim::to_string(acquisition)},
            {"stopping", stop},
            {"holdout_size", holdout_size},
            {"seed", seed},
            {"optimize_hyperparameters_every", optimize_hyperparameters_every},
            {"restarts", restarts}};
  if (noise_variance) j["noise_variance"] = *noise_variance;
  return j;
}

// ---------------------------------------------------------------- summary

namespace {

json thetas_json(const Domain& d, const HyperparameterRecord& h) {
  json out = json::array();
  for (std::size_t k = 0; k < h.thetas.size(); ++k) {
    json t = hyperparameters_to_json(h.thetas[k]);
    t["output"] = d.outputs()[k].name;
    out.push_back(std::move(t));
  }
  return out;
}

json metrics_record_json(const Domain& d, const MetricsRecord& m) {
  return {{"iteration", m.iteration},
          {"simulator_calls", m.simulator_calls},
          {"metrics", metrics_to_json(m.metrics, d)}};
}

// Best holdout RMSE over the last five records has not improved on the
// earlier best by at least 1%.
bool plateaued(const std::vector<MetricsRecord>& h, std::size_t end) {
  constexpr std::size_t window = 5;
  if (end < window + 1) return false;
  double before = std::numeric_limits<double>::infinity();
  double recent = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < end; ++i) {
    double& best = i + window < end ? before : recent;
    best = std::min(best, h[i].metrics.worst_rmse());
  }
  return recent > 0.99 * before;
}

}  // namespace

json state_summary(const CampaignState& s, std::size_t metrics_tail) {
  const Domain& d = *s.training.domain;
  json hist = json::array();
  const std::size_t n = s.metrics_history.size();
  for (std::size_t i = n > metrics_tail ? n - metrics_tail : 0; i < n; ++i) {
    hist.push_back(metrics_record_json(d, s.metrics_history[i]));
  }
  json j = {{"iteration", s.iteration},
            {"started", s.started},
            {"simulator_calls_used", s.simulator_calls_used},
            {"failed_calls", s.failed_calls},
            {"training_size", s.training.size()},
            {"holdout_size", s.holdout.size()},
            {"has_model", s.model != nullptr},
            {"stop_reason", s.stop_reason ? json(to_string(*s.stop_reason)) : json(nullptr)},
            {"metrics_history", hist},
            {"hyperparameters", s.hyperparameter_history.empty()
                                    ? json(nullptr)
                                    : thetas_json(d, s.hyperparameter_history.back())}};
  return j;
}

// ---------------------------------------------------------------- campaign

Campaign::Campaign(SimulatorPtr simulator, json simulator_ref, CampaignConfig config,
                   std::string journal_path)
    : Campaign(simulator, std::move(simulator_ref), std::move(config), std::move(journal_path),
               CampaignState(simulator->domain())) {
  journal_.open(journal_path_, std::ios::binary | std::ios::trunc);
  if (!journal_) {
    throw Error(Errc::missing_file, "cannot create journal '" + journal_path_ + "'",
                journal_path_);
  }
  write_init(false);
}

Campaign::Campaign(SimulatorPtr simulator, json simulator_ref, CampaignConfig config,
                   std::string journal_path, CampaignState state)
    : simulator_(std::move(simulator)),
      simulator_ref_(std::move(simulator_ref)),
      config_(std::move(config)),
      journal_path_(std::move(journal_path)),
      state_(std::move(state)) {
  config_.validate();
  if (simulator_ref_.is_null()) simulator_ref_ = simulator_->id();
}

void Campaign::write(const json& record) {
  journal_ << record.dump() << '\n';
  journal_.flush();
  if (!journal_) {
    throw Error(Errc::missing_file, "cannot append to journal '" + journal_path_ + "'",
                journal_path_);
  }
}

void Campaign::write_init(bool resumed) {
  write({{"event", "init"},
         {"iteration", state_.iteration},
         {"simulator", simulator_ref_},
         {"domain", domain_to_json(*simulator_->domain())},
         {"config", config_.to_json()},
         {"resumed", resumed}});
}

void Campaign::notify() {
  if (observer_) observer_(state_);
}

void Campaign::simulate(const std::vector<RawPoint>& points, const std::string& role) {
  struct Result {
    std::optional<Outputs> outputs;
    std::string error;
    std::vector<std::string> notes;
  };
  const std::uint64_t first = state_.simulator_calls_used;
  std::vector<Result> results(points.size());
  auto run_one = [&](std::size_t i) {
    Result& r = results[i];
    EvalContext ctx;
    ctx.seed = config_.seed;
    ctx.first_index = first + i;
    ctx.note = [&r](const std::string& msg) { r.notes.push_back(msg); };
    try {
      r.outputs = simulator_->evaluate({points[i]}, ctx).front();
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  };
  // Points run concurrently in chunks; results are journaled in input order.
  const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t lo = 0; lo < points.size(); lo += width) {
    const std::size_t hi = std::min(points.size(), lo + width);
    if (hi - lo == 1) {
      run_one(lo);
      continue;
    }
    std::vector<std::future<void>> jobs;
    for (std::size_t i = lo; i < hi; ++i) jobs.push_back(std::async(std::launch::async, run_one, i));
    for (auto& f : jobs) f.get();
  }

  const Domain& d = *simulator_->domain();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Result& r = results[i];
    for (const auto& note : r.notes) {
      write({{"event", "warning"},
             {"iteration", state_.iteration},
             {"kind", "clamp"},
             {"call", first + i},
             {"message", note}});
    }
    json rec = {{"event", "simulate"},
                {"iteration", state_.iteration},
                {"call", first + i},
                {"role", role},
                {"inputs", raw_point_to_json(points[i])}};
    ++state_.simulator_calls_used;
    if (!r.outputs || std::any_of(r.outputs->begin(), r.outputs->end(),
                                  [](double v) { return !std::isfinite(v); })) {
      rec["error"] = r.outputs ? "simulator returned a non-finite output" : r.error;
      ++state_.failed_calls;
      write(rec);
      continue;
    }
    json out = json::object();
    Eigen::MatrixXd y(1, static_cast<Eigen::Index>(d.output_count()));
    for (std::size_t k = 0; k < d.output_count(); ++k) {
      out[d.outputs()[k].name] = (*r.outputs)[k];
      y(0, static_cast<Eigen::Index>(k)) = (*r.outputs)[k];
    }
    rec["outputs"] = out;
    write(rec);
    const Eigen::MatrixXd x = d.encode(points[i]).transpose();
    TrainingSet& target = role == "holdout" ? state_.holdout : state_.training;
    target = append_labeled(target, x, y);
  }
}

void Campaign::fit(bool optimize) {
  const Domain& d = *simulator_->domain();
  if (state_.training.empty()) {
    throw Error(Errc::simulator_failure, "no successful simulations to fit a model to");
  }
  std::vector<GPHyperparameters> thetas;
  if (state_.hyperparameter_history.empty()) {
    for (std::size_t k = 0; k < d.output_count(); ++k) {
      thetas.push_back(default_hyperparameters(state_.training, k));
    }
  } else {
    thetas = state_.hyperparameter_history.back().thetas;
  }
  if (config_.noise_variance) {
    for (auto& t : thetas) t.noise_variance = *config_.noise_variance;
  }
  GPFitOptions opts;
  opts.optimize = optimize;
  opts.fix_noise = config_.noise_variance.has_value();
  opts.restarts = static_cast<int>(config_.restarts);
  opts.seed = derive_seed(config_.seed, Stream::hyperparameters, state_.iteration);
  opts.check_duplicates = config_.noise_variance.has_value();
  auto model = std::make_shared<const GPModel>(fit_gp(state_.training, thetas, opts));

  HyperparameterRecord h{state_.iteration, {}, {}};
  for (const auto& o : model->outputs()) {
    h.thetas.push_back(o.theta);
    h.lml.push_back(o.lml);
  }
  write({{"event", "fit"},
         {"iteration", state_.iteration},
         {"training_size", state_.training.size()},
         {"optimized", optimize},
         {"hyperparameters", thetas_json(d, h)},
         {"lml", h.lml}});
  state_.hyperparameter_history.push_back(std::move(h));
  state_.model = std::move(model);

  if (state_.holdout.empty()) return;
  MetricsRecord m{state_.iteration, state_.simulator_calls_used,
                  evaluate(*state_.model, state_.holdout)};
  write({{"event", "metrics"},
         {"iteration", m.iteration},
         {"simulator_calls", m.simulator_calls},
         {"metrics", metrics_to_json(m.metrics, d)}});
  state_.metrics_history.push_back(std::move(m));
  const auto& hist = state_.metrics_history;
  if (plateaued(hist, hist.size()) && !plateaued(hist, hist.size() - 1)) {
    write({{"event", "warning"},
           {"iteration", state_.iteration},
           {"kind", "plateau"},
           {"message", "best holdout RMSE improved by less than 1% over the last 5 iterations"}});
  }
}

void Campaign::step_zero() {
  const Domain& d = *simulator_->domain();
  const std::size_t h = config_.holdout_size;
  const std::size_t n = config_.initial_design_size;
  std::vector<RawPoint> holdout;
  std::vector<RawPoint> design;
  if (h > 0) {
    const Eigen::MatrixXd X = latin_hypercube(d, h, derive_seed(config_.seed, Stream::holdout));
    for (Eigen::Index i = 0; i < X.rows(); ++i) holdout.push_back(d.decode(X.row(i).transpose()));
  }
  const Eigen::MatrixXd X = initial_design(d, n, config_.seed);
  for (Eigen::Index i = 0; i < X.rows(); ++i) design.push_back(d.decode(X.row(i).transpose()));

  // A replayed journal may already hold some of these calls.
  const std::size_t done = state_.simulator_calls_used;
  if (done < h) {
    simulate(std::vector<RawPoint>(holdout.begin() + static_cast<std::ptrdiff_t>(done),
                                   holdout.end()),
             "holdout");
  }
  const std::size_t skip = std::max(done, h) - h;
  if (skip < n) {
    simulate(std::vector<RawPoint>(design.begin() + static_cast<std::ptrdiff_t>(skip),
                                   design.end()),
             "design");
  }
  fit(true);
  state_.started = true;
}

void Campaign::iterate() {
  ++state_.iteration;
  const Domain& d = *simulator_->domain();
  std::size_t k = config_.batch_size;
  if (config_.stopping.max_simulator_calls) {
    k = std::min(k, *config_.stopping.max_simulator_calls - state_.simulator_calls_used);
  }
  const PredictionSet pool = candidate_pool(simulator_->domain(), config_.candidate_pool_size,
                                            config_.seed, state_.iteration, &state_.training.X);
  if (pool.X.rows() == 0) {
    throw Error(Errc::empty_pool, "every candidate point has already been simulated");
  }
  k = std::min(k, static_cast<std::size_t>(pool.X.rows()));
  const Selection sel =
      acquire(*state_.model, pool, config_.acquisition, k,
              derive_seed(config_.seed, Stream::acquire, state_.iteration));

  json selected = json::array();
  for (std::size_t i = 0; i < sel.indices.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(sel.indices[i]);
    selected.push_back({{"pool_index", sel.indices[i]},
                        {"score", sel.scores[i]},
                        {"inputs", raw_point_to_json(d.decode(pool.X.row(row).transpose()))}});
  }
  write({{"event", "acquire"},
         {"iteration", state_.iteration},
         {"criterion", to_string(config_.acquisition)},
         {"pool_size", pool.X.rows()},
         {"selected", selected}});

  std::vector<std::size_t> order = sel.indices;
  std::sort(order.begin(), order.end());
  std::vector<RawPoint> points;
  for (std::size_t idx : order) {
    points.push_back(d.decode(pool.X.row(static_cast<Eigen::Index>(idx)).transpose()));
  }
  simulate(points, "acquired");
  fit(state_.iteration % config_.optimize_hyperparameters_every == 0);
}

bool Campaign::check_stop() {
  if (stopped()) return true;
  const auto& s = config_.stopping;
  std::optional<StopReason> reason;
  if (s.rmse_threshold && !state_.metrics_history.empty() &&
      state_.metrics_history.back().iteration == state_.iteration &&
      state_.metrics_history.back().metrics.worst_rmse() <= *s.rmse_threshold) {
    reason = StopReason::rmse_met;
  } else if (s.max_iterations && state_.iteration >= *s.max_iterations) {
    reason = StopReason::iterations_reached;
  } else if (s.max_simulator_calls && state_.simulator_calls_used >= *s.max_simulator_calls) {
    reason = StopReason::budget_exhausted;
  }
  if (!reason) return false;
  state_.stop_reason = reason;
  write({{"event", "stop"},
         {"iteration", state_.iteration},
         {"reason", to_string(*reason)},
         {"simulator_calls", state_.simulator_calls_used}});
  notify();
  return true;
}

std::size_t Campaign::advance(std::size_t iterations) {
  if (stopped()) return 0;
  if (!state_.started) {
    step_zero();
    notify();
    if (check_stop()) return 0;
  } else if (!pending_.empty()) {
    const auto points = std::move(pending_);
    pending_.clear();
    simulate(points, "acquired");
    fit(state_.iteration % config_.optimize_hyperparameters_every == 0);
    notify();
    if (check_stop()) return 0;
  } else if (check_stop()) {
    return 0;
  }
  std::size_t done = 0;
  while (done < iterations) {
    iterate();
    ++done;
    notify();
    if (check_stop()) break;
  }
  return done;
}

void Campaign::run() {
  while (!stopped()) advance(std::numeric_limits<std::size_t>::max());
}

void Campaign::extend(const ExtraBudget& extra) {
  if (extra.empty()) return;
  auto& s = config_.stopping;
  if (extra.simulator_calls > 0) {
    s.max_simulator_calls =
        s.max_simulator_calls.value_or(state_.simulator_calls_used) + extra.simulator_calls;
  }
  if (extra.iterations > 0) {
    s.max_iterations = s.max_iterations.value_or(state_.iteration) + extra.iterations;
  }
  state_.stop_reason.reset();
  write_init(true);
}

void Campaign::stop() {
  if (stopped()) return;
  state_.stop_reason = StopReason::manual;
  write({{"event", "stop"},
         {"iteration", state_.iteration},
         {"reason", to_string(StopReason::manual)},
         {"simulator_calls", state_.simulator_calls_used}});
  notify();
}

// ---------------------------------------------------------------- replay

Campaign Campaign::open(const std::string& journal_path, const SimulatorRegistry& registry) {
  std::ifstream in(journal_path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open journal '" + journal_path + "'", journal_path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.empty()) throw Error(Errc::corrupt_journal, "journal is empty");
  if (text.back() != '\n') {
    throw Error(Errc::corrupt_journal, "journal ends mid-record (truncated file?)");
  }

  std::vector<json> records;
  std::size_t line = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t nl = text.find('\n', pos);
    ++line;
    json rec = json::parse(text.begin() + static_cast<std::ptrdiff_t>(pos),
                           text.begin() + static_cast<std::ptrdiff_t>(nl), nullptr, false);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("event") ||
        !rec["event"].is_string() || !rec.contains("iteration") ||
        !rec["iteration"].is_number_unsigned()) {
      throw Error(Errc::corrupt_journal, "line " + std::to_string(line) + " is not a journal record",
                  {}, line);
    }
    records.push_back(std::move(rec));
    pos = nl + 1;
  }
  if (records.front()["event"] != "init") {
    throw Error(Errc::corrupt_journal, "journal does not start with an init record");
  }

  const json& init = records.front();
  CampaignConfig config;
  SimulatorPtr sim;
  DomainPtr domain;
  try {
    config = CampaignConfig::from_json(init.at("config"));
    domain = domain_from_json(init.at("domain"));
    sim = resolve_simulator(init.at("simulator"), registry);
  } catch (const json::exception& e) {
    throw Error(Errc::corrupt_journal, std::string("init record: ") + e.what(), {}, 1);
  } catch (const Error& e) {
    if (e.code() == Errc::unknown_simulator) throw;
    throw Error(Errc::corrupt_journal, std::string("init record: ") + e.what(), {}, 1);
  }
  if (!(*sim->domain() == *domain)) {
    throw Error(Errc::domain_mismatch,
                "simulator '" + sim->id() + "' no longer matches the journaled domain");
  }

  CampaignState st(sim->domain());
  std::vector<RawPoint> pending;
  std::size_t pending_done = 0;
  const Domain& d = *sim->domain();
  try {
    for (std::size_t i = 0; i < records.size(); ++i) {
      const json& r = records[i];
      const std::string ev = r["event"].get<std::string>();
      const auto it = r["iteration"].get<std::size_t>();
      auto corrupt = [&](const std::string& why) -> Error {
        return Error(Errc::corrupt_journal, "line " + std::to_string(i + 1) + ": " + why, {}, i + 1);
      };
      if (it < st.iteration) throw corrupt("iteration goes backwards");
      if (ev == "init") {
        if (i > 0) {
          if (r.at("simulator") != init.at("simulator") || r.at("domain") != init.at("domain")) {
            throw corrupt("resumed init names a different simulator or domain");
          }
          config = CampaignConfig::from_json(r.at("config"));
          st.stop_reason.reset();
        }
      } else if (ev == "simulate") {
        if (r.at("call").get<std::size_t>() != st.simulator_calls_used) {
          throw corrupt("simulator call numbers are not consecutive");
        }
        ++st.simulator_calls_used;
        const std::string role = r.at("role").get<std::string>();
        if (role == "acquired") ++pending_done;
        if (!r.contains("outputs")) {
          ++st.failed_calls;
          continue;
        }
        const Eigen::MatrixXd x = d.encode(raw_point_from_json(r.at("inputs"))).transpose();
        Eigen::MatrixXd y(1, static_cast<Eigen::Index>(d.output_count()));
        for (std::size_t k = 0; k < d.output_count(); ++k) {
          y(0, static_cast<Eigen::Index>(k)) = r.at("outputs").at(d.outputs()[k].name).get<double>();
        }
        TrainingSet& target = role == "holdout" ? st.holdout : st.training;
        target = append_labeled(target, x, y);
      } else if (ev == "acquire") {
        st.iteration = it;
        std::vector<std::pair<std::size_t, RawPoint>> picks;
        for (const auto& s : r.at("selected")) {
          picks.emplace_back(s.at("pool_index").get<std::size_t>(),
                             raw_point_from_json(s.at("inputs")));
        }
        std::sort(picks.begin(), picks.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        pending.clear();
        pending_done = 0;
        for (auto& p : picks) pending.push_back(std::move(p.second));
      } else if (ev == "fit") {
        st.iteration = it;
        st.started = true;
        HyperparameterRecord h{it, {}, r.at("lml").get<std::vector<double>>()};
        for (const auto& t : r.at("hyperparameters")) h.thetas.push_back(hyperparameters_from_json(t));
        if (h.thetas.size() != d.output_count()) throw corrupt("wrong number of hyperparameter sets");
        st.hyperparameter_history.push_back(std::move(h));
        pending.clear();
      } else if (ev == "metrics") {
        st.metrics_history.push_back(
            {it, r.at("simulator_calls").get<std::size_t>(), metrics_from_json(r.at("metrics"), d)});
      } else if (ev == "stop") {
        const auto reason = stop_reason_from_string(r.at("reason").get<std::string>());
        if (!reason) throw corrupt("unknown stop reason");
        st.stop_reason = reason;
      } else if (ev != "warning") {
        throw corrupt("unknown event '" + ev + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::corrupt_journal, std::string("malformed record: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::corrupt_journal) throw;
    throw Error(Errc::corrupt_journal, std::string("inconsistent record: ") + e.what());
  }

  if (!st.hyperparameter_history.empty()) {
    GPFitOptions o;
    o.optimize = false;
    o.check_duplicates = false;
    st.model = std::make_shared<const GPModel>(
        fit_gp(st.training, st.hyperparameter_history.back().thetas, o));
  }

  Campaign c(sim, init.at("simulator"), std::move(config), journal_path, std::move(st));
  if (pending_done < pending.size()) {
    c.pending_.assign(pending.begin() + static_cast<std::ptrdiff_t>(pending_done), pending.end());
  }
  c.journal_.open(journal_path, std::ios::binary | std::ios::app);
  if (!c.journal_) {
    throw Error(Errc::missing_file, "cannot append to journal '" + journal_path + "'", journal_path);
  }
  return c;
}

CampaignState run_campaign(SimulatorPtr simulator, const Domain& domain,
                           const CampaignConfig& config, const std::string& journal_path,
                           const json& simulator_ref) {
  if (!(*simulator->domain() == domain)) {
    throw Error(Errc::domain_mismatch, "domain does not match simulator '" + simulator->id() + "'");
  }
  Campaign c(std::move(simulator), simulator_ref, config, journal_path);
  c.run();
  return c.state();
}

CampaignState resume_campaign(const std::string& journal_path, const SimulatorRegistry& registry,
                              const ExtraBudget& extra) {
  Campaign c = Campaign::open(journal_path, registry);
  if (extra.empty()) return c.state();
  c.extend(extra);
  c.run();
  return c.state();
}

}  // namespace proxsim
