#pragma once

#include "proxsim/acquisition.hpp"
#include "proxsim/gp.hpp"
#include "proxsim/metrics.hpp"
#include "proxsim/registry.hpp"
#include "proxsim/simulator.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace proxsim {

enum class StopReason { budget_exhausted, iterations_reached, rmse_met, manual };

const char* to_string(StopReason r) noexcept;
std::optional<StopReason> stop_reason_from_string(const std::string& s);

struct StoppingRules {
  std::optional<std::size_t> max_simulator_calls;
  std::optional<std::size_t> max_iterations;
  std::optional<double> rmse_threshold;  // on the worst per-output holdout RMSE
};

struct CampaignConfig {
  std::size_t initial_design_size = 10;
  std::size_t candidate_pool_size = 1000;
  std::size_t batch_size = 1;
  Acquisition acquisition = Acquisition::max_variance;
  StoppingRules stopping;
  // Seeded LHS holdout simulated once up front and charged to the budget.
  // from_json() defaults it to 50 when an rmse_threshold is given.
  std::size_t holdout_size = 0;
  std::uint64_t seed = 0;
  std::size_t optimize_hyperparameters_every = 1;
  std::size_t restarts = 5;
  std::optional<double> noise_variance;  // pins sn2 on every output

  /// Throws Errc::invalid_config naming the offending field.
  void validate() const;

  /// Strict parse shared by the CLI and the service: unknown keys, wrong
  /// types and invariant violations all raise Errc::invalid_config with the
  /// dotted field name as Error::variable().
  static CampaignConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct MetricsRecord {
  std::size_t iteration = 0;
  std::size_t simulator_calls = 0;
  Metrics metrics;
};

struct HyperparameterRecord {
  std::size_t iteration = 0;
  std::vector<GPHyperparameters> thetas;  // one per output
  std::vector<double> lml;
};

struct CampaignState {
  explicit CampaignState(DomainPtr domain) : training(domain), holdout(domain) {}

  std::size_t iteration = 0;
  bool started = false;  // step 0 (design, simulate, first fit) done
  TrainingSet training;
  TrainingSet holdout;
  std::size_t simulator_calls_used = 0;
  std::size_t failed_calls = 0;
  std::vector<MetricsRecord> metrics_history;
  std::vector<HyperparameterRecord> hyperparameter_history;
  std::shared_ptr<const GPModel> model;
  std::optional<StopReason> stop_reason;
};

/// Compact JSON view: counters, stop reason, latest hyperparameters and the
/// last `metrics_tail` metrics records.
nlohmann::json state_summary(const CampaignState& s, std::size_t metrics_tail = 5);

struct ExtraBudget {
  std::size_t simulator_calls = 0;
  std::size_t iterations = 0;
  bool empty() const noexcept { return simulator_calls == 0 && iterations == 0; }
};

/// The active-learning loop, journaled to a JSON-Lines file.
///
/// Step 0 simulates the holdout and the initial design, then fits. Each
/// iteration draws a fresh candidate pool, acquires a batch with the current
/// model, simulates it, refits and scores. Stopping rules are checked after
/// step 0 and after every iteration in the order rmse_met,
/// iterations_reached, budget_exhausted.
///
/// Not thread-safe; one writer per campaign.
class Campaign {
 public:
  using Observer = std::function<void(const CampaignState&)>;

  /// Creates (truncating) the journal and writes the init record.
  /// `simulator_ref` is what open() will resolve against a registry.
  Campaign(SimulatorPtr simulator, nlohmann::json simulator_ref, CampaignConfig config,
           std::string journal_path);

  /// Replays a journal. Throws CorruptJournal, or DomainMismatch when the
  /// resolved simulator no longer has the journaled domain.
  static Campaign open(const std::string& journal_path, const SimulatorRegistry& registry);

  Campaign(Campaign&&) = default;
  Campaign& operator=(Campaign&&) = default;

  const CampaignConfig& config() const noexcept { return config_; }
  const CampaignState& state() const noexcept { return state_; }
  const SimulatorPtr& simulator() const noexcept { return simulator_; }
  const nlohmann::json& simulator_ref() const noexcept { return simulator_ref_; }
  const std::string& journal_path() const noexcept { return journal_path_; }
  bool stopped() const noexcept { return state_.stop_reason.has_value(); }

  /// Completes step 0 if needed, then runs up to `iterations` iterations.
  /// Returns the number of iterations run; does nothing once stopped.
  std::size_t advance(std::size_t iterations);

  /// Runs until a stopping rule fires. Requires at least one rule that can
  /// fire (always true for a validated config).
  void run();

  /// Raises the limits by `extra` (relative to the current limits, or to the
  /// current counters where no limit was set), clears the stop reason and
  /// appends a resumed init record. No-op when `extra` is empty.
  void extend(const ExtraBudget& extra);

  /// Records a manual stop.
  void stop();

  /// Called after step 0 and after every iteration.
  void set_observer(Observer observer) { observer_ = std::move(observer); }

 private:
  Campaign(SimulatorPtr simulator, nlohmann::json simulator_ref, CampaignConfig config,
           std::string journal_path, CampaignState state);

  void write(const nlohmann::json& record);
  void write_init(bool resumed);
  void step_zero();
  void iterate();
  void simulate(const std::vector<RawPoint>& points, const std::string& role);
  void fit(bool optimize);
  bool check_stop();
  void notify();

  SimulatorPtr simulator_;
  nlohmann::json simulator_ref_;
  CampaignConfig config_;
  std::string journal_path_;
  std::ofstream journal_;
  CampaignState state_;
  // Acquired points of an iteration whose journal ends before its fit.
  std::vector<RawPoint> pending_;
  Observer observer_;
};

/// Runs a fresh campaign to completion. Throws DomainMismatch when `domain`
/// differs from the simulator's.
CampaignState run_campaign(SimulatorPtr simulator, const Domain& domain,
                           const CampaignConfig& config, const std::string& journal_path,
                           const nlohmann::json& simulator_ref = nullptr);

/// Reopens a journal and, if `extra` is non-empty, continues the campaign
/// under the raised limits, appending to the same journal.
CampaignState resume_campaign(const std::string& journal_path, const SimulatorRegistry& registry,
                              const ExtraBudget& extra = {});

}  // namespace proxsim
