#pragma once

#include "proxsim/domain.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace proxsim {

using Outputs = std::vector<double>;

/// Per-call context. Stochastic simulators seed point `i` of a batch from
/// (seed, first_index + i) so results do not depend on batching or on
/// scheduling. `note` receives human-readable side events (e.g. clamps).
struct EvalContext {
  std::uint64_t seed = 0;
  std::uint64_t first_index = 0;
  std::function<void(const std::string&)> note;
};

/// Black-box simulator: maps raw input points to KPI vectors, one per point,
/// in order. Implementations must tolerate concurrent evaluate() calls on
/// disjoint batches.
class Simulator {
 public:
  Simulator(std::string id, DomainPtr domain, bool deterministic, double cost_hint);
  virtual ~Simulator() = default;

  const std::string& id() const noexcept { return id_; }
  const DomainPtr& domain() const noexcept { return domain_; }
  bool deterministic() const noexcept { return deterministic_; }
  double cost_hint() const noexcept { return cost_hint_; }

  /// Validates every point against the domain (OutOfDomain / UnknownLevel /
  /// ... carrying the point index), then evaluates. Failures inside the
  /// model surface as Errc::simulator_failure with the point index.
  std::vector<Outputs> evaluate(const std::vector<RawPoint>& points,
                                const EvalContext& ctx = {}) const;

 protected:
  /// Batch hook; the default calls evaluate_point for each point in order.
  virtual std::vector<Outputs> evaluate_batch(const std::vector<RawPoint>& points,
                                              const EvalContext& ctx) const;
  virtual Outputs evaluate_point(const RawPoint& point, std::uint64_t index,
                                 const EvalContext& ctx) const = 0;

 private:
  std::string id_;
  DomainPtr domain_;
  bool deterministic_;
  double cost_hint_;
};

using SimulatorPtr = std::shared_ptr<const Simulator>;

std::vector<Outputs> simulate(const Simulator& sim, const std::vector<RawPoint>& points,
                              const EvalContext& ctx = {});

/// Numeric value of `name` in `p` (throws OutOfDomain if it is a label).
double number(const RawPoint& p, const std::string& name);

/// Wraps a closure. Handy for fixtures and for quick adapters.
class FunctionSimulator : public Simulator {
 public:
  using Fn = std::function<Outputs(const RawPoint&)>;

  FunctionSimulator(std::string id, DomainPtr domain, Fn fn, double cost_hint = 0.0);

 protected:
  Outputs evaluate_point(const RawPoint& point, std::uint64_t index,
                         const EvalContext& ctx) const override;

 private:
  Fn fn_;
};

/// Desk-scale slot-overload model of an airport:
///   avg_delay  = 60 * max(0, d - c)^2 / (2 c d)   [min]
///   throughput = min(d, c)                         [movements/h]
/// over demand d in [10, 100] flights/h and capacity c in [20, 60]
/// movements/h, with optional additive N(0, noise_sd^2) on avg_delay.
class AtmSlotOverload : public Simulator {
 public:
  static constexpr const char* kId = "atm_slot_overload";

  explicit AtmSlotOverload(double noise_sd = 0.0);

  static double avg_delay(double demand, double capacity);
  static double throughput(double demand, double capacity);

  double noise_sd() const noexcept { return noise_sd_; }

 protected:
  Outputs evaluate_point(const RawPoint& point, std::uint64_t index,
                         const EvalContext& ctx) const override;

 private:
  double noise_sd_;
};

/// Branin-Hoo test function on x1 in [-5, 10], x2 in [0, 15].
class Branin : public Simulator {
 public:
  static constexpr const char* kId = "branin";

  Branin();

  static double value(double x1, double x2);

 protected:
  Outputs evaluate_point(const RawPoint& point, std::uint64_t index,
                         const EvalContext& ctx) const override;
};

}  // namespace proxsim
