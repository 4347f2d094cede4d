#include "proxsim/simulator.hpp"

#include "proxsim/error.hpp"
#include "proxsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace proxsim {

Simulator::Simulator(std::string id, DomainPtr domain, bool deterministic,
                     double cost_hint)
    : id_(std::move(id)),
      domain_(std::move(domain)),
      deterministic_(deterministic),
      cost_hint_(cost_hint) {}

std::vector<Outputs> Simulator::evaluate(const std::vector<RawPoint>& points,
                                         const EvalContext& ctx) const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      domain_->encode(points[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "point " + std::to_string(i) + ": " + e.message(),
                  e.variable(), i);
    }
  }
  auto out = evaluate_batch(points, ctx);
  if (out.size() != points.size()) {
    throw Error(Errc::simulator_failure,
                id_ + " returned " + std::to_string(out.size()) + " rows for " +
                    std::to_string(points.size()) + " points");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].size() != domain_->output_count()) {
      throw Error(Errc::simulator_failure,
                  id_ + " returned a malformed output row", {}, i);
    }
  }
  return out;
}

std::vector<Outputs> Simulator::evaluate_batch(const std::vector<RawPoint>& points,
                                               const EvalContext& ctx) const {
  std::vector<Outputs> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      out.push_back(evaluate_point(points[i], ctx.first_index + i, ctx));
    } catch (const Error& e) {
      if (e.code() == Errc::simulator_failure) {
        throw Error(Errc::simulator_failure, e.what(), e.variable(), i);
      }
      throw;
    } catch (const std::exception& e) {
      throw Error(Errc::simulator_failure, id_ + ": " + e.what(), {}, i);
    }
  }
  return out;
}

std::vector<Outputs> simulate(const Simulator& sim, const std::vector<RawPoint>& points,
                              const EvalContext& ctx) {
  return sim.evaluate(points, ctx);
}

double number(const RawPoint& p, const std::string& name) {
  const auto it = p.find(name);
  if (it == p.end()) {
    throw Error(Errc::missing_variable, "input '" + name + "' missing", name);
  }
  const auto* d = std::get_if<double>(&it->second);
  if (d == nullptr) {
    throw Error(Errc::out_of_domain, "'" + name + "' must be numeric", name);
  }
  return *d;
}

FunctionSimulator::FunctionSimulator(std::string id, DomainPtr domain, Fn fn,
                                     double cost_hint)
    : Simulator(std::move(id), std::move(domain), true, cost_hint), fn_(std::move(fn)) {}

Outputs FunctionSimulator::evaluate_point(const RawPoint& point, std::uint64_t,
                                          const EvalContext&) const {
  return fn_(point);
}

namespace {

DomainPtr atm_domain() {
  return std::make_shared<const Domain>(
      std::vector<VariableSpec>{VariableSpec::continuous("demand", 10, 100, "flights/h"),
                                VariableSpec::continuous("capacity", 20, 60, "movements/h")},
      std::vector<VariableSpec>{VariableSpec::output("avg_delay", "min"),
                                VariableSpec::output("throughput", "movements/h")});
}

DomainPtr branin_domain() {
  return std::make_shared<const Domain>(
      std::vector<VariableSpec>{VariableSpec::continuous("x1", -5, 10),
                                VariableSpec::continuous("x2", 0, 15)},
      std::vector<VariableSpec>{VariableSpec::output("f")});
}

}  // namespace

AtmSlotOverload::AtmSlotOverload(double noise_sd)
    : Simulator(kId, atm_domain(), noise_sd == 0.0, 0.0), noise_sd_(noise_sd) {
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw Error(Errc::invalid_config, "noise_sd must be a finite non-negative number");
  }
}

double AtmSlotOverload::avg_delay(double demand, double capacity) {
  const double excess = std::max(0.0, demand - capacity);
  return 60.0 * excess * excess / (2.0 * capacity * demand);
}

double AtmSlotOverload::throughput(double demand, double capacity) {
  return std::min(demand, capacity);
}

Outputs AtmSlotOverload::evaluate_point(const RawPoint& point, std::uint64_t index,
                                        const EvalContext& ctx) const {
  const double d = number(point, "demand");
  const double c = number(point, "capacity");
  double delay = avg_delay(d, c);
  if (noise_sd_ > 0.0) {
    Rng rng(derive_seed(ctx.seed, Stream::simulator_noise, index));
    delay += noise_sd_ * rng.normal();
  }
  return {delay, throughput(d, c)};
}

Branin::Branin() : Simulator(kId, branin_domain(), true, 0.0) {}

double Branin::value(double x1, double x2) {
  constexpr double pi = std::numbers::pi;
  constexpr double a = 1.0;
  constexpr double b = 5.1 / (4.0 * pi * pi);
  constexpr double c = 5.0 / pi;
  constexpr double r = 6.0;
  constexpr double s = 10.0;
  constexpr double t = 1.0 / (8.0 * pi);
  const double q = x2 - b * x1 * x1 + c * x1 - r;
  return a * q * q + s * (1.0 - t) * std::cos(x1) + s;
}

Outputs Branin::evaluate_point(const RawPoint& point, std::uint64_t,
                               const EvalContext&) const {
  return {value(number(point, "x1"), number(point, "x2"))};
}

}  // namespace proxsim
