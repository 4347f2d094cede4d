#include "proxsim/registry.hpp"

#include "proxsim/error.hpp"
#include "proxsim/subprocess_simulator.hpp"

#include <mutex>

namespace proxsim {

using nlohmann::json;

SimulatorRegistry SimulatorRegistry::with_builtins() {
  SimulatorRegistry r;
  r.add_factory(AtmSlotOverload::kId, [](const json& options) {
    double sd = 0.0;
    if (options.contains("noise_sd")) {
      if (!options["noise_sd"].is_number()) {
        throw Error(Errc::invalid_config, "options.noise_sd must be a number", "noise_sd");
      }
      sd = options["noise_sd"].get<double>();
    }
    return std::make_shared<const AtmSlotOverload>(sd);
  });
  r.add(std::make_shared<const Branin>());
  return r;
}

SimulatorRegistry::SimulatorRegistry(const SimulatorRegistry& other) {
  std::shared_lock lock(other.mutex_);
  factories_ = other.factories_;
}

SimulatorRegistry& SimulatorRegistry::operator=(const SimulatorRegistry& other) {
  if (this != &other) {
    std::scoped_lock lock(mutex_);
    std::shared_lock other_lock(other.mutex_);
    factories_ = other.factories_;
  }
  return *this;
}

void SimulatorRegistry::add(SimulatorPtr sim) {
  const std::string id = sim->id();
  add_factory(id, [sim = std::move(sim)](const json&) { return sim; });
}

void SimulatorRegistry::add_factory(const std::string& id, Factory factory) {
  std::scoped_lock lock(mutex_);
  factories_[id] = std::move(factory);
}

bool SimulatorRegistry::contains(const std::string& id) const {
  std::shared_lock lock(mutex_);
  return factories_.count(id) != 0;
}

SimulatorPtr SimulatorRegistry::create(const std::string& id, const json& options) const {
  Factory f;
  {
    std::shared_lock lock(mutex_);
    const auto it = factories_.find(id);
    if (it == factories_.end()) {
      throw Error(Errc::unknown_simulator, "no simulator named '" + id + "'", id);
    }
    f = it->second;
  }
  return f(options.is_null() ? json::object() : options);
}

std::vector<std::string> SimulatorRegistry::ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : factories_) out.push_back(id);
  return out;
}

SimulatorPtr resolve_simulator(const json& spec, const SimulatorRegistry& registry) {
  if (spec.is_string()) return registry.create(spec.get<std::string>());
  if (!spec.is_object()) {
    throw Error(Errc::invalid_config, "simulator must be an id or an object", "simulator");
  }
  if (spec.contains("command")) {
    if (!spec["command"].is_string() || !spec.contains("domain")) {
      throw Error(Errc::invalid_config,
                  "external simulator needs a string 'command' and a 'domain'", "simulator");
    }
    return std::make_shared<const SubprocessSimulator>(
        spec.value("id", std::string("external")), domain_from_json(spec["domain"]),
        spec["command"].get<std::string>(), spec.value("deterministic", true),
        spec.value("cost_hint", 1.0));
  }
  if (!spec.contains("id") || !spec["id"].is_string()) {
    throw Error(Errc::invalid_config, "simulator needs a string 'id'", "simulator.id");
  }
  return registry.create(spec["id"].get<std::string>(),
                         spec.value("options", json::object()));
}

json describe(const Simulator& sim) {
  return {{"id", sim.id()},
          {"domain", domain_to_json(*sim.domain())},
          {"deterministic", sim.deterministic()},
          {"cost_hint", sim.cost_hint()}};
}

}  // namespace proxsim
