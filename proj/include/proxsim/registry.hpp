#pragma once

#include "proxsim/simulator.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <shared_mutex>
#include <string>
#include <vector>

namespace proxsim {

/// Named simulators. Each entry is a factory taking a JSON options object
/// (e.g. {"noise_sd": 0.5} for the ATM model); plain instances ignore
/// options. Thread-safe.
class SimulatorRegistry {
 public:
  using Factory = std::function<SimulatorPtr(const nlohmann::json& options)>;

  /// Registry holding atm_slot_overload and branin.
  static SimulatorRegistry with_builtins();

  SimulatorRegistry() = default;
  SimulatorRegistry(const SimulatorRegistry& other);
  SimulatorRegistry& operator=(const SimulatorRegistry& other);

  void add(SimulatorPtr sim);
  void add_factory(const std::string& id, Factory factory);

  bool contains(const std::string& id) const;

  /// Throws Errc::unknown_simulator.
  SimulatorPtr create(const std::string& id,
                      const nlohmann::json& options = nlohmann::json::object()) const;

  /// Sorted by id.
  std::vector<std::string> ids() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, Factory> factories_;
};

/// Resolves a simulator reference: either {"id": ..., "options": {...}}
/// against `registry`, or an external process
/// {"command": ..., "domain": {...}, "deterministic": bool}.
SimulatorPtr resolve_simulator(const nlohmann::json& spec, const SimulatorRegistry& registry);

nlohmann::json describe(const Simulator& sim);

}  // namespace proxsim
