#pragma once

#include "proxsim/simulator.hpp"

#include <string>

namespace proxsim {

/// Adapter for an external simulator process. Each batch runs `command`
/// through the shell once; stdin receives a CSV header of input names plus
/// one row per point, stdout must return a CSV header naming every output
/// KPI plus one row per point in the same order. A nonzero exit status, a
/// missing column or a row-count mismatch is a SimulatorFailure.
class SubprocessSimulator : public Simulator {
 public:
  SubprocessSimulator(std::string id, DomainPtr domain, std::string command,
                      bool deterministic = true, double cost_hint = 1.0);

  const std::string& command() const noexcept { return command_; }

 protected:
  std::vector<Outputs> evaluate_batch(const std::vector<RawPoint>& points,
                                      const EvalContext& ctx) const override;
  Outputs evaluate_point(const RawPoint& point, std::uint64_t index,
                         const EvalContext& ctx) const override;

 private:
  std::string command_;
};

}  // namespace proxsim
