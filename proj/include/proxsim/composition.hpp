#pragma once

#include "proxsim/simulator.hpp"

#include <string>
#include <vector>

namespace proxsim {

/// Upstream output `from` feeds downstream input `to`.
struct Wire {
  std::string from;
  std::string to;
};

/// Every downstream input is either wired or exposed on the composite, never
/// both. A wired value outside the downstream bounds is a RangeViolation
/// unless `clamp` is set, in which case it is clipped and reported through
/// EvalContext::note.
struct WiringSpec {
  std::vector<Wire> wires;
  std::vector<std::string> exposed;
  bool clamp = false;
  bool reexport_upstream = false;  // append A's outputs after B's
};

/// Serial integration: run A, route its outputs into B, run B. The composite
/// is an ordinary Simulator over A's inputs plus B's exposed inputs.
SimulatorPtr compose_serial(SimulatorPtr a, SimulatorPtr b, WiringSpec wiring,
                            std::string id = {});

enum class Reduction { sum, mean, min, max, weighted_sum, pass };

enum class Side { a, b };

struct OutputRef {
  Side side;
  std::string name;
};

struct CombinedOutput {
  std::string name;
  Reduction reduction = Reduction::pass;
  std::vector<OutputRef> sources;
  std::vector<double> weights;  // weighted_sum only, one per source
  std::string unit;
};

struct CombinerSpec {
  std::vector<CombinedOutput> outputs;
};

/// Parallel integration: A and B run on their projections of a shared input
/// point and the combiner reduces their outputs. Composite inputs are the
/// shared variables (in A's order), then A-only, then B-only inputs.
SimulatorPtr compose_parallel(SimulatorPtr a, SimulatorPtr b,
                              std::vector<std::string> shared, CombinerSpec combiner,
                              std::string id = {});

}  // namespace proxsim
