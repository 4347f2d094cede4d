#include "proxsim/composition.hpp"

#include "proxsim/error.hpp"
#include "proxsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>

namespace proxsim {

namespace {

RawPoint project(const RawPoint& p, const Domain& d) {
  RawPoint out;
  for (const auto& v : d.inputs()) out.emplace(v.name, p.at(v.name));
  return out;
}

EvalContext downstream(const EvalContext& ctx) {
  EvalContext c = ctx;
  c.seed = splitmix64(ctx.seed ^ 0x5eed0b0bULL);
  return c;
}

const VariableSpec* find(const std::vector<VariableSpec>& vars, const std::string& name) {
  for (const auto& v : vars) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

class SerialSimulator final : public Simulator {
 public:
  SerialSimulator(std::string id, DomainPtr domain, SimulatorPtr a, SimulatorPtr b,
                  WiringSpec w)
      : Simulator(std::move(id), std::move(domain),
                  a->deterministic() && b->deterministic(),
                  a->cost_hint() + b->cost_hint()),
        a_(std::move(a)),
        b_(std::move(b)),
        wiring_(std::move(w)) {}

 protected:
  std::vector<Outputs> evaluate_batch(const std::vector<RawPoint>& points,
                                      const EvalContext& ctx) const override {
    std::vector<RawPoint> upstream;
    upstream.reserve(points.size());
    for (const auto& p : points) upstream.push_back(project(p, *a_->domain()));
    const auto ya = a_->evaluate(upstream, ctx);

    const Domain& bd = *b_->domain();
    std::vector<RawPoint> down;
    down.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      RawPoint q;
      for (const auto& name : wiring_.exposed) q.emplace(name, points[i].at(name));
      for (const auto& w : wiring_.wires) {
        double value = ya[i][*a_->domain()->output_index(w.from)];
        const auto& spec = bd.inputs()[*bd.input_index(w.to)];
        if (!(value >= *spec.lower && value <= *spec.upper)) {
          if (!wiring_.clamp || std::isnan(value)) {
            throw Error(Errc::range_violation,
                        w.from + " = " + std::to_string(value) + " lies outside the bounds of " +
                            w.to,
                        w.to, i);
          }
          const double clipped = std::clamp(value, *spec.lower, *spec.upper);
          if (ctx.note) {
            ctx.note("clamp " + w.from + "->" + w.to + " at point " +
                     std::to_string(ctx.first_index + i) + ": " + std::to_string(value) +
                     " -> " + std::to_string(clipped));
          }
          value = clipped;
        }
        q.emplace(w.to, value);
      }
      down.push_back(std::move(q));
    }
    auto yb = b_->evaluate(down, downstream(ctx));
    if (wiring_.reexport_upstream) {
      for (std::size_t i = 0; i < yb.size(); ++i) {
        yb[i].insert(yb[i].end(), ya[i].begin(), ya[i].end());
      }
    }
    return yb;
  }

  Outputs evaluate_point(const RawPoint& point, std::uint64_t index,
                         const EvalContext& ctx) const override {
    EvalContext c = ctx;
    c.first_index = index;
    return evaluate_batch({point}, c).front();
  }

 private:
  SimulatorPtr a_;
  SimulatorPtr b_;
  WiringSpec wiring_;
};

class ParallelSimulator final : public Simulator {
 public:
  ParallelSimulator(std::string id, DomainPtr domain, SimulatorPtr a, SimulatorPtr b,
                    CombinerSpec c)
      : Simulator(std::move(id), std::move(domain),
                  a->deterministic() && b->deterministic(),
                  std::max(a->cost_hint(), b->cost_hint())),
        a_(std::move(a)),
        b_(std::move(b)),
        combiner_(std::move(c)) {}

 protected:
  std::vector<Outputs> evaluate_batch(const std::vector<RawPoint>& points,
                                      const EvalContext& ctx) const override {
    std::vector<RawPoint> pa;
    std::vector<RawPoint> pb;
    for (const auto& p : points) {
      pa.push_back(project(p, *a_->domain()));
      pb.push_back(project(p, *b_->domain()));
    }
    auto fb = std::async(std::launch::async,
                         [&] { return b_->evaluate(pb, downstream(ctx)); });
    const auto ya = a_->evaluate(pa, ctx);
    const auto yb = fb.get();

    std::vector<Outputs> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (const auto& o : combiner_.outputs) {
        std::vector<double> vals;
        for (const auto& ref : o.sources) {
          const auto& sim = ref.side == Side::a ? *a_ : *b_;
          const auto& row = ref.side == Side::a ? ya[i] : yb[i];
          vals.push_back(row[*sim.domain()->output_index(ref.name)]);
        }
        out[i].push_back(reduce(o, vals));
      }
    }
    return out;
  }

  Outputs evaluate_point(const RawPoint& point, std::uint64_t index,
                         const EvalContext& ctx) const override {
    EvalContext c = ctx;
    c.first_index = index;
    return evaluate_batch({point}, c).front();
  }

 private:
  static double reduce(const CombinedOutput& o, const std::vector<double>& v) {
    switch (o.reduction) {
      case Reduction::pass: return v.front();
      case Reduction::sum: {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
      }
      case Reduction::mean: {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
      }
      case Reduction::min: return *std::min_element(v.begin(), v.end());
      case Reduction::max: return *std::max_element(v.begin(), v.end());
      case Reduction::weighted_sum: {
        double s = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k) s += o.weights[k] * v[k];
        return s;
      }
    }
    return 0.0;
  }

  SimulatorPtr a_;
  SimulatorPtr b_;
  CombinerSpec combiner_;
};

}  // namespace

SimulatorPtr compose_serial(SimulatorPtr a, SimulatorPtr b, WiringSpec w, std::string id) {
  const Domain& ad = *a->domain();
  const Domain& bd = *b->domain();
  auto fail = [](const std::string& msg, const std::string& var = {}) {
    throw Error(Errc::incompatible_wiring, msg, var);
  };
  std::set<std::string> wired;
  for (const auto& wire : w.wires) {
    if (!ad.output_index(wire.from)) fail("'" + wire.from + "' is not an output of " + a->id(), wire.from);
    const auto bi = bd.input_index(wire.to);
    if (!bi) fail("'" + wire.to + "' is not an input of " + b->id(), wire.to);
    if (bd.inputs()[*bi].kind == VariableKind::categorical) {
      fail("cannot wire a continuous output into categorical input '" + wire.to + "'", wire.to);
    }
    if (!wired.insert(wire.to).second) fail("'" + wire.to + "' is wired twice", wire.to);
  }
  std::set<std::string> exposed;
  for (const auto& name : w.exposed) {
    if (!bd.input_index(name)) fail("'" + name + "' is not an input of " + b->id(), name);
    if (wired.count(name) != 0) fail("'" + name + "' is both wired and exposed", name);
    if (!exposed.insert(name).second) fail("'" + name + "' is exposed twice", name);
  }
  for (const auto& v : bd.inputs()) {
    if (wired.count(v.name) == 0 && exposed.count(v.name) == 0) {
      fail("downstream input '" + v.name + "' is neither wired nor exposed", v.name);
    }
  }

  std::vector<VariableSpec> inputs = ad.inputs();
  for (const auto& v : bd.inputs()) {
    if (exposed.count(v.name) != 0) inputs.push_back(v);
  }
  std::vector<VariableSpec> outputs = bd.outputs();
  if (w.reexport_upstream) {
    outputs.insert(outputs.end(), ad.outputs().begin(), ad.outputs().end());
  }
  DomainPtr domain;
  try {
    domain = std::make_shared<const Domain>(std::move(inputs), std::move(outputs));
  } catch (const Error& e) {
    fail(std::string("composite domain is invalid: ") + e.what(), e.variable());
  }
  if (id.empty()) id = "serial(" + a->id() + "," + b->id() + ")";
  return std::make_shared<SerialSimulator>(std::move(id), std::move(domain), std::move(a),
                                           std::move(b), std::move(w));
}

SimulatorPtr compose_parallel(SimulatorPtr a, SimulatorPtr b, std::vector<std::string> shared,
                              CombinerSpec c, std::string id) {
  const Domain& ad = *a->domain();
  const Domain& bd = *b->domain();
  const std::set<std::string> shared_set(shared.begin(), shared.end());
  for (const auto& name : shared) {
    const auto* va = find(ad.inputs(), name);
    const auto* vb = find(bd.inputs(), name);
    if (va == nullptr || vb == nullptr) {
      throw Error(Errc::shared_variable_mismatch,
                  "shared variable '" + name + "' is not an input of both simulators", name);
    }
    if (!(*va == *vb)) {
      throw Error(Errc::shared_variable_mismatch,
                  "shared variable '" + name + "' differs in kind, bounds or levels", name);
    }
  }
  std::vector<VariableSpec> inputs;
  for (const auto& v : ad.inputs()) {
    if (shared_set.count(v.name) != 0) inputs.push_back(v);
  }
  for (const auto& v : ad.inputs()) {
    if (shared_set.count(v.name) == 0) inputs.push_back(v);
  }
  for (const auto& v : bd.inputs()) {
    if (shared_set.count(v.name) != 0) continue;
    if (find(ad.inputs(), v.name) != nullptr) {
      throw Error(Errc::shared_variable_mismatch,
                  "'" + v.name + "' is an input of both simulators but not declared shared",
                  v.name);
    }
    inputs.push_back(v);
  }

  if (c.outputs.empty()) throw Error(Errc::combiner_error, "combiner declares no outputs");
  std::vector<VariableSpec> outputs;
  for (const auto& o : c.outputs) {
    if (o.sources.empty()) {
      throw Error(Errc::combiner_error, "combined output '" + o.name + "' has no sources", o.name);
    }
    if (o.reduction == Reduction::pass && o.sources.size() != 1) {
      throw Error(Errc::combiner_error, "pass-through output '" + o.name + "' needs one source",
                  o.name);
    }
    if (o.reduction == Reduction::weighted_sum &&
        (o.weights.size() != o.sources.size() ||
         !std::all_of(o.weights.begin(), o.weights.end(),
                      [](double x) { return std::isfinite(x); }))) {
      throw Error(Errc::combiner_error,
                  "weighted_sum '" + o.name + "' needs one finite weight per source", o.name);
    }
    for (const auto& ref : o.sources) {
      const auto& sim = ref.side == Side::a ? *a : *b;
      if (!sim.domain()->output_index(ref.name)) {
        throw Error(Errc::combiner_error,
                    "'" + ref.name + "' is not an output of " + sim.id(), ref.name);
      }
    }
    outputs.push_back(VariableSpec::output(o.name, o.unit));
  }
  DomainPtr domain;
  try {
    domain = std::make_shared<const Domain>(std::move(inputs), std::move(outputs));
  } catch (const Error& e) {
    throw Error(Errc::combiner_error, std::string("composite domain is invalid: ") + e.what(),
                e.variable());
  }
  if (id.empty()) id = "parallel(" + a->id() + "," + b->id() + ")";
  return std::make_shared<ParallelSimulator>(std::move(id), std::move(domain), std::move(a),
                                             std::move(b), std::move(c));
}

}  // namespace proxsim
