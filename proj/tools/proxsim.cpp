// Command-line front end: run campaigns, query saved models, ingest logs and
// host the HTTP service.

#include "proxsim/campaign.hpp"
#include "proxsim/csv.hpp"
#include "proxsim/error.hpp"
#include "proxsim/ingest.hpp"
#include "proxsim/model_io.hpp"
#include "proxsim/registry.hpp"
#include "proxsim/service.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

using namespace proxsim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kRuntime = 3;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string data_dir;
  std::string format;  // empty: per-command default
};

// Problems with what the user handed us exit 2; failures while computing
// exit 3.
int exit_code_for(Errc c) {
  switch (c) {
    case Errc::simulator_failure:
    case Errc::not_positive_definite:
    case Errc::rank_deficient:
    case Errc::too_few_points:
    case Errc::empty_pool:
    case Errc::batch_too_large:
    case Errc::empty_holdout:
    case Errc::range_violation:
    case Errc::duplicate_input:
      return kRuntime;
    default:
      return kUsage;
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_file, "cannot open '" + path + "'", path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::invalid_config, "'" + path + "' is not valid JSON", path);
  return j;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::missing_file, "cannot write '" + path + "'", path);
  return out;
}

void write_metrics_csv(const std::string& path, const CampaignState& s) {
  auto out = open_out(path);
  const Domain& d = *s.training.domain;
  std::vector<std::string> header{"iteration", "simulator_calls"};
  for (const auto& o : d.outputs()) {
    for (const char* m : {"rmse", "mae", "r2", "picp95"}) header.push_back(o.name + "_" + m);
  }
  csv::write_row(out, header);
  for (const auto& rec : s.metrics_history) {
    std::vector<std::string> row{std::to_string(rec.iteration),
                                 std::to_string(rec.simulator_calls)};
    for (const auto& m : rec.metrics.per_output) {
      for (double v : {m.rmse, m.mae, m.r2, m.picp95}) row.push_back(csv::format_number(v));
    }
    csv::write_row(out, row);
  }
}

void print_summary(const json& summary, const Globals& g) {
  if (g.format == "csv") {
    csv::write_row(std::cout, {"iteration", "simulator_calls_used", "training_size", "stop_reason"});
    csv::write_row(std::cout,
                   {std::to_string(summary["iteration"].get<std::size_t>()),
                    std::to_string(summary["simulator_calls_used"].get<std::size_t>()),
                    std::to_string(summary["training_size"].get<std::size_t>()),
                    summary["stop_reason"].is_null() ? "" : summary["stop_reason"].get<std::string>()});
  } else {
    std::cout << summary.dump(2) << '\n';
  }
}

// ---------------------------------------------------------------- run

struct RunOptions {
  std::string config_path;
  std::string out_dir;
  std::string resume_dir;
  std::size_t extra_calls = 0;
  std::size_t extra_iterations = 0;
};

void finish_run(const Campaign& c, const std::string& dir, const Globals& g) {
  const auto& s = c.state();
  if (s.model) save_model((fs::path(dir) / "model.json").string(), model_to_json(*s.model));
  write_metrics_csv((fs::path(dir) / "metrics.csv").string(), s);
  json summary = state_summary(s);
  summary["output_dir"] = dir;
  print_summary(summary, g);
}

int cmd_run(const RunOptions& o, const Globals& g) {
  const auto registry = SimulatorRegistry::with_builtins();
  if (!o.resume_dir.empty()) {
    const std::string journal = (fs::path(o.resume_dir) / "journal.jsonl").string();
    Campaign c = Campaign::open(journal, registry);
    if (!c.stopped() || o.extra_calls > 0 || o.extra_iterations > 0) {
      c.extend({o.extra_calls, o.extra_iterations});
      c.run();
    }
    finish_run(c, o.resume_dir, g);
    return kOk;
  }

  const json doc = read_json_file(o.config_path);
  if (!doc.is_object()) throw Error(Errc::invalid_config, "run config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "simulator" && key != "campaign" && key != "output_dir") {
      throw Error(Errc::invalid_config, key + " is not a recognised setting", key);
    }
  }
  if (!doc.contains("simulator")) {
    throw Error(Errc::invalid_config, "simulator is required", "simulator");
  }
  json campaign = doc.value("campaign", json::object());
  if (g.seed && campaign.is_object()) campaign["seed"] = *g.seed;
  CampaignConfig config;
  try {
    config = CampaignConfig::from_json(campaign);
  } catch (const Error& e) {
    throw Error(e.code(), "campaign." + e.message(), "campaign." + e.variable());
  }
  const auto sim = resolve_simulator(doc["simulator"], registry);

  std::string dir = o.out_dir;
  if (dir.empty()) dir = doc.value("output_dir", std::string());
  if (dir.empty()) dir = g.data_dir.empty() ? "proxsim-run" : g.data_dir;
  if (!fs::path(dir).is_absolute() && o.out_dir.empty() && doc.contains("output_dir")) {
    dir = (fs::path(o.config_path).parent_path() / dir).string();
  }
  fs::create_directories(dir);

  Campaign c(sim, doc["simulator"], config, (fs::path(dir) / "journal.jsonl").string());
  c.run();
  finish_run(c, dir, g);
  return kOk;
}

// ---------------------------------------------------------------- predict

std::vector<RawPoint> read_points(const std::string& path, const Domain& d, csv::Table& table) {
  table = csv::read_file(path);
  for (const auto& v : d.inputs()) {
    if (table.column(v.name) < 0) {
      throw Error(Errc::missing_column, "'" + path + "' lacks column '" + v.name + "'", v.name);
    }
  }
  std::vector<RawPoint> points;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    RawPoint p;
    for (const auto& v : d.inputs()) {
      const std::string& cell = table.rows[r][static_cast<std::size_t>(table.column(v.name))];
      if (v.kind == VariableKind::categorical) {
        p.emplace(v.name, cell);
        continue;
      }
      double x = 0.0;
      if (!csv::parse_number(cell, x)) {
        throw Error(Errc::unmappable_value,
                    "row " + std::to_string(r + 1) + ", column '" + v.name + "': '" + cell +
                        "' is not a number",
                    v.name, r + 1);
      }
      p.emplace(v.name, x);
    }
    points.push_back(std::move(p));
  }
  return points;
}

void write_predictions(std::ostream& out, const Domain& d, const std::vector<RawPoint>& points,
                       const PredictionBatch& p, const std::string& format) {
  if (format == "json") {
    json rows = json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
      json row = {{"inputs", raw_point_to_json(points[i])}};
      for (std::size_t k = 0; k < d.output_count(); ++k) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto kk = static_cast<Eigen::Index>(k);
        row["mean"][d.outputs()[k].name] = p.mean(ii, kk);
        row["variance"][d.outputs()[k].name] = p.variance(ii, kk);
      }
      rows.push_back(std::move(row));
    }
    out << rows.dump(2) << '\n';
    return;
  }
  std::vector<std::string> header;
  for (const auto& v : d.inputs()) header.push_back(v.name);
  for (const auto& o : d.outputs()) {
    header.push_back(o.name + "_mean");
    header.push_back(o.name + "_variance");
  }
  csv::write_row(out, header);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::vector<std::string> row;
    for (const auto& v : d.inputs()) {
      const auto& val = points[i].at(v.name);
      row.push_back(std::holds_alternative<double>(val) ? csv::format_number(std::get<double>(val))
                                                        : std::get<std::string>(val));
    }
    for (std::size_t k = 0; k < d.output_count(); ++k) {
      row.push_back(csv::format_number(p.mean(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))));
      row.push_back(
          csv::format_number(p.variance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))));
    }
    csv::write_row(out, row);
  }
}

std::string resolve_model_path(const std::string& path) {
  return fs::is_directory(path) ? (fs::path(path) / "model.json").string() : path;
}

int emit_predictions(const Metamodel& m, const std::vector<RawPoint>& points,
                     const std::string& out_path, const std::string& format) {
  const DomainPtr& d = model_domain(m);
  const PredictionSet set = make_prediction_set(d, points);
  const PredictionBatch p = predict(m, set.X);
  if (out_path.empty() || out_path == "-") {
    write_predictions(std::cout, *d, points, p, format);
  } else {
    auto out = open_out(out_path);
    write_predictions(out, *d, points, p, format);
  }
  return kOk;
}

int cmd_predict(const std::string& model_path, const std::string& points_csv,
                const std::string& out_path, const Globals& g) {
  const Metamodel m = load_model(resolve_model_path(model_path));
  csv::Table table;
  const auto points = read_points(points_csv, *model_domain(m), table);
  return emit_predictions(m, points, out_path, g.format);
}

int cmd_sweep(const std::string& model_path, const std::string& vary,
              const std::vector<std::string>& fixed, std::size_t steps,
              const std::string& out_path, const Globals& g) {
  const Metamodel m = load_model(resolve_model_path(model_path));
  const Domain& d = *model_domain(m);
  json req = {{"vary", vary}, {"fixed", json::object()}, {"steps", steps}};
  for (const auto& f : fixed) {
    const auto eq = f.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::invalid_config, "--fixed expects name=value, got '" + f + "'", "fixed");
    }
    const std::string name = f.substr(0, eq);
    const std::string text = f.substr(eq + 1);
    double x = 0.0;
    const auto idx = d.input_index(name);
    if (idx && d.inputs()[*idx].kind != VariableKind::categorical && csv::parse_number(text, x)) {
      req["fixed"][name] = x;
    } else {
      req["fixed"][name] = text;
    }
  }
  json grid;
  const auto points = expand_sweep(d, req, grid);
  return emit_predictions(m, points, out_path, g.format);
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const std::string& schema_path, const std::string& out_path,
               const std::string& simulator_id, const std::string& model_path,
               const Globals& g) {
  const LogSchema schema = LogSchema::load(schema_path);
  DomainPtr domain;
  if (!simulator_id.empty()) {
    domain = SimulatorRegistry::with_builtins().create(simulator_id)->domain();
  } else if (schema.domain) {
    domain = domain_from_json(*schema.domain);
  } else {
    throw Error(Errc::invalid_config, "the schema embeds no domain; pass --simulator", "domain");
  }
  const IngestResult r = ingest_logs(schema, domain);
  json doc = training_set_to_json(r.training);
  doc["keys"] = r.keys;
  auto out = open_out(out_path);
  out << doc.dump(2) << '\n';
  if (!model_path.empty()) {
    GPFitOptions o;
    o.seed = g.seed.value_or(0);
    save_model(model_path, model_to_json(fit_gp(r.training, o)));
  }
  if (g.format == "csv") {
    csv::write_row(std::cout, {"key", "reason"});
    for (const auto& dr : r.report.dropped) csv::write_row(std::cout, {dr.key, dr.reason});
  } else {
    std::cout << r.report.to_json().dump(2) << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- serve

HttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int cmd_serve(std::string bind, const Globals& g) {
  if (bind.empty()) {
    const char* env = std::getenv("PROXSIM_BIND");
    bind = env != nullptr ? env : "127.0.0.1:8080";
  }
  std::string dir = g.data_dir;
  if (dir.empty()) {
    const char* env = std::getenv("PROXSIM_DATA_DIR");
    dir = env != nullptr ? env : "proxsim-data";
  }
  const auto [host, port] = parse_bind(bind);
  ApiService service(SimulatorRegistry::with_builtins(), dir);
  HttpServer server(service);
  const int bound = server.bind(host, port);
  if (bound < 0) {
    std::cerr << "proxsim: cannot listen on " << bind << '\n';
    return kRuntime;
  }
  std::cerr << "proxsim: serving /api/v1 on " << host << ':' << bound << " (data in " << dir
            << ")\n";
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
  return kOk;
}

int cmd_list(const Globals& g) {
  const auto reg = SimulatorRegistry::with_builtins();
  if (g.format == "csv") {
    csv::write_row(std::cout, {"id", "deterministic", "cost_hint", "inputs", "outputs"});
    for (const auto& id : reg.ids()) {
      const auto sim = reg.create(id);
      std::string in;
      std::string out;
      for (const auto& v : sim->domain()->inputs()) in += (in.empty() ? "" : ";") + v.name;
      for (const auto& v : sim->domain()->outputs()) out += (out.empty() ? "" : ";") + v.name;
      csv::write_row(std::cout, {id, sim->deterministic() ? "true" : "false",
                                 csv::format_number(sim->cost_hint()), in, out});
    }
    return kOk;
  }
  json all = json::array();
  for (const auto& id : reg.ids()) all.push_back(describe(*reg.create(id)));
  std::cout << all.dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-learning GP metamodels for simulators"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the campaign / fit seed");
  app.add_option("--data-dir", g.data_dir, "Output root for run, journal root for serve");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run an active-learning campaign");
  run_cmd->add_option("config", run.config_path, "Run configuration (JSON)");
  run_cmd->add_option("-o,--out", run.out_dir, "Output directory");
  auto* resume = run_cmd->add_option("--resume", run.resume_dir,
                                     "Continue the campaign stored in this output directory");
  run_cmd->add_option("--extra-calls", run.extra_calls, "Extra simulator calls when resuming")
      ->needs(resume);
  run_cmd->add_option("--extra-iterations", run.extra_iterations, "Extra iterations when resuming")
      ->needs(resume);

  std::string model_path;
  std::string points_csv;
  std::string out_path;
  auto* predict_cmd = app.add_subcommand("predict", "Predict from a saved model");
  predict_cmd->add_option("model", model_path, "model.json or a run directory")->required();
  predict_cmd->add_option("points", points_csv, "CSV of input points")->required();
  predict_cmd->add_option("-o,--out", out_path, "Output file (default stdout)");

  std::string vary;
  std::vector<std::string> fixed;
  std::size_t steps = 11;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one input of a saved model");
  sweep_cmd->add_option("model", model_path, "model.json or a run directory")->required();
  sweep_cmd->add_option("--vary", vary, "Input to vary")->required();
  sweep_cmd->add_option("--fixed", fixed, "name=value for every other input");
  sweep_cmd->add_option("--steps", steps, "Grid points for numeric inputs");
  sweep_cmd->add_option("-o,--out", out_path, "Output file (default stdout)");

  std::string schema_path;
  std::string ingest_out;
  std::string simulator_id;
  std::string ingest_model;
  auto* ingest_cmd = app.add_subcommand("ingest", "Join simulator log files into a training set");
  ingest_cmd->add_option("schema", schema_path, "Log schema (JSON)")->required();
  ingest_cmd->add_option("out", ingest_out, "Training-set JSON to write")->required();
  ingest_cmd->add_option("--simulator", simulator_id, "Take the domain from a built-in");
  ingest_cmd->add_option("--model", ingest_model, "Also fit a GP and save it here");

  std::string bind;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  serve_cmd->add_option("--bind", bind, "host:port (default $PROXSIM_BIND or 127.0.0.1:8080)");

  auto* list_cmd = app.add_subcommand("list-simulators", "List built-in simulators");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed;
  if (g.format.empty()) {
    g.format = predict_cmd->parsed() || sweep_cmd->parsed() ? "csv" : "json";
  }

  try {
    if (run_cmd->parsed()) {
      if (run.config_path.empty() == run.resume_dir.empty()) {
        std::cerr << "proxsim: run needs either a config file or --resume DIR\n";
        return kUsage;
      }
      return cmd_run(run, g);
    }
    if (predict_cmd->parsed()) return cmd_predict(model_path, points_csv, out_path, g);
    if (sweep_cmd->parsed()) return cmd_sweep(model_path, vary, fixed, steps, out_path, g);
    if (ingest_cmd->parsed()) {
      return cmd_ingest(schema_path, ingest_out, simulator_id, ingest_model, g);
    }
    if (serve_cmd->parsed()) return cmd_serve(bind, g);
    if (list_cmd->parsed()) return cmd_list(g);
  } catch (const Error& e) {
    std::cerr << "proxsim: " << e.what();
    if (!e.variable().empty()) std::cerr << " [" << e.variable() << "]";
    std::cerr << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "proxsim: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
