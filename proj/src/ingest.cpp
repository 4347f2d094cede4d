#include "proxsim/ingest.hpp"

#include "proxsim/csv.hpp"
#include "proxsim/error.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

namespace proxsim {

using nlohmann::json;

namespace {

LogRole role_from(const std::string& s) {
  if (s == "inputs") return LogRole::inputs;
  if (s == "outputs") return LogRole::outputs;
  if (s == "mixed") return LogRole::mixed;
  throw Error(Errc::invalid_config, "unknown file role '" + s + "'", "role");
}

struct LoadedFile {
  const LogFileSpec* spec;
  csv::Table table;
  std::map<std::string, std::size_t> by_key;  // key -> row
};

constexpr char kKeySep = '\x1f';

std::string display_key(std::string k) {
  for (auto& ch : k) {
    if (ch == kKeySep) ch = '/';
  }
  return k;
}

}  // namespace

LogSchema LogSchema::from_json(const json& j, const std::string& base_dir) {
  if (!j.is_object() || !j.contains("files") || !j["files"].is_array()) {
    throw Error(Errc::invalid_config, "log schema needs a 'files' array", "files");
  }
  LogSchema s;
  try {
    for (const auto& f : j["files"]) {
      LogFileSpec spec;
      spec.path = f.at("path").get<std::string>();
      if (!base_dir.empty() && std::filesystem::path(spec.path).is_relative()) {
        spec.path = (std::filesystem::path(base_dir) / spec.path).string();
      }
      spec.role = role_from(f.value("role", std::string("mixed")));
      const auto& key = f.at("key");
      if (key.is_string()) {
        spec.key = {key.get<std::string>()};
      } else {
        spec.key = key.get<std::vector<std::string>>();
      }
      if (spec.key.empty()) {
        throw Error(Errc::invalid_config, "file '" + spec.path + "' declares no key", "key");
      }
      spec.columns = f.value("columns", std::map<std::string, std::string>{});
      s.files.push_back(std::move(spec));
    }
    if (j.contains("levels")) {
      s.levels = j["levels"].get<std::map<std::string, std::map<std::string, std::string>>>();
    }
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_config, std::string("log schema: ") + e.what());
  }
  if (j.contains("domain")) s.domain = j["domain"];
  return s;
}

LogSchema LogSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::missing_file, "cannot open '" + path + "'", path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_config, "log schema '" + path + "': " + e.what());
  }
  return from_json(j, std::filesystem::path(path).parent_path().string());
}

json IngestReport::to_json() const {
  json files = json::array();
  for (const auto& [path, n] : rows_read) files.push_back({{"path", path}, {"rows_read", n}});
  json drops = json::array();
  for (const auto& d : dropped) drops.push_back({{"key", d.key}, {"reason", d.reason}});
  return {{"files", files},
          {"rows_joined", rows_joined},
          {"rows_dropped", dropped.size()},
          {"dropped", drops}};
}

IngestResult ingest_logs(const LogSchema& schema, DomainPtr domain) {
  const Domain& dom = *domain;
  if (schema.files.empty()) throw Error(Errc::invalid_config, "log schema lists no files");

  // variable -> (file index, csv column)
  std::map<std::string, std::pair<std::size_t, std::string>> source;
  for (std::size_t fi = 0; fi < schema.files.size(); ++fi) {
    const auto& f = schema.files[fi];
    for (const auto& [column, var] : f.columns) {
      const bool is_input = dom.input_index(var).has_value();
      const bool is_output = dom.output_index(var).has_value();
      if (!is_input && !is_output) {
        throw Error(Errc::unknown_variable,
                    "column '" + column + "' maps to unknown variable '" + var + "'", var);
      }
      if ((f.role == LogRole::inputs && !is_input) || (f.role == LogRole::outputs && !is_output)) {
        throw Error(Errc::invalid_config,
                    "'" + var + "' does not fit the role of '" + f.path + "'", var);
      }
      if (!source.emplace(var, std::make_pair(fi, column)).second) {
        throw Error(Errc::invalid_config, "'" + var + "' is mapped by more than one column", var);
      }
    }
  }
  auto require = [&](const VariableSpec& v) {
    if (source.count(v.name) == 0) {
      throw Error(Errc::missing_column, "no file provides variable '" + v.name + "'", v.name);
    }
  };
  for (const auto& v : dom.inputs()) require(v);
  for (const auto& v : dom.outputs()) require(v);

  IngestReport report;
  std::vector<LoadedFile> files;
  for (const auto& f : schema.files) {
    if (!std::filesystem::exists(f.path)) {
      throw Error(Errc::missing_file, "log file '" + f.path + "' does not exist", f.path);
    }
    LoadedFile lf{&f, csv::read_file(f.path), {}};
    std::vector<int> key_cols;
    for (const auto& k : f.key) {
      const int c = lf.table.column(k);
      if (c < 0) throw Error(Errc::missing_column, "'" + f.path + "' lacks key column '" + k + "'", k);
      key_cols.push_back(c);
    }
    for (const auto& [column, _] : f.columns) {
      if (lf.table.column(column) < 0) {
        throw Error(Errc::missing_column, "'" + f.path + "' lacks column '" + column + "'",
                    column);
      }
    }
    for (std::size_t r = 0; r < lf.table.rows.size(); ++r) {
      std::string key;
      for (std::size_t k = 0; k < key_cols.size(); ++k) {
        if (k != 0) key.push_back(kKeySep);
        key += lf.table.rows[r][static_cast<std::size_t>(key_cols[k])];
      }
      if (!lf.by_key.emplace(key, r).second) {
        throw Error(Errc::key_collision,
                    "'" + f.path + "' row " + std::to_string(r + 1) + ": duplicate key '" +
                        display_key(key) + "'",
                    f.key.front(), r + 1);
      }
    }
    report.rows_read.emplace_back(f.path, lf.table.rows.size());
    files.push_back(std::move(lf));
  }

  std::set<std::string> all_keys;
  for (const auto& f : files) {
    for (const auto& [k, _] : f.by_key) all_keys.insert(k);
  }

  std::vector<RawPoint> points;
  std::vector<std::vector<double>> labels;
  std::vector<std::string> keys;
  for (const auto& key : all_keys) {
    std::set<std::string> absent;
    for (const auto& f : files) {
      if (f.by_key.count(key) == 0) absent.insert(f.spec->path);
    }
    if (!absent.empty()) {
      std::string missing;
      for (const auto& a : absent) missing += (missing.empty() ? "" : ", ") + a;
      report.dropped.push_back({display_key(key), "unmatched key (absent from " + missing + ")"});
      continue;
    }
    auto cell = [&](const std::string& var) -> std::pair<const std::string&, std::size_t> {
      const auto& [fi, column] = source.at(var);
      const auto& f = files[fi];
      const std::size_t row = f.by_key.at(key);
      return {f.table.rows[row][static_cast<std::size_t>(f.table.column(column))], row + 1};
    };
    auto unmappable = [&](const std::string& var, std::size_t row, const std::string& text) {
      const auto& [fi, column] = source.at(var);
      return Error(Errc::unmappable_value,
                   "'" + files[fi].spec->path + "' row " + std::to_string(row) + ", column '" +
                       column + "': cannot map '" + text + "'",
                   column, row);
    };

    RawPoint p;
    for (const auto& v : dom.inputs()) {
      const auto [text, row] = cell(v.name);
      if (v.kind == VariableKind::categorical) {
        const auto lm = schema.levels.find(v.name);
        std::string label = text;
        if (lm != schema.levels.end()) {
          const auto hit = lm->second.find(text);
          if (hit == lm->second.end()) throw unmappable(v.name, row, text);
          label = hit->second;
        }
        if (std::find(v.levels.begin(), v.levels.end(), label) == v.levels.end()) {
          throw unmappable(v.name, row, text);
        }
        p.emplace(v.name, label);
      } else {
        double x = 0.0;
        if (!csv::parse_number(text, x)) throw unmappable(v.name, row, text);
        p.emplace(v.name, x);
      }
    }
    std::vector<double> y;
    for (const auto& v : dom.outputs()) {
      const auto [text, row] = cell(v.name);
      double x = 0.0;
      if (!csv::parse_number(text, x)) throw unmappable(v.name, row, text);
      y.push_back(x);
    }
    try {
      dom.encode(p);
    } catch (const Error& e) {
      report.dropped.push_back({display_key(key), std::string("out of domain: ") + e.what()});
      continue;
    }
    points.push_back(std::move(p));
    labels.push_back(std::move(y));
    keys.push_back(display_key(key));
  }

  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(dom.encoded_dim()));
  Eigen::MatrixXd Y(n, static_cast<Eigen::Index>(dom.output_count()));
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) = dom.encode(points[static_cast<std::size_t>(i)]).transpose();
    for (Eigen::Index k = 0; k < Y.cols(); ++k) {
      Y(i, k) = labels[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
  }
  report.rows_joined = points.size();
  return {TrainingSet(std::move(domain), std::move(X), std::move(Y)), std::move(keys),
          std::move(report)};
}

}  // namespace proxsim
