#pragma once

#include "proxsim/domain.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace proxsim {

enum class LogRole { inputs, outputs, mixed };

struct LogFileSpec {
  std::string path;
  LogRole role = LogRole::mixed;
  std::vector<std::string> key;                 // key column(s)
  std::map<std::string, std::string> columns;   // csv column -> variable
};

/// Describes how simulator log files map onto a domain. `levels` translates
/// raw CSV values of a categorical variable to level labels.
struct LogSchema {
  std::vector<LogFileSpec> files;
  std::map<std::string, std::map<std::string, std::string>> levels;
  std::optional<nlohmann::json> domain;  // optional embedded domain

  /// Relative file paths are resolved against `base_dir`.
  static LogSchema from_json(const nlohmann::json& j, const std::string& base_dir = {});
  static LogSchema load(const std::string& path);
};

struct DroppedRow {
  std::string key;
  std::string reason;
};

struct IngestReport {
  std::vector<std::pair<std::string, std::size_t>> rows_read;  // per file
  std::size_t rows_joined = 0;
  std::vector<DroppedRow> dropped;

  nlohmann::json to_json() const;
};

struct IngestResult {
  TrainingSet training;
  std::vector<std::string> keys;  // row keys, aligned with training rows
  IngestReport report;
};

/// Inner-joins the schema's CSV files on their key columns, maps columns to
/// domain variables and encodes them. Rows come out sorted by key, so the
/// result does not depend on file order or row order.
IngestResult ingest_logs(const LogSchema& schema, DomainPtr domain);

}  // namespace proxsim
