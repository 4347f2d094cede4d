#include "proxsim/subprocess_simulator.hpp"

#include "proxsim/csv.hpp"
#include "proxsim/error.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace proxsim {

namespace {

class TempFile {
 public:
  TempFile() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "proxsim-XXXXXX").string();
    const int fd = ::mkstemp(tmpl.data());
    if (fd < 0) throw Error(Errc::simulator_failure, "cannot create a temporary file");
    ::close(fd);
    path_ = tmpl;
  }
  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') {
      out += "'\\''";
    } else {
      out.push_back(ch);
    }
  }
  return out + "'";
}

}  // namespace

SubprocessSimulator::SubprocessSimulator(std::string id, DomainPtr domain,
                                         std::string command, bool deterministic,
                                         double cost_hint)
    : Simulator(std::move(id), std::move(domain), deterministic, cost_hint),
      command_(std::move(command)) {}

std::vector<Outputs> SubprocessSimulator::evaluate_batch(
    const std::vector<RawPoint>& points, const EvalContext&) const {
  const Domain& d = *domain();
  TempFile request;
  {
    std::ofstream out(request.path(), std::ios::binary);
    std::vector<std::string> header;
    for (const auto& v : d.inputs()) header.push_back(v.name);
    csv::write_row(out, header);
    for (const auto& p : points) {
      std::vector<std::string> row;
      for (const auto& v : d.inputs()) {
        const auto& value = p.at(v.name);
        row.push_back(std::holds_alternative<double>(value)
                          ? csv::format_number(std::get<double>(value))
                          : std::get<std::string>(value));
      }
      csv::write_row(out, row);
    }
  }

  const std::string cmd = command_ + " < " + shell_quote(request.path());
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    throw Error(Errc::simulator_failure, id() + ": cannot start '" + command_ + "'");
  }
  std::string response;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) response.append(buf, got);
  const int status = ::pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error(Errc::simulator_failure,
                id() + ": '" + command_ + "' exited with status " +
                    std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }

  std::istringstream in(response);
  csv::Table table;
  try {
    table = csv::parse(in);
  } catch (const Error& e) {
    throw Error(Errc::simulator_failure, id() + ": malformed response: " + e.what());
  }
  if (table.rows.size() != points.size()) {
    throw Error(Errc::simulator_failure,
                id() + ": expected " + std::to_string(points.size()) + " rows, got " +
                    std::to_string(table.rows.size()));
  }
  std::vector<int> cols;
  for (const auto& v : d.outputs()) {
    const int c = table.column(v.name);
    if (c < 0) {
      throw Error(Errc::simulator_failure, id() + ": response lacks column '" + v.name + "'",
                  v.name);
    }
    cols.push_back(c);
  }
  std::vector<Outputs> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      double value = 0.0;
      const auto& text = table.rows[i][static_cast<std::size_t>(cols[k])];
      if (!csv::parse_number(text, value)) {
        throw Error(Errc::simulator_failure,
                    id() + ": non-numeric output '" + text + "'", d.outputs()[k].name, i);
      }
      out[i].push_back(value);
    }
  }
  return out;
}

Outputs SubprocessSimulator::evaluate_point(const RawPoint& point, std::uint64_t,
                                            const EvalContext& ctx) const {
  return evaluate_batch({point}, ctx).front();
}

}  // namespace proxsim
