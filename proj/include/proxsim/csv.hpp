#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace proxsim::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index of `name`, or -1.
  int column(const std::string& name) const;
};

/// RFC 4180-style reader: comma separated, double-quote escaping, CRLF or LF
/// line ends. Blank lines are skipped; ragged rows are an error.
Table parse(std::istream& in);
Table read_file(const std::string& path);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

/// Strict full-string parse; false on any trailing garbage.
bool parse_number(const std::string& text, double& out);

}  // namespace proxsim::csv
