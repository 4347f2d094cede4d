#include "proxsim/csv.hpp"

#include "proxsim/error.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace proxsim::csv {

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

// Splits one logical record; quoted fields may span newlines.
bool next_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool quoted = false;
  bool any = false;
  char ch;
  while (in.get(ch)) {
    any = true;
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

bool blank(const std::vector<std::string>& f) {
  return f.size() == 1 && f[0].empty();
}

}  // namespace

Table parse(std::istream& in) {
  Table t;
  std::vector<std::string> rec;
  while (next_record(in, rec)) {
    if (blank(rec)) continue;
    if (t.header.empty()) {
      t.header = rec;
      continue;
    }
    if (rec.size() != t.header.size()) {
      throw Error(Errc::missing_column,
                  "row " + std::to_string(t.rows.size() + 1) + " has " +
                      std::to_string(rec.size()) + " fields, header has " +
                      std::to_string(t.header.size()),
                  {}, t.rows.size());
    }
    t.rows.push_back(rec);
  }
  return t;
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::missing_file, "cannot open '" + path + "'", path);
  return parse(in);
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i != 0) out << ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out << f;
      continue;
    }
    out << '"';
    for (char ch : f) {
      if (ch == '"') out << '"';
      out << ch;
    }
    out << '"';
  }
  out << '\n';
}

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

bool parse_number(const std::string& text, double& out) {
  std::size_t b = text.find_first_not_of(" \t");
  std::size_t e = text.find_last_not_of(" \t");
  if (b == std::string::npos) return false;
  const char* first = text.data() + b;
  const char* last = text.data() + e + 1;
  if (*first == '+') ++first;
  const auto r = std::from_chars(first, last, out);
  return r.ec == std::errc() && r.ptr == last;
}

}  // namespace proxsim::csv
