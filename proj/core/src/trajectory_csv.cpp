#include "kfmse/trajectory_csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace kfmse {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || (end && *end != '\0' && *end != '\r') ||
      errno == ERANGE) {
    throw ParseError(line_no, "bad numeric field '" + s + "'");
  }
  return v;
}

long parse_index(const std::string& s, std::size_t line_no) {
  errno = 0;
  char* end = nullptr;
  long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || (end && *end != '\0' && *end != '\r') ||
      errno == ERANGE) {
    throw ParseError(line_no, "bad step index '" + s + "'");
  }
  return v;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') {
    s.pop_back();
  }
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw ParseError(1, "missing header");
  }
  ++line_no;
  auto header = split_csv_line(strip_cr(line));
  if (header.size() < 2 || header[0] != "k") {
    throw ParseError(line_no, "header must be k,x1,...,xn");
  }
  const std::size_t dim = header.size() - 1;
  for (std::size_t i = 0; i < dim; ++i) {
    if (header[i + 1] != "x" + std::to_string(i + 1)) {
      throw ParseError(line_no, "unexpected column name '" + header[i + 1] +
                                    "', expected x" + std::to_string(i + 1));
    }
  }

  std::vector<Vec> states;
  long expected_k = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = strip_cr(line);
    if (stripped.empty()) {
      continue;
    }
    auto fields = split_csv_line(stripped);
    if (fields.size() != dim + 1) {
      throw ParseError(line_no, "expected " + std::to_string(dim + 1) +
                                    " fields, got " +
                                    std::to_string(fields.size()));
    }
    long k = parse_index(fields[0], line_no);
    if (k != expected_k) {
      throw NonContiguousIndex(
          "line " + std::to_string(line_no) + ": step index " +
          std::to_string(k) + ", expected " + std::to_string(expected_k));
    }
    ++expected_k;
    Vec x(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      x[static_cast<int>(i)] = parse_double(fields[i + 1], line_no);
    }
    states.push_back(std::move(x));
  }
  if (states.empty()) {
    throw ParseError(line_no, "no data rows");
  }
  return Trajectory::from_states(std::move(states));
}

Trajectory load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open trajectory file: " + path);
  }
  return read_trajectory_csv(in);
}

void write_trajectory_csv(const Trajectory& t, std::ostream& out) {
  const int dim = t.state_dim();
  out << "k";
  for (int i = 1; i <= dim; ++i) {
    out << ",x" << i;
  }
  out << "\n";
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    out << k;
    for (int i = 0; i < dim; ++i) {
      out << ',' << format_double(t.states[k][i]);
    }
    out << "\n";
  }
}

void save_trajectory_csv(const Trajectory& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write trajectory file: " + path);
  }
  write_trajectory_csv(t, out);
  if (!out.good()) {
    throw Error("write failed: " + path);
  }
}

}  // namespace kfmse
