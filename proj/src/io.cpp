#include "damflow/io.hpp"

#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <unistd.h>

#include "damflow/error.hpp"

namespace damflow {

namespace fs = std::filesystem;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string field_csv(const Grid& grid, const SolutionField& s) {
  const auto n = static_cast<Eigen::Index>(grid.num_nodes());
  if (s.u.size() != n || s.chi.size() != n) {
    throw InvalidArgument("field_csv: field size does not match the grid");
  }
  std::string out = "i,j,x1,x2,u,chi\n";
  out.reserve(out.size() + grid.num_nodes() * 96);
  for (int j = 0; j <= grid.ny(); ++j) {
    for (int i = 0; i <= grid.nx(); ++i) {
      const std::size_t k = grid.index(i, j);
      const Point x = grid.node(i, j);
      out += std::to_string(i);
      out += ',';
      out += std::to_string(j);
      out += ',';
      out += format_double(x.x1);
      out += ',';
      out += format_double(x.x2);
      out += ',';
      out += format_double(s.u[static_cast<Eigen::Index>(k)]);
      out += ',';
      out += format_double(s.chi[static_cast<Eigen::Index>(k)]);
      out += '\n';
    }
  }
  return out;
}

void write_field_csv(const fs::path& path, const Grid& grid, const SolutionField& s) {
  write_file_atomic(path, field_csv(grid, s));
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t\r");
    const auto e = cur.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
  }
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw InvalidData("bad number '" + s + "' in " + where);
  }
  if (pos != s.size()) throw InvalidData("bad number '" + s + "' in " + where);
  return v;
}

}  // namespace

SolutionField read_field_csv(const fs::path& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open field file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidData("empty field file " + path.string());
  const auto header = split(line, ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t k = 0; k < header.size(); ++k) col[header[k]] = k;
  for (const char* need : {"i", "j", "u", "chi"}) {
    if (!col.count(need)) {
      throw InvalidData(path.string() + ": missing column '" + need + "'");
    }
  }
  const auto n = static_cast<Eigen::Index>(grid.num_nodes());
  SolutionField s;
  s.u = Field::Constant(n, std::numeric_limits<double>::quiet_NaN());
  s.chi = s.u;
  std::vector<char> seen(grid.num_nodes(), 0);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split(line, ',');
    const std::string where = path.string() + ":" + std::to_string(row);
    if (f.size() < header.size()) throw InvalidData("short row at " + where);
    const double di = parse_number(f[col["i"]], where);
    const double dj = parse_number(f[col["j"]], where);
    const int i = static_cast<int>(di);
    const int j = static_cast<int>(dj);
    if (i != di || j != dj || i < 0 || j < 0 || i > grid.nx() || j > grid.ny()) {
      throw InvalidData("node index out of range at " + where);
    }
    const std::size_t k = grid.index(i, j);
    if (seen[k]) throw InvalidData("duplicate node at " + where);
    seen[k] = 1;
    s.u[static_cast<Eigen::Index>(k)] = parse_number(f[col["u"]], where);
    s.chi[static_cast<Eigen::Index>(k)] = parse_number(f[col["chi"]], where);
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) {
      throw InvalidData(path.string() + ": node (" + std::to_string(grid.i_of(k)) + "," +
                        std::to_string(grid.j_of(k)) + ") missing");
    }
  }
  return s;
}

std::string table_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) throw InvalidArgument("table_csv: header/column mismatch");
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out += ',';
    out += header[c];
  }
  out += '\n';
  const std::size_t rows = columns.empty() ? 0 : columns[0].size();
  for (const auto& c : columns) {
    if (c.size() != rows) throw InvalidArgument("table_csv: ragged columns");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ',';
      out += format_double(columns[c][r]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace damflow
