#include "sipheat/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sipheat/errors.hpp"

namespace sipheat {

double Grid2D::min() const {
  return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

double Grid2D::max() const {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(std::string_view tok, const std::string& where) {
  // std::from_chars<double> is available on this toolchain and avoids
  // locale surprises.
  double out = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  while (last != first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last)
    throw ParseError(where + ": bad number '" + std::string(tok) + "'");
  return out;
}

}  // namespace

Grid2D read_grid_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid csv: " + path.string());

  Grid2D g;
  bool have_pitch = false;
  std::string line;
  int lineno = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (line[0] == '#') {
      std::string body = line.substr(1);
      const size_t eq = body.find('=');
      if (eq == std::string::npos) continue;  // free-form comment
      std::string key = body.substr(0, eq);
      key.erase(std::remove(key.begin(), key.end(), ' '), key.end());
      const std::string val = body.substr(eq + 1);
      if (key == "pitch_um") {
        g.pitch_um = parse_double(val, where);
        have_pitch = true;
      } else if (key == "origin_mm") {
        const size_t comma = val.find(',');
        if (comma == std::string::npos)
          throw ParseError(where + ": origin_mm wants '<x>,<y>'");
        g.ox_mm = parse_double(val.substr(0, comma), where);
        g.oy_mm = parse_double(val.substr(comma + 1), where);
      } else if (key == "layer") {
        std::string name = val;
        while (!name.empty() && name.front() == ' ') name.erase(name.begin());
        g.label = name;
      }
      continue;
    }
    std::vector<double> row;
    size_t start = 0;
    while (true) {
      const size_t comma = line.find(',', start);
      const std::string_view tok(line.data() + start,
                                 (comma == std::string::npos ? line.size() : comma) - start);
      row.push_back(parse_double(tok, where));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(where + ": expected " + std::to_string(rows.front().size()) +
                       " columns, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no data rows");
  if (!have_pitch) throw ParseError(path.string() + ": missing '# pitch_um=' header");

  g.ny = static_cast<int>(rows.size());
  g.nx = static_cast<int>(rows.front().size());
  g.v.reserve(static_cast<size_t>(g.nx) * g.ny);
  for (const auto& row : rows) g.v.insert(g.v.end(), row.begin(), row.end());
  return g;
}

void write_grid_csv(const Grid2D& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write grid csv: " + path.string());
  out << "# pitch_um=" << fmt17(grid.pitch_um) << "\n";
  out << "# origin_mm=" << fmt17(grid.ox_mm) << "," << fmt17(grid.oy_mm) << "\n";
  out << "# layer=" << grid.label << "\n";
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      if (ix) out << ",";
      out << fmt17(grid.at(ix, iy));
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace sipheat
