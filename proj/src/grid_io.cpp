#include "calabiflow/grid_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace calabi {
namespace {

static_assert(std::endian::native == std::endian::little, "grid dumps assume a little-endian host");

std::string join(const auto& v, auto fmt) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += 'x';
    s += fmt(v[i]);
  }
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::string format_period(double p) {
  std::ostringstream os;
  os.precision(17);
  os << p;
  return os.str();
}

}  // namespace

void write_grid_dump(const std::filesystem::path& path, const PeriodicGrid& grid,
                     const std::vector<const RealArray*>& components) {
  for (const auto* c : components)
    if (!c || c->size() != grid.size()) throw std::invalid_argument("grid dump: component size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("grid dump: cannot open " + path.string());
  out << grid.dims() << ',' << join(grid.resolutions(), [](int r) { return std::to_string(r); }) << ','
      << join(grid.periods(), format_period) << ',' << components.size() << '\n';
  std::vector<double> row(components.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    for (std::size_t c = 0; c < components.size(); ++c) row[c] = (*components[c])[p];
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("grid dump: write failed for " + path.string());
}

GridDump read_grid_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("grid dump: cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  const auto fields = split(header, ',');
  if (fields.size() != 4) throw std::runtime_error("grid dump: malformed header '" + header + "'");
  const int dims = std::stoi(fields[0]);
  std::vector<int> res;
  for (const auto& r : split(fields[1], 'x')) res.push_back(std::stoi(r));
  std::vector<double> per;
  for (const auto& r : split(fields[2], 'x')) per.push_back(std::stod(r));
  if (static_cast<int>(res.size()) != dims || static_cast<int>(per.size()) != dims)
    throw std::runtime_error("grid dump: header dimension mismatch");
  GridDump dump{PeriodicGrid(res, per), std::stoi(fields[3]), {}};
  dump.data.resize(dump.grid.size() * dump.components);
  in.read(reinterpret_cast<char*>(dump.data.data()), static_cast<std::streamsize>(dump.data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(dump.data.size() * sizeof(double)))
    throw std::runtime_error("grid dump: truncated body in " + path.string());
  return dump;
}

void write_scalar(const std::filesystem::path& path, const ScalarField& f) {
  RealArray v(f.values().begin(), f.values().end());
  write_grid_dump(path, f.grid(), {&v});
}

ScalarField read_scalar(const std::filesystem::path& path) {
  GridDump d = read_grid_dump(path);
  if (d.components != 1) throw std::runtime_error("grid dump: expected one component");
  return ScalarField(d.grid, std::move(d.data));
}

void write_tensor(const std::filesystem::path& path, const TensorField& t) {
  std::vector<const RealArray*> comps;
  for (std::size_t c = 0; c < t.component_count(); ++c) comps.push_back(&t.component(c));
  write_grid_dump(path, t.grid(), comps);
}

}  // namespace calabi
