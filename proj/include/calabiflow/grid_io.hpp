#pragma once

#include <filesystem>
#include <vector>

#include "calabiflow/grid.hpp"
#include "calabiflow/tensor.hpp"

namespace calabi {

// Binary dump: header line "dims,resolutions,periods,components" (for example
// "2,64x64,1x1,1"), then little-endian doubles, point-major in row-major order
// with the components of each point contiguous.
struct GridDump {
  PeriodicGrid grid;
  int components = 0;
  RealArray data;

  double at(std::size_t point, int component) const { return data[point * components + component]; }
};

void write_grid_dump(const std::filesystem::path& path, const PeriodicGrid& grid,
                     const std::vector<const RealArray*>& components);
GridDump read_grid_dump(const std::filesystem::path& path);

void write_scalar(const std::filesystem::path& path, const ScalarField& f);
ScalarField read_scalar(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const TensorField& t);

}  // namespace calabi
