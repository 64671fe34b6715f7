#include <filesystem>
#include <fstream>

#include "calabiflow/grid_io.hpp"
#include "calabiflow/random_fields.hpp"
#include "doctest.h"

using namespace calabi;

TEST_CASE("grid dump round trip and header layout") {
  PeriodicGrid g({16, 8}, {1.0, 2.0});
  ScalarField f = random_trig_field(g, 3, 2, 1.0);
  auto path = std::filesystem::temp_directory_path() / "calabiflow_dump_test.bin";
  write_scalar(path, f);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "2,16x8,1x2,1");
  ScalarField back = read_scalar(path);
  CHECK(back.grid() == g);
  CHECK(sup_distance(back, f) == 0.0);

  TensorField t = random_symmetric(g, 5, 2, 0.5);
  write_tensor(path, t);
  GridDump d = read_grid_dump(path);
  CHECK(d.components == 4);
  CHECK(d.at(37, 1) == t.component(1)[37]);
  CHECK(d.at(37, 2) == t.component(2)[37]);
  std::filesystem::remove(path);
}

TEST_CASE("truncated dumps are rejected") {
  PeriodicGrid g({8});
  auto path = std::filesystem::temp_directory_path() / "calabiflow_dump_trunc.bin";
  {
    std::ofstream out(path, std::ios::binary);
    out << "1,8,1,1\n";
    double v = 1.0;
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  CHECK_THROWS(read_grid_dump(path));
  std::filesystem::remove(path);
}
