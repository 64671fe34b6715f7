#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "calabiflow/kahler.hpp"

namespace calabi {

// One experiment run: the kind, its parameter tree (JSON object, missing keys
// take documented defaults), output directory and seed.
struct ExperimentConfig {
  std::string kind;
  nlohmann::json params = nlohmann::json::object();
  std::filesystem::path out_dir = "calabiflow-out";
  std::uint64_t seed = 7;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentOutcome {
  std::vector<CheckResult> checks;
  std::vector<std::filesystem::path> artifacts;
  int failures() const;
};

const std::vector<std::string>& experiment_kinds();

// Text catalog for a kind; std::invalid_argument listing the valid kinds otherwise.
std::string describe(const std::string& kind);

// Parses a JSON config file. --out and --seed overrides win over file values.
ExperimentConfig load_config(const std::string& kind, const std::filesystem::path& path,
                             const std::optional<std::filesystem::path>& out,
                             const std::optional<std::uint64_t>& seed);

// Runs the experiment, writes artifacts under out_dir and a checks report.
// Throws std::invalid_argument naming the offending field for bad configs.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Source term from a JSON description: {"preset": "zero" | "product-cosine" | "two-mode" |
// "cosine-x" | "random", "amplitude": a, "max_mode": m} or {"coefficients":
// [{"k": [...], "cos": a, "sin": b}, ...]}.
ScalarField make_source(const ComplexTorusGrid& grid, const nlohmann::json& desc, std::uint64_t seed);

}  // namespace calabi
