#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rescon/engine.hpp"

namespace rescon {

struct AnalysisToggles {
  bool wasserstein = true;
  bool bounds = true;
  std::size_t cdf_grid = 0;  ///< points in cdf_grid.csv; 0 disables it
};

struct ExperimentConfig {
  RunConfig run;
  std::vector<Algorithm> compare;
  AnalysisToggles analysis;
  std::string output_dir = "out";
};

/// Parses a YAML experiment description. Relative edge-list paths resolve
/// against `base_dir`. Throws ConfigError on any malformed or unknown entry.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");

/// Reads and parses `path`; a missing file is a ConfigError.
ExperimentConfig load_config(const std::string& path);

}  // namespace rescon
