#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rpi/distributions.hpp"
#include "rpi/kernels.hpp"

namespace rpi {

struct DriSettings {
  std::size_t k_max = 50;
  std::size_t grid_per_unit = 8;
  std::size_t n_mc = 10000;
};

struct PointProcessSettings {
  std::vector<std::pair<double, double>> intervals{{0.0, 10.0}};
  std::size_t n_windows = 100000;
  double horizon = 50.0;
  std::size_t n_realizations = 100000;
  double shift = 7.0;
  std::size_t shift_windows = 100000;
  StepTable laplace_h{{0.0, 1.0}, {1.0, 0.0}};
  double laplace_t = 50.0;
  std::size_t laplace_n_mc = 100000;
};

/// One experiment, read from a single JSON file:
///
///   {"schema": 1, "seed": 7,
///    "law": {"family": "exponential", "rate": 1.0},
///    "kernel": {"type": "indicator", "eta": {"family": "exponential", "rate": 1.0}},
///    "t": 30, "u_grid": [0], "n_replicates": 100}
///
/// Unknown keys are rejected. Which optional keys matter depends on the
/// command; see README.md for the full schema.
struct ExperimentConfig {
  int schema = 1;
  std::uint64_t seed = 0;
  std::optional<InterarrivalLaw> law;
  std::optional<KernelSpec> kernel;
  std::optional<double> t;
  std::vector<double> t_list;
  std::vector<double> u_grid{0.0};
  std::size_t n_replicates = 1000;
  double alpha = 0.01;
  double tol = 1e-9;
  double c_max = 0.0;
  std::optional<double> window_c;
  std::size_t n_permutations = 200;
  DriSettings dri;
  PointProcessSettings pointprocess;
  std::string output_dir = "out";
  /// The parsed document, echoed into metadata.
  nlohmann::ordered_json source;
};

/// Throws ConfigError naming the JSON path of the first offending field.
ExperimentConfig parse_config(const nlohmann::ordered_json& doc);
ExperimentConfig load_config(const std::string& path);

LawParams parse_law(const nlohmann::ordered_json& j, const std::string& path);
KernelVariant parse_kernel(const nlohmann::ordered_json& j, const std::string& path);

}  // namespace rpi
