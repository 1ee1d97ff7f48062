#pragma once

#include <filesystem>

#include "hyperhopf/hopf.hpp"
#include "hyperhopf/mocsim.hpp"

namespace hyperhopf {

/// Parsed JSON configuration. Unknown keys anywhere are rejected.
///
/// Schema (defaults in brackets):
///   "system":  { "n", "m", "speeds": [..], "rhs": [..],
///                "reflection": [[..]..], "params": {..},
///                "anchor": {"component", "x"} }
///   or "builtin": { "name": "example_sec6", "gamma": value }
///   "analysis": { "lambda_range": [lo,hi]  [0,2],
///                 "region": {"re": [lo,hi], "im": [lo,hi]}
///                          [re -3..1, im -12..12],
///                 "k_max" [20], "grid_n" [512] }
///   "simulation": { "lambda", "dx" [1/400], "cfl" [0.9], "dt" [from cfl],
///                   "t_end", "initial": [expr,..] |
///                   {"seed_orbit": {"epsilon"}}, "probes": [..],
///                   "measure_window" [t_end/4] }
///   "sweep": { "offsets": [..], "dx" [1/400], "t_end" [auto], "jobs" [1] }
struct ConfigDocument {
  SystemSpec system;
  HopfOptions analysis;

  struct Simulation {
    bool present = false;
    double lambda = 0;
    double dx = 1.0 / 400;
    double cfl = 0.9;
    double dt = 0;
    double t_end = 0;
    double measure_window = 0;
    bool seed_orbit = false;
    double seed_epsilon = 0;
    std::vector<std::string> initial_exprs;
    std::vector<double> probes;
  } simulation;

  struct Sweep {
    bool present = false;
    std::vector<double> offsets;
    double dx = 1.0 / 400;
    double t_end = 0;
    int jobs = 1;
  } sweep;
};

ConfigDocument load_config(const std::filesystem::path& path);
ConfigDocument parse_config(const std::string& json_text);

}  // namespace hyperhopf
