#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ctlcap/report_io.hpp"

namespace ctlcap {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

/// Settings for one CLI invocation. Unset optionals take per-command defaults.
struct RunConfig
{
    std::string command;
    std::string dist_spec;
    std::optional<std::string> out_path;
    std::string format = "csv";
    std::uint64_t seed = 0;

    std::optional<double> eta;
    std::vector<double> etas;
    int si_bits = 4;
    std::optional<double> a;
    std::vector<double> a_grid;
    std::vector<double> ratio_grid;
    std::optional<int> horizon;
    std::optional<int> paths;
    std::vector<double> thresholds;

    std::string strategy = "linear";
    std::optional<double> d;
    double process_noise = 0.0;
    double obs_noise = 0.0;

    int grid_points = 2001;
    double refine_tolerance = 1e-10;

    int g_a = 1;
    int window = 64;
    int decay_samples = 100000;

    /// OpenMP thread count; 0 keeps the runtime default.
    int threads = 0;
};

/// Runs the command and returns its report. Throws the library's errors.
Report execute(RunConfig const& config);

/// Serializes a report in the configured format.
std::string render(Report const& report, RunConfig const& config);

/// execute + render, writing to `out_path` or `out`; errors become a line on
/// `err` and exit code 2 (configuration) or 3 (numerical failure).
int run(RunConfig const& config, std::ostream& out, std::ostream& err);

/// Parses command-line arguments (without the program name) and runs them.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace ctlcap
