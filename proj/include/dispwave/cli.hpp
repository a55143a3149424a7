#pragma once

#include "dispwave/errors.hpp"
#include "dispwave/grid.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace dispwave::cli
{
    struct ConfigEntry
    {
        std::string value;
        int line = 0;
    };

    /// Parses `key = value` lines. `#` starts a comment, `[section]` prefixes
    /// the following keys with `section.`. Throws configuration with the line
    /// number on malformed or duplicate keys.
    std::map<std::string, ConfigEntry> parse_config_text(const std::string& text);

    struct PotentialConfig
    {
        std::string kind = "gaussian";   ///< gaussian, well, ring, file
        double amplitude = 5.0;
        double radius = 0.5;
        double width = 0.2;              ///< ring width
        Point center;
        std::string file;                ///< grid.n^2 values, row-major from the lower-left node
        std::vector<double> coupling_sweep;
    };

    struct GridConfig
    {
        double half_width = 1.5;
        int n = 12;
    };

    struct SpectralConfig
    {
        double lambda_max = 0.0;   ///< 0 selects 3 / h
        int n_nodes = 0;           ///< 0 sizes the grid from panel_width
        int refinement = 12;
        double panel_width = 0.4;
    };

    struct FdtdSection
    {
        double half_width = 24.0;
        int n = 480;
        double dt_factor = 0.5;
        double T_final = 20.0;
    };

    struct DataConfig
    {
        double width = 0.6;   ///< f = exp(-|x|^2 / width^2) on |x| < cut
        double cut = 2.4;
    };

    struct ExperimentConfig
    {
        std::string experiment = "selfcheck";
        std::string output_dir = "out";
        std::uint64_t seed = 1;

        PotentialConfig potential;
        GridConfig grid;
        SpectralConfig spectral;
        FdtdSection fdtd;
        DataConfig data;

        std::vector<double> propagate_times{0.5, 1.0, 2.0};

        double decay_dt = 0.25;
        double decay_t_min = 2.0;
        double decay_t_max = 20.0;

        std::vector<std::string> strichartz_tuples{"inf, inf, 4/3, 2", "8, inf, 8/7, 2"};
        int strichartz_n = 440;
        int strichartz_samples = 80;

        std::vector<Point> kernel_points{{-1.875, 0.125}, {2.125, 0.125}};
        std::vector<double> kernel_T{20.0, 40.0};
        double kernel_dt = 0.02;
        double kernel_panel_width = 0.1;

        double regularity_beta_max = 0.0;   ///< > 0 adds a coupling-threshold search

        double semilinear_p = 7.0;
        double semilinear_amplitude = 0.5;
        double semilinear_dt = 0.1;
        int semilinear_steps = 10;
        int semilinear_iterations = 8;

        /// Resolved values of every key, sorted, for the report.
        std::vector<std::pair<std::string, std::string>> echo;
    };

    const std::vector<std::string>& experiment_names();

    /// Validates the parsed entries; unknown keys and out-of-range values
    /// throw configuration naming the line and the key.
    ExperimentConfig load_config(const std::string& text);
    ExperimentConfig load_config_file(const std::string& path);

    struct SuiteResult
    {
        std::string name;
        bool pass = false;
        std::string detail;
    };

    struct RunReport
    {
        std::string experiment;
        std::vector<std::pair<std::string, std::string>> config;
        std::vector<std::pair<std::string, std::string>> verdicts;
        std::vector<std::string> tables;
        std::vector<SuiteResult> suites;
        std::vector<std::string> warnings;
        double wall_time = 0.0;

        bool validation_failed() const;
        std::string to_json() const;
    };

    /// Runs the configured experiment, writes its CSV tables and report.json
    /// into output_dir and returns the report.
    RunReport run(const ExperimentConfig& config);

    /// What each emitted column of an experiment measures.
    std::vector<std::pair<std::string, std::string>> column_references(const std::string& experiment);

    /// 17 significant digits, '.' decimal separator, nan and inf spelled out.
    std::string format_number(double x);

    /// 2 for configuration and domain errors, 3 for numerical failures.
    int exit_code(const Error& e);
} // namespace dispwave::cli
