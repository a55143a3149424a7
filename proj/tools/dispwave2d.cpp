#include "dispwave/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace cli = dispwave::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Spectral and time-domain experiments for 2D wave equations with a potential"};
    std::string experiment, config_path, out_dir;
    std::uint64_t seed = 0;
    bool refs = false;
    app.add_option("experiment", experiment, "Experiment to run")
        ->required()
        ->check(CLI::IsMember(cli::experiment_names()));
    app.add_option("--config", config_path, "Configuration file")->required();
    auto* out_opt = app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (overrides seed)");
    app.add_flag("--paper-refs", refs, "Print what each emitted column measures");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (refs)
    {
        std::cout << experiment << ":\n";
        for (const auto& [column, meaning] : cli::column_references(experiment))
            std::cout << "  " << column << ": " << meaning << "\n";
        return 0;
    }

    try
    {
        auto config = cli::load_config_file(config_path);
        config.experiment = experiment;
        if (*out_opt)
            config.output_dir = out_dir;
        if (*seed_opt)
            config.seed = seed;
        for (auto& [key, value] : config.echo)
        {
            if (key == "experiment")
                value = config.experiment;
            else if (key == "output_dir")
                value = config.output_dir;
            else if (key == "seed")
                value = std::to_string(config.seed);
        }

        const auto report = cli::run(config);
        for (const auto& [key, value] : report.verdicts)
            std::cout << key << ": " << value << "\n";
        for (const auto& s : report.suites)
            std::cout << (s.pass ? "PASS " : "FAIL ") << s.name << ": " << s.detail << "\n";
        for (const auto& w : report.warnings)
            std::cerr << "warning: " << w << "\n";
        for (const auto& t : report.tables)
            std::cout << "wrote " << config.output_dir << "/" << t << "\n";
        return report.validation_failed() ? 4 : 0;
    }
    catch (const dispwave::Error& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return cli::exit_code(e);
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
