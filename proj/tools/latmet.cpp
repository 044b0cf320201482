#include "latmet/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"latmet: effective-energy estimates for periodic spring-lattice metamaterials"};
    app.require_subcommand(1);

    std::string config_path;
    latmet::RunOptions options;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto* run = app.add_subcommand("run", "execute a batch config file");
    run->add_option("config", config_path, "path to the JSON run config")->required();
    run->add_option("--output-dir", options.output_dir, "directory for result files");
    run->add_option("--seed", seed, "override the config's seed list with one seed")
        ->each([&](const std::string&) { seed_set = true; });
    run->add_option("--threads", options.threads, "OpenMP thread count (0 = default)");

    auto* cat = app.add_subcommand("catalog", "list built-in lattices");

    CLI11_PARSE(app, argc, argv);

    if (cat->parsed()) {
        std::cout << latmet::catalog_listing();
        return 0;
    }
    if (seed_set) options.seed = seed;
    return latmet::run_config_file(config_path, options);
}
