#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "modalwave/commands.hpp"
#include "modalwave/io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Modal multi-scatterer wave propagation toolkit"};
    app.require_subcommand(1);

    const std::vector<std::string> names = {"verify-addition", "forward", "solver-compare", "fit",
                                            "beam-extrapolate"};
    const std::vector<std::string> descriptions = {
        "Check addition-theorem reconstruction error across expansion orders",
        "Solve the coupled scattering system and emit a radiomap CSV",
        "Run iterative solvers on one scene and emit residual histories",
        "Estimate scattering matrices and position offsets from field samples",
        "Learn the beam-space system function and extrapolate new beams"};

    std::string config_path, out_dir;
    std::optional<uint64_t> seed;
    for (size_t i = 0; i < names.size(); ++i) {
        CLI::App* sub = app.add_subcommand(names[i], descriptions[i]);
        sub->add_option("--config", config_path, "JSON config (or a previous manifest.json)")->required();
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--seed", seed, "random seed (overrides a manifest seed)");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        const modalwave::io::json config = modalwave::io::load_json(config_path);
        return modalwave::run_command(command, config, out_dir, seed);
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
