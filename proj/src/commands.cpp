#include "modalwave/commands.hpp"

#include <cmath>
#include <iostream>
#include <random>
#include <stdexcept>

#include "modalwave/beams.hpp"
#include "modalwave/coupling.hpp"
#include "modalwave/inverse.hpp"

namespace modalwave {

namespace {

using io::json;

std::string solver_name(SolverMethod m) {
    switch (m) {
        case SolverMethod::Direct: return "direct";
        case SolverMethod::Jacobi: return "jacobi";
        case SolverMethod::GaussSeidel: return "gauss_seidel";
        case SolverMethod::Sor: return "sor";
    }
    return "?";
}

FieldComponent parse_components(const json& j) {
    const std::string name = j.is_string() ? j.get<std::string>() : "";
    if (name == "direct") return FieldComponent::Direct;
    if (name == "scattered") return FieldComponent::Scattered;
    if (name == "total") return FieldComponent::Total;
    throw std::invalid_argument("config: components must be 'direct', 'scattered' or 'total'");
}

std::vector<BeamPattern> parse_beam_list(const json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_array() || j[field].empty())
        throw std::invalid_argument("config: '" + field + "' must be a non-empty array");
    std::vector<BeamPattern> out;
    for (const auto& bj : j[field]) out.push_back(io::parse_beam(bj));
    return out;
}

std::vector<ModalVector> parse_source_list(const json& j, int truncation) {
    if (!j.contains("beams") || !j["beams"].is_array() || j["beams"].empty())
        throw std::invalid_argument("config: 'beams' must be a non-empty array of source specs");
    std::vector<ModalVector> out;
    for (const auto& bj : j["beams"]) out.push_back(io::parse_source(bj, truncation));
    return out;
}

}  // namespace

int cmd_verify_addition(const json& config, const std::string& out_dir, uint64_t seed) {
    const double wavelength = config.contains("wavelength") ? config["wavelength"].get<double>() : 1.0;
    if (!(wavelength > 0.0)) throw std::invalid_argument("config: wavelength must be positive");
    const double k = 2.0 * 3.1415926535897932384626433832795 / wavelength;

    if (!config.contains("mode")) throw std::invalid_argument("config: missing 'mode'");
    const ModeIndex mode{config["mode"].value("n", -1), config["mode"].value("m", 0)};
    if (mode.l < 0 || std::abs(mode.p) > mode.l) throw std::invalid_argument("config: invalid source mode");

    if (!config.contains("displacement") || !config["displacement"].is_array() ||
        config["displacement"].size() != 3)
        throw std::invalid_argument("config: 'displacement' must be [x, y, z]");
    Eigen::Vector3d d;
    for (int i = 0; i < 3; ++i) d[i] = config["displacement"][i].get<double>();

    if (!config.contains("orders") || !config["orders"].is_array() || config["orders"].empty())
        throw std::invalid_argument("config: 'orders' must be a non-empty array");
    std::vector<int> orders;
    for (const auto& o : config["orders"]) orders.push_back(o.get<int>());

    if (!config.contains("slice")) throw std::invalid_argument("config: missing 'slice'");
    const GridSpec slice = io::parse_grid(config["slice"]);
    const auto points = slice.points();
    for (const auto& r : points)
        if (!((r - d).norm() < d.norm()))
            throw std::invalid_argument("config: slice leaves the convergence region ||r - d|| < ||d||");

    std::string csv = "L,max_abs_error,rms_error\n";
    std::vector<AdditionReport> reports;
    for (int L : orders) {
        reports.push_back(verify_addition(mode, d, k, L, points));
        csv += std::to_string(L) + "," + io::format_double(reports.back().max_abs_error) + "," +
               io::format_double(reports.back().rms_error) + "\n";
    }

    io::write_text_atomic(out_dir + "/errors.csv", csv);
    io::write_manifest(out_dir, "verify-addition", config, seed, {{"errors.csv", csv}});

    for (size_t i = 1; i < reports.size(); ++i) {
        if (!(reports[i].rms_error < reports[i - 1].rms_error)) {
            std::cerr << "error did not decrease from L=" << orders[i - 1] << " (rms "
                      << reports[i - 1].rms_error << ") to L=" << orders[i] << " (rms "
                      << reports[i].rms_error << ")\n";
            return 1;
        }
    }
    return 0;
}

int cmd_forward(const json& config, const std::string& out_dir, uint64_t seed) {
    if (!config.contains("scene")) throw std::invalid_argument("config: missing 'scene'");
    const Scene scene = io::parse_scene(config["scene"]);
    const ModalVector s = io::parse_source(config, scene.source_truncation);
    if (!config.contains("grid")) throw std::invalid_argument("config: missing 'grid'");
    const GridSpec grid = io::parse_grid(config["grid"]);
    const FieldComponent components =
        config.contains("components") ? parse_components(config["components"]) : FieldComponent::Total;
    const SolverConfig solver =
        config.contains("solver") ? io::parse_solver(config["solver"]) : SolverConfig{};

    Eigen::VectorXcd b;
    if (components != FieldComponent::Direct && !scene.scatterers.empty()) {
        const BlockSystem sys = assemble(scene, s);
        const SolveReport report = solve(sys, solver);
        if (report.diverged) {
            const std::string csv =
                io::convergence_csv({{solver_name(solver.method), report.residual_history}});
            io::write_text_atomic(out_dir + "/residuals.csv", csv);
            io::write_manifest(out_dir, "forward", config, seed, {{"residuals.csv", csv}});
            std::cerr << "solver diverged after " << report.iterations << " iterations\n";
            return 1;
        }
        b = report.solution;
    }

    Radiomap map;
    map.grid = grid.points();
    map.component_selector = components;
    const Eigen::Index n = static_cast<Eigen::Index>(map.grid.size());
    map.direct = Eigen::VectorXcd::Zero(n);
    map.scattered = Eigen::VectorXcd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (components != FieldComponent::Scattered) map.direct[i] = eval_direct(scene, s, map.grid[i]);
        if (components != FieldComponent::Direct && b.size() > 0)
            map.scattered[i] = eval_scattered(scene, b, map.grid[i]);
    }
    map.total = map.direct + map.scattered;

    const std::string csv = io::radiomap_csv(map);
    io::write_text_atomic(out_dir + "/radiomap.csv", csv);
    io::write_manifest(out_dir, "forward", config, seed, {{"radiomap.csv", csv}});
    return 0;
}

int cmd_solver_compare(const json& config, const std::string& out_dir, uint64_t seed) {
    if (!config.contains("scene")) throw std::invalid_argument("config: missing 'scene'");
    const Scene scene = io::parse_scene(config["scene"]);
    const ModalVector s = io::parse_source(config, scene.source_truncation);
    if (!config.contains("methods") || !config["methods"].is_array() || config["methods"].empty())
        throw std::invalid_argument("config: 'methods' must be a non-empty array");
    const int max_iters = config.value("max_iters", 40);
    const double omega = config.value("omega", 0.5);
    if (max_iters < 1) throw std::invalid_argument("config: max_iters must be >= 1");

    std::vector<SolverConfig> configs;
    for (const auto& mj : config["methods"]) {
        json sj;
        sj["method"] = mj;
        sj["omega"] = omega;
        sj["max_iters"] = max_iters;
        sj["tol"] = 0.0;  // run the full budget; divergence is data here
        configs.push_back(io::parse_solver(sj));
        if (configs.back().method == SolverMethod::Direct)
            throw std::invalid_argument("config: solver-compare covers iterative methods only");
    }

    const BlockSystem sys = assemble(scene, s);
    std::vector<std::pair<std::string, std::vector<double>>> histories;
    for (const auto& sc : configs) {
        const SolveReport report = solve(sys, sc);
        std::string name = solver_name(sc.method);
        if (sc.method == SolverMethod::Sor) name += "(" + io::format_double(sc.omega) + ")";
        histories.emplace_back(std::move(name), report.residual_history);
    }

    const std::string csv = io::convergence_csv(histories);
    io::write_text_atomic(out_dir + "/convergence.csv", csv);
    io::write_manifest(out_dir, "solver-compare", config, seed, {{"convergence.csv", csv}});
    return 0;
}

int cmd_fit(const json& config, const std::string& out_dir, uint64_t seed) {
    if (!config.contains("truth_scene")) throw std::invalid_argument("config: missing 'truth_scene'");
    const Scene truth = io::parse_scene(config["truth_scene"]);
    const Scene tmpl = config.contains("template_scene") ? io::parse_scene(config["template_scene"]) : truth;
    if (tmpl.scatterers.empty()) throw std::invalid_argument("config: the fitted scene needs scatterers");

    const std::vector<ModalVector> beams = parse_source_list(config, truth.source_truncation);
    if (!config.contains("receivers")) throw std::invalid_argument("config: missing 'receivers'");
    const auto receivers = io::parse_grid(config["receivers"]).points();

    SolverConfig truth_solver;
    if (config.contains("truth_solver")) truth_solver = io::parse_solver(config["truth_solver"]);

    FitConfig fc;
    fc.scene_template = tmpl;
    fc.beams = beams;
    fc.solver = config.contains("solver") ? io::parse_solver(config["solver"])
                                          : SolverConfig{SolverMethod::GaussSeidel, 1.0, 8, 0.0};
    fc.solver.tol = 0.0;  // fixed iteration count keeps the fit deterministic
    fc.epochs = config.value("epochs", 1000);
    fc.batch_fraction = config.value("batch_fraction", 0.15);
    fc.noise_std = config.value("noise_std", 0.0);
    if (!config.contains("gamma") || !config.contains("offset_radius"))
        throw std::invalid_argument("config: 'gamma' and 'offset_radius' are required (no defaults)");
    fc.gamma = config["gamma"].get<double>();
    fc.offset_radius = config["offset_radius"].get<double>();
    fc.optimize_offsets = config.value("optimize_offsets", true);
    fc.lr_t = config.value("lr_t", 1e-3);
    fc.lr_offset = config.value("lr_offset", 5e-4);
    fc.t_init_std_factor = config.value("t_init_std_factor", 0.1);
    fc.seed = seed;
    if (fc.epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");

    const MeasurementSet measurements = synthesize_measurements(truth, beams, receivers, truth_solver);
    const FitResult result = fit(fc, measurements);

    std::vector<double> train = result.train_loss, val = result.val_loss;
    if (train.empty()) {
        // no training epochs: still report one evaluation of the initial state
        const Eigen::VectorXcd y = forward_predict(result.final_params, fc.scene_template, fc.beams,
                                                   measurements.records, fc.solver);
        const double l = loss(y, measurements.records);
        train.push_back(l);
        val.push_back(l);
    }

    Scene fitted = tmpl;
    result.best_params.apply_to(fitted);
    const std::string loss_out = io::loss_csv(train, val);
    const std::string scene_out = io::scene_to_json(fitted).dump(2) + "\n";
    io::write_text_atomic(out_dir + "/loss.csv", loss_out);
    io::write_text_atomic(out_dir + "/fitted_scene.json", scene_out);
    io::write_manifest(out_dir, "fit", config, seed,
                       {{"loss.csv", loss_out}, {"fitted_scene.json", scene_out}});
    return 0;
}

int cmd_beam_extrapolate(const json& config, const std::string& out_dir, uint64_t seed) {
    if (!config.contains("scene")) throw std::invalid_argument("config: missing 'scene'");
    const Scene scene = io::parse_scene(config["scene"]);
    const int L_max = config.value("L_max", 3);
    if (scene.source_truncation != L_max)
        throw std::invalid_argument("config: scene source truncation must equal L_max");
    const double r0 = config.value("r0", 0.0);
    const double k = scene.k();

    const auto training = parse_beam_list(config, "training_beams");
    const auto testing = parse_beam_list(config, "test_beams");
    if (!config.contains("mu_list") || !config["mu_list"].is_array() || config["mu_list"].empty())
        throw std::invalid_argument("config: 'mu_list' must be a non-empty array");
    std::vector<double> mu_list;
    for (const auto& m : config["mu_list"]) mu_list.push_back(m.get<double>());
    if (!config.contains("grid")) throw std::invalid_argument("config: missing 'grid'");
    const auto grid = io::parse_grid(config["grid"]).points();
    const SolverConfig solver =
        config.contains("solver") ? io::parse_solver(config["solver"]) : SolverConfig{};
    const double b_noise_std = config.value("b_noise_std", 0.0);

    const int n_src = mode_count(L_max);
    const int dim = static_cast<int>(scene.scatterers.size()) * mode_count(scene.inter_truncation);
    Eigen::MatrixXcd S(n_src, training.size());
    Eigen::MatrixXcd B(dim, training.size());
    std::vector<std::pair<std::string, std::string>> artifacts;

    for (size_t i = 0; i < training.size(); ++i) {
        const ModalVector s = fit_beam_coefficients(training[i], L_max, r0, k);
        S.col(i) = s.coefficients;
        const SolveReport report = solve(assemble(scene, s), solver);
        if (report.diverged) throw std::runtime_error("beam-extrapolate: training solve diverged");
        B.col(i) = report.solution;
        const std::string csv = io::beam_coeffs_csv(s);
        const std::string name = "train_beam_" + std::to_string(i) + ".csv";
        io::write_text_atomic(out_dir + "/" + name, csv);
        artifacts.emplace_back(name, csv);
    }
    if (b_noise_std > 0.0) {
        // seeded measurement noise on the training scattering coefficients
        std::mt19937_64 rng(seed ^ 0x6f7e6d31b5a1c2d4ULL);
        std::normal_distribution<double> gauss(0.0, b_noise_std / std::sqrt(2.0));
        const double scale = B.norm() / std::sqrt(static_cast<double>(B.size()));
        for (Eigen::Index c = 0; c < B.cols(); ++c)
            for (Eigen::Index r = 0; r < B.rows(); ++r)
                B(r, c) += scale * cplx(gauss(rng), gauss(rng));
    }

    // physical-model oracle maps and source coefficients for the test beams
    std::vector<ModalVector> test_sources;
    std::vector<Eigen::VectorXcd> oracle_maps;
    for (const auto& beam : testing) {
        test_sources.push_back(fit_beam_coefficients(beam, L_max, r0, k));
        const SolveReport report = solve(assemble(scene, test_sources.back()), solver);
        if (report.diverged) throw std::runtime_error("beam-extrapolate: oracle solve diverged");
        Eigen::VectorXcd map(grid.size());
        for (size_t g = 0; g < grid.size(); ++g) map[g] = eval_scattered(scene, report.solution, grid[g]);
        oracle_maps.push_back(std::move(map));
    }

    std::string metrics = "mu,beam,nmse,mse,mae\n";
    for (size_t mi = 0; mi < mu_list.size(); ++mi) {
        BeamSystem bs;
        try {
            bs = build_system_function(B, S, mu_list[mi]);
        } catch (const std::runtime_error& e) {
            std::cerr << e.what() << "\n";
            metrics += io::format_double(mu_list[mi]) + ",-,ill_posed,ill_posed,ill_posed\n";
            continue;
        }
        for (size_t ti = 0; ti < testing.size(); ++ti) {
            const Eigen::VectorXcd b_pred = extrapolate_beam(bs, test_sources[ti].coefficients);
            Eigen::VectorXcd pred(grid.size());
            for (size_t g = 0; g < grid.size(); ++g) pred[g] = eval_scattered(scene, b_pred, grid[g]);

            Radiomap map;
            map.grid = grid;
            map.component_selector = FieldComponent::Scattered;
            map.scattered = pred;
            map.direct = Eigen::VectorXcd::Zero(pred.size());
            map.total = pred;
            const std::string csv = io::radiomap_csv(map);
            const std::string name =
                "radiomap_mu" + std::to_string(mi) + "_beam" + std::to_string(ti) + ".csv";
            io::write_text_atomic(out_dir + "/" + name, csv);
            artifacts.emplace_back(name, csv);

            metrics += io::format_double(mu_list[mi]) + "," + std::to_string(ti) + "," +
                       io::format_double(nmse(pred, oracle_maps[ti])) + "," +
                       io::format_double(mse(pred, oracle_maps[ti])) + "," +
                       io::format_double(mae(pred, oracle_maps[ti])) + "\n";
        }
    }

    io::write_text_atomic(out_dir + "/metrics.csv", metrics);
    artifacts.emplace_back("metrics.csv", metrics);
    io::write_manifest(out_dir, "beam-extrapolate", config, seed, artifacts);
    return 0;
}

int run_command(const std::string& name, const io::json& config, const std::string& out_dir,
                std::optional<uint64_t> seed) {
    io::json resolved = config;
    if (config.is_object() && config.contains("command") && config.contains("config")) {
        // manifest.json passed back in: reuse its config and seed
        if (config["command"].get<std::string>() != name)
            throw std::invalid_argument("config: manifest was produced by command '" +
                                        config["command"].get<std::string>() + "'");
        if (!seed && config.contains("seed")) seed = config["seed"].get<uint64_t>();
        resolved = config["config"];
    }
    const uint64_t s = seed.value_or(0);
    if (name == "verify-addition") return cmd_verify_addition(resolved, out_dir, s);
    if (name == "forward") return cmd_forward(resolved, out_dir, s);
    if (name == "solver-compare") return cmd_solver_compare(resolved, out_dir, s);
    if (name == "fit") return cmd_fit(resolved, out_dir, s);
    if (name == "beam-extrapolate") return cmd_beam_extrapolate(resolved, out_dir, s);
    throw std::invalid_argument("unknown command: " + name);
}

}  // namespace modalwave
