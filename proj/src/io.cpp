#include "modalwave/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace modalwave::io {

namespace {

constexpr double kDegToRad = 3.1415926535897932384626433832795 / 180.0;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw std::invalid_argument("config: " + where + ": " + what);
}

const json& need(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(where, "missing field '" + key + "'");
    return *it;
}

double need_number(const json& j, const std::string& key, const std::string& where) {
    const json& v = need(j, key, where);
    if (!v.is_number()) fail(where + "." + key, "expected a number");
    return v.get<double>();
}

int need_int(const json& j, const std::string& key, const std::string& where) {
    const json& v = need(j, key, where);
    if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
    return v.get<int>();
}

Eigen::Vector3d need_vec3(const json& j, const std::string& key, const std::string& where) {
    const json& v = need(j, key, where);
    if (!v.is_array() || v.size() != 3) fail(where + "." + key, "expected [x, y, z]");
    Eigen::Vector3d out;
    for (int i = 0; i < 3; ++i) {
        if (!v[i].is_number()) fail(where + "." + key, "expected numeric components");
        out[i] = v[i].get<double>();
    }
    return out;
}

cplx parse_complex(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        fail(where, "expected a [re, im] pair");
    return {v[0].get<double>(), v[1].get<double>()};
}

json complex_to_json(const cplx& z) { return json::array({z.real(), z.imag()}); }

}  // namespace

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("config: " + path + ": " + e.what());
    }
    return j;
}

Scene parse_scene(const json& j) {
    Scene scene;
    scene.wavelength = need_number(j, "wavelength", "scene");
    const json& src = need(j, "source", "scene");
    scene.source_position = need_vec3(src, "position", "scene.source");
    scene.source_truncation = need_int(src, "truncation", "scene.source");

    const json& list = need(j, "scatterers", "scene");
    if (!list.is_array()) fail("scene.scatterers", "expected an array");
    for (size_t i = 0; i < list.size(); ++i) {
        const std::string where = "scene.scatterers[" + std::to_string(i) + "]";
        const json& sj = list[i];
        Scatterer sc;
        sc.anchor = need_vec3(sj, "anchor", where);
        if (sj.contains("offset")) sc.offset = need_vec3(sj, "offset", where);
        sc.truncation = need_int(sj, "truncation", where);
        const int blk = mode_count(sc.truncation);
        if (sj.contains("t_diag") == sj.contains("t_full"))
            fail(where, "exactly one of 't_diag' or 't_full' is required");
        if (sj.contains("t_diag")) {
            const json& td = sj["t_diag"];
            if (!td.is_array() || static_cast<int>(td.size()) != blk)
                fail(where + ".t_diag", "expected " + std::to_string(blk) + " [re, im] entries");
            sc.t_matrix = Eigen::MatrixXcd::Zero(blk, blk);
            sc.diagonal = true;
            for (int d = 0; d < blk; ++d)
                sc.t_matrix(d, d) = parse_complex(td[d], where + ".t_diag[" + std::to_string(d) + "]");
        } else {
            const json& tf = sj["t_full"];
            if (!tf.is_array() || static_cast<int>(tf.size()) != blk) fail(where + ".t_full", "expected a square matrix");
            sc.t_matrix = Eigen::MatrixXcd::Zero(blk, blk);
            sc.diagonal = false;
            for (int r = 0; r < blk; ++r) {
                if (!tf[r].is_array() || static_cast<int>(tf[r].size()) != blk)
                    fail(where + ".t_full", "expected a square matrix");
                for (int c = 0; c < blk; ++c)
                    sc.t_matrix(r, c) = parse_complex(tf[r][c], where + ".t_full");
            }
        }
        scene.scatterers.push_back(std::move(sc));
    }
    if (!scene.scatterers.empty())
        scene.inter_truncation = scene.scatterers.front().truncation;
    else if (j.contains("inter_truncation"))
        scene.inter_truncation = need_int(j, "inter_truncation", "scene");
    scene.validate();
    return scene;
}

json scene_to_json(const Scene& scene) {
    json j;
    j["wavelength"] = scene.wavelength;
    j["source"] = {{"position", {scene.source_position[0], scene.source_position[1], scene.source_position[2]}},
                   {"truncation", scene.source_truncation}};
    j["scatterers"] = json::array();
    for (const auto& sc : scene.scatterers) {
        json sj;
        sj["anchor"] = {sc.anchor[0], sc.anchor[1], sc.anchor[2]};
        sj["offset"] = {sc.offset[0], sc.offset[1], sc.offset[2]};
        sj["truncation"] = sc.truncation;
        const int blk = static_cast<int>(sc.t_matrix.rows());
        if (sc.diagonal) {
            json td = json::array();
            for (int d = 0; d < blk; ++d) td.push_back(complex_to_json(sc.t_matrix(d, d)));
            sj["t_diag"] = std::move(td);
        } else {
            json tf = json::array();
            for (int r = 0; r < blk; ++r) {
                json row = json::array();
                for (int c = 0; c < blk; ++c) row.push_back(complex_to_json(sc.t_matrix(r, c)));
                tf.push_back(std::move(row));
            }
            sj["t_full"] = std::move(tf);
        }
        j["scatterers"].push_back(std::move(sj));
    }
    return j;
}

GridSpec parse_grid(const json& j) {
    GridSpec g;
    g.corner_min = need_vec3(j, "corner_min", "grid");
    g.corner_max = need_vec3(j, "corner_max", "grid");
    g.nx = need_int(j, "nx", "grid");
    g.ny = need_int(j, "ny", "grid");
    g.plane_axis = need_int(j, "plane_axis", "grid");
    if (g.nx < 1 || g.ny < 1) fail("grid", "nx and ny must be >= 1");
    if (g.plane_axis < 0 || g.plane_axis > 2) fail("grid.plane_axis", "must be 0, 1 or 2");
    return g;
}

SolverConfig parse_solver(const json& j) {
    SolverConfig c;
    const json& m = need(j, "method", "solver");
    if (!m.is_string()) fail("solver.method", "expected a string");
    const std::string name = m.get<std::string>();
    if (name == "direct")
        c.method = SolverMethod::Direct;
    else if (name == "jacobi")
        c.method = SolverMethod::Jacobi;
    else if (name == "gauss_seidel")
        c.method = SolverMethod::GaussSeidel;
    else if (name == "sor")
        c.method = SolverMethod::Sor;
    else
        fail("solver.method", "unknown method '" + name + "'");
    if (j.contains("omega")) c.omega = need_number(j, "omega", "solver");
    if (j.contains("max_iters")) c.max_iters = need_int(j, "max_iters", "solver");
    if (j.contains("tol")) c.tol = need_number(j, "tol", "solver");
    if (c.method == SolverMethod::Sor && !(c.omega > 0.0 && c.omega < 2.0))
        fail("solver.omega", "must lie in (0, 2)");
    if (c.max_iters < 0) fail("solver.max_iters", "must be >= 0");
    if (c.tol < 0.0) fail("solver.tol", "must be >= 0");
    return c;
}

BeamPattern parse_beam(const json& j) {
    BeamPattern b;
    b.amplitude = need_number(j, "A", "beam");
    b.k_theta = need_number(j, "k_theta", "beam");
    b.k_phi = need_number(j, "k_phi", "beam");
    b.sigma = need_number(j, "sigma", "beam");
    b.theta0 = need_number(j, "theta0_deg", "beam") * kDegToRad;
    b.phi0 = need_number(j, "phi0_deg", "beam") * kDegToRad;
    if (!(b.amplitude > 0.0)) fail("beam.A", "must be positive");
    if (!(b.sigma > 0.0)) fail("beam.sigma", "must be positive");
    return b;
}

ModalVector parse_source(const json& j, int truncation) {
    const int n = mode_count(truncation);
    if (j.contains("source_coefficients") == j.contains("source_mode"))
        fail("source", "exactly one of 'source_coefficients' or 'source_mode' is required");
    if (j.contains("source_mode")) {
        const json& m = j["source_mode"];
        const int l = need_int(m, "l", "source_mode");
        const int p = need_int(m, "p", "source_mode");
        if (l < 0 || l > truncation || std::abs(p) > l) fail("source_mode", "mode outside the truncation");
        return ModalVector::unit({l, p}, truncation);
    }
    const json& arr = j["source_coefficients"];
    if (!arr.is_array() || static_cast<int>(arr.size()) != n)
        fail("source_coefficients", "expected " + std::to_string(n) + " [re, im] entries");
    ModalVector s = ModalVector::zero(truncation);
    for (int i = 0; i < n; ++i)
        s.coefficients[i] = parse_complex(arr[i], "source_coefficients[" + std::to_string(i) + "]");
    return s;
}

void write_text_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string radiomap_csv(const Radiomap& map) {
    std::string out = "x,y,z,re,im,abs\n";
    const Eigen::VectorXcd* field = &map.total;
    if (map.component_selector == FieldComponent::Direct) field = &map.direct;
    if (map.component_selector == FieldComponent::Scattered) field = &map.scattered;
    for (size_t i = 0; i < map.grid.size(); ++i) {
        const cplx v = (*field)[static_cast<Eigen::Index>(i)];
        out += format_double(map.grid[i][0]) + "," + format_double(map.grid[i][1]) + "," +
               format_double(map.grid[i][2]) + "," + format_double(v.real()) + "," +
               format_double(v.imag()) + "," + format_double(std::abs(v)) + "\n";
    }
    return out;
}

std::string convergence_csv(const std::vector<std::pair<std::string, std::vector<double>>>& histories) {
    std::string out = "iteration,method,residual\n";
    for (const auto& [method, residuals] : histories)
        for (size_t i = 0; i < residuals.size(); ++i)
            out += std::to_string(i + 1) + "," + method + "," + format_double(residuals[i]) + "\n";
    return out;
}

std::string loss_csv(const std::vector<double>& train, const std::vector<double>& val) {
    if (train.size() != val.size()) throw std::invalid_argument("loss_csv: history length mismatch");
    std::string out = "epoch,train_loss,val_loss\n";
    for (size_t i = 0; i < train.size(); ++i)
        out += std::to_string(i) + "," + format_double(train[i]) + "," + format_double(val[i]) + "\n";
    return out;
}

std::string beam_coeffs_csv(const ModalVector& s) {
    std::string out = "l,p,re,im\n";
    for (int i = 0; i < mode_count(s.truncation); ++i) {
        const ModeIndex idx = mode_unflatten(i);
        out += std::to_string(idx.l) + "," + std::to_string(idx.p) + "," +
               format_double(s.coefficients[i].real()) + "," + format_double(s.coefficients[i].imag()) + "\n";
    }
    return out;
}

uint64_t fnv1a(const std::string& data) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_manifest(const std::string& out_dir, const std::string& command, const json& config,
                    uint64_t seed, const std::vector<std::pair<std::string, std::string>>& artifacts) {
    json m;
    m["command"] = command;
    m["seed"] = seed;
    m["config"] = config;
    json sums;
    for (const auto& [name, content] : artifacts) {
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(content)));
        sums[name] = buf;
    }
    m["artifacts"] = std::move(sums);
    write_text_atomic(out_dir + "/manifest.json", m.dump(2) + "\n");
}

}  // namespace modalwave::io
