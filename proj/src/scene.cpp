#include "modalwave/scene.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "modalwave/coupling.hpp"

namespace modalwave {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

double Scene::k() const { return kTwoPi / wavelength; }

void Scene::validate() const {
    if (!(wavelength > 0.0)) throw std::invalid_argument("scene: wavelength must be positive");
    if (source_truncation < 0 || inter_truncation < 0) throw std::invalid_argument("scene: negative truncation");
    const int blk = mode_count(inter_truncation);
    for (size_t j = 0; j < scatterers.size(); ++j) {
        const auto& sc = scatterers[j];
        if (sc.truncation != inter_truncation)
            throw std::invalid_argument("scene: scatterer " + std::to_string(j) + " truncation differs from scene order");
        if (sc.t_matrix.rows() != blk || sc.t_matrix.cols() != blk)
            throw std::invalid_argument("scene: scatterer " + std::to_string(j) + " T-matrix has wrong shape");
        if (sc.diagonal && !sc.t_matrix.isDiagonal(0.0))
            throw std::invalid_argument("scene: scatterer " + std::to_string(j) + " marked diagonal but has off-diagonal entries");
        if ((sc.position() - source_position).norm() == 0.0)
            throw std::invalid_argument("scene: scatterer " + std::to_string(j) + " coincides with the source");
        for (size_t i = 0; i < j; ++i) {
            if ((sc.position() - scatterers[i].position()).norm() == 0.0)
                throw std::invalid_argument("scene: scatterers " + std::to_string(i) + " and " + std::to_string(j) +
                                            " coincide");
        }
    }
}

std::vector<Eigen::Vector3d> GridSpec::points() const {
    if (nx < 1 || ny < 1) throw std::invalid_argument("grid: sample counts must be >= 1");
    if (plane_axis < 0 || plane_axis > 2) throw std::invalid_argument("grid: plane_axis must be 0, 1 or 2");
    const int u_axis = plane_axis == 0 ? 1 : 0;
    const int v_axis = plane_axis == 2 ? 1 : 2;
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(static_cast<size_t>(nx) * ny);
    for (int iv = 0; iv < ny; ++iv) {
        for (int iu = 0; iu < nx; ++iu) {
            Eigen::Vector3d p = corner_min;
            const double fu = nx > 1 ? static_cast<double>(iu) / (nx - 1) : 0.0;
            const double fv = ny > 1 ? static_cast<double>(iv) / (ny - 1) : 0.0;
            p[u_axis] = corner_min[u_axis] + fu * (corner_max[u_axis] - corner_min[u_axis]);
            p[v_axis] = corner_min[v_axis] + fv * (corner_max[v_axis] - corner_min[v_axis]);
            p[plane_axis] = corner_min[plane_axis];
            pts.push_back(p);
        }
    }
    return pts;
}

cplx eval_direct(const Scene& scene, const ModalVector& s, const Eigen::Vector3d& r) {
    if ((r - scene.source_position).norm() == 0.0)
        throw std::invalid_argument("eval_direct: singular at the source position");
    return eval_source_field(s, scene.k(), r - scene.source_position);
}

cplx eval_scattered(const Scene& scene, const Eigen::VectorXcd& b, const Eigen::Vector3d& r) {
    const int blk = mode_count(scene.inter_truncation);
    if (b.size() != static_cast<Eigen::Index>(blk * scene.scatterers.size()))
        throw std::invalid_argument("eval_scattered: coefficient stack size mismatch");
    const double k = scene.k();
    std::vector<cplx> u(blk);
    cplx acc{0.0, 0.0};
    for (size_t j = 0; j < scene.scatterers.size(); ++j) {
        const Eigen::Vector3d rel = r - scene.scatterers[j].position();
        if (rel.norm() == 0.0) throw std::invalid_argument("eval_scattered: singular at a scatterer center");
        eval_outgoing_table(scene.inter_truncation, k, rel, u.data());
        for (int i = 0; i < blk; ++i) acc += b[j * blk + i] * u[i];
    }
    return acc;
}

Radiomap compute_radiomap(const Scene& scene, const ModalVector& s,
                          const std::vector<Eigen::Vector3d>& grid, FieldComponent components,
                          const SolverConfig& solver) {
    scene.validate();
    Radiomap map;
    map.grid = grid;
    map.component_selector = components;
    const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
    map.direct = Eigen::VectorXcd::Zero(n);
    map.scattered = Eigen::VectorXcd::Zero(n);

    Eigen::VectorXcd b;
    if (components != FieldComponent::Direct && !scene.scatterers.empty()) {
        const BlockSystem sys = assemble(scene, s);
        const SolveReport report = solve(sys, solver);
        if (report.diverged) {
            std::string msg = "compute_radiomap: solver diverged after " + std::to_string(report.iterations) +
                              " iterations (last residual " +
                              std::to_string(report.residual_history.empty() ? 0.0 : report.residual_history.back()) + ")";
            throw std::runtime_error(msg);
        }
        b = report.solution;
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        if (components != FieldComponent::Scattered) map.direct[i] = eval_direct(scene, s, grid[i]);
        if (components != FieldComponent::Direct && b.size() > 0)
            map.scattered[i] = eval_scattered(scene, b, grid[i]);
    }
    map.total = map.direct + map.scattered;
    return map;
}

Scene expand_virtual_scene(const Scene& scene, int L2, int replicas_per_anchor, double placement_radius,
                           uint64_t seed) {
    if (L2 > scene.inter_truncation) throw std::invalid_argument("expand_virtual_scene: L2 must not exceed the scene order");
    if (replicas_per_anchor < 1) throw std::invalid_argument("expand_virtual_scene: need at least one replica per anchor");
    if (replicas_per_anchor > 1 && placement_radius <= 0.0)
        throw std::invalid_argument("expand_virtual_scene: placement radius would make replica centers coincide");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    auto ball = [&]() {
        Eigen::Vector3d v;
        do {
            v = {unit(rng), unit(rng), unit(rng)};
        } while (v.squaredNorm() > 1.0);
        return (v * placement_radius).eval();
    };

    Scene out;
    out.wavelength = scene.wavelength;
    out.source_position = scene.source_position;
    out.source_truncation = scene.source_truncation;
    out.inter_truncation = L2;
    const int blk = mode_count(L2);
    for (const auto& sc : scene.scatterers) {
        for (int r = 0; r < replicas_per_anchor; ++r) {
            Scatterer v;
            v.anchor = sc.position();
            v.offset = replicas_per_anchor > 1 ? ball() : Eigen::Vector3d::Zero();
            v.t_matrix = Eigen::MatrixXcd::Zero(blk, blk);
            v.diagonal = true;
            v.truncation = L2;
            out.scatterers.push_back(std::move(v));
        }
    }
    out.validate();
    return out;
}

double nmse(const Eigen::VectorXcd& prediction, const Eigen::VectorXcd& truth) {
    if (prediction.size() != truth.size()) throw std::invalid_argument("nmse: size mismatch");
    const double denom = truth.squaredNorm();
    if (denom == 0.0) throw std::invalid_argument("nmse: zero reference");
    return (prediction - truth).squaredNorm() / denom;
}

double mse(const Eigen::VectorXcd& prediction, const Eigen::VectorXcd& truth) {
    if (prediction.size() != truth.size()) throw std::invalid_argument("mse: size mismatch");
    return (prediction - truth).squaredNorm() / static_cast<double>(truth.size());
}

double mae(const Eigen::VectorXcd& prediction, const Eigen::VectorXcd& truth) {
    if (prediction.size() != truth.size()) throw std::invalid_argument("mae: size mismatch");
    return (prediction - truth).cwiseAbs().sum() / static_cast<double>(truth.size());
}

}  // namespace modalwave
