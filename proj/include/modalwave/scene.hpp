#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modalwave/modal.hpp"

namespace modalwave {

/// Scattering object: anchor position plus learnable offset, modal response
/// given by its T-matrix at the stated truncation order.
struct Scatterer {
    Eigen::Vector3d anchor = Eigen::Vector3d::Zero();
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();
    Eigen::MatrixXcd t_matrix;  // (L+1)^2 x (L+1)^2, off-diagonal exactly 0 when diagonal
    bool diagonal = true;
    int truncation = 0;

    Eigen::Vector3d position() const { return anchor + offset; }
};

struct Scene {
    double wavelength = 1.0;
    Eigen::Vector3d source_position = Eigen::Vector3d::Zero();
    int source_truncation = 0;       // N
    int inter_truncation = 0;        // L shared by all scatterers
    std::vector<Scatterer> scatterers;

    double k() const;
    /// Throws if positions coincide, truncations disagree, or T shapes are off.
    void validate() const;
};

enum class SolverMethod { Direct, Jacobi, GaussSeidel, Sor };

struct SolverConfig {
    SolverMethod method = SolverMethod::Direct;
    double omega = 1.0;       // SOR relaxation factor
    int max_iters = 100;
    double tol = 1e-8;        // relative residual; 0 means run exactly max_iters
};

enum class FieldComponent { Direct, Scattered, Total };

/// Receiver plane: a regular grid between two corners, constant along one axis.
struct GridSpec {
    Eigen::Vector3d corner_min = Eigen::Vector3d::Zero();
    Eigen::Vector3d corner_max = Eigen::Vector3d::Zero();
    int nx = 1;
    int ny = 1;
    int plane_axis = 2;  // 0=x, 1=y, 2=z (the held-constant axis)

    /// Row-major points, outer loop over the second in-plane axis.
    std::vector<Eigen::Vector3d> points() const;
};

struct Radiomap {
    std::vector<Eigen::Vector3d> grid;
    Eigen::VectorXcd direct;
    Eigen::VectorXcd scattered;
    Eigen::VectorXcd total;  // direct + scattered, exact
    FieldComponent component_selector = FieldComponent::Total;
};

/// Direct (line-of-sight) field at r. Singular at the source.
cplx eval_direct(const Scene& scene, const ModalVector& s, const Eigen::Vector3d& r);

/// Scattered field at r from stacked per-scatterer outgoing coefficients b.
cplx eval_scattered(const Scene& scene, const Eigen::VectorXcd& b, const Eigen::Vector3d& r);

/// Solves the coupled system once, then evaluates fields on the grid.
Radiomap compute_radiomap(const Scene& scene, const ModalVector& s,
                          const std::vector<Eigen::Vector3d>& grid, FieldComponent components,
                          const SolverConfig& solver);

/// Replaces every scatterer by `replicas_per_anchor` copies truncated at L2,
/// seeded uniformly in a ball of `placement_radius` around the anchor.
/// T-matrices of the replicas are zero-initialized (the fit initializes them).
Scene expand_virtual_scene(const Scene& scene, int L2, int replicas_per_anchor,
                           double placement_radius, uint64_t seed);

/// NMSE = sum |a-b|^2 / sum |b|^2 over two equally sized complex samples.
double nmse(const Eigen::VectorXcd& prediction, const Eigen::VectorXcd& truth);
double mse(const Eigen::VectorXcd& prediction, const Eigen::VectorXcd& truth);
double mae(const Eigen::VectorXcd& prediction, const Eigen::VectorXcd& truth);

}  // namespace modalwave
