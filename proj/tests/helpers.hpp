#pragma once

// Seeded scene construction shared by unit and acceptance tests.

#include <random>

#include "modalwave/coupling.hpp"
#include "modalwave/scene.hpp"

namespace testutil {

using namespace modalwave;

// Random diagonal-T scene: scatterers scattered in a shell around the origin,
// source off to the side.
inline Scene random_scene(uint64_t seed, int J, int L, double t_scale, double spread = 10.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    Scene scene;
    scene.wavelength = 1.0;
    scene.source_position = {0.0, 0.0, -20.0};
    scene.source_truncation = 2;
    scene.inter_truncation = L;
    const int blk = mode_count(L);
    for (int j = 0; j < J; ++j) {
        Scatterer sc;
        while (true) {
            sc.anchor = {spread * uni(rng), spread * uni(rng), spread * uni(rng)};
            bool ok = (sc.anchor - scene.source_position).norm() > 2.0;
            for (const auto& other : scene.scatterers)
                ok = ok && (sc.anchor - other.anchor).norm() > 1.5;
            if (ok) break;
        }
        sc.truncation = L;
        sc.diagonal = true;
        Eigen::VectorXcd d(blk);
        for (int i = 0; i < blk; ++i) d[i] = t_scale * cplx(gauss(rng), gauss(rng));
        sc.t_matrix = d.asDiagonal();
        scene.scatterers.push_back(std::move(sc));
    }
    return scene;
}

// Rescales every T so the Jacobi iteration matrix has the requested spectral
// radius (rho is homogeneous of degree 1 in a global T scale).
inline void set_jacobi_radius(Scene& scene, const ModalVector& s, double target) {
    const BlockSystem sys = assemble(scene, s);
    const double rho = spectral_radius(sys, SolverMethod::Jacobi);
    if (rho == 0.0) return;
    for (auto& sc : scene.scatterers) sc.t_matrix *= target / rho;
}

inline ModalVector random_source(uint64_t seed, int truncation) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    ModalVector s = ModalVector::zero(truncation);
    for (int i = 0; i < s.coefficients.size(); ++i) s.coefficients[i] = cplx(gauss(rng), gauss(rng));
    return s;
}

}  // namespace testutil
