#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "modalwave/modal.hpp"

namespace modalwave {

/// Gaussian beam pattern with separate angular widths and a steering
/// direction; angles in radians.
struct BeamPattern {
    double amplitude = 1.0;
    double k_theta = 1.0;
    double k_phi = 1.0;
    double sigma = 1.0;
    double theta0 = 0.0;
    double phi0 = 0.0;
};

/// Pattern value at (theta, phi). The phi deviation is wrapped to (-pi, pi]
/// so beams steered near the seam behave sensibly.
double gaussian_beam(const BeamPattern& pattern, double theta, double phi);

/// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// Projects a far-field angular profile onto spherical harmonics by exact
/// band-limited quadrature and divides out the radial factor h_l(k r0).
/// Requires k*r0 >= 10*(L_max+1)^2 so the sphere at r0 is in the far field.
ModalVector fit_beam_coefficients(const std::function<cplx(double, double)>& profile, int L_max,
                                  double r0, double k);
ModalVector fit_beam_coefficients(const BeamPattern& pattern, int L_max, double r0, double k);

/// Field of the fitted coefficients back on the sphere of radius r0:
/// sum_lm s_l^m h_l(k r0) Y_l^m(theta, phi).
cplx synthesize_pattern(const ModalVector& s, double k, double r0, double theta, double phi);

/// Largest |original - synthesized| over a dense angular grid.
double max_pattern_deviation(const BeamPattern& pattern, const ModalVector& s, double k, double r0,
                             int n_theta = 181, int n_phi = 360);

/// Learned beam-space system function Q = B S^H (S S^H + mu I)^{-1} mapping
/// source coefficients to stacked scattering coefficients.
struct BeamSystem {
    Eigen::MatrixXcd B;   // J(L+1)^2 x q
    Eigen::MatrixXcd S;   // (N+1)^2 x q
    Eigen::MatrixXcd Q;
    double mu = 0.0;
    double condition_S = 0.0;  // sigma_max / sigma_min
    bool ill_posed = false;    // mu == 0 with numerically singular S S^H
};

/// Throws std::runtime_error when mu == 0 and S S^H is numerically singular.
BeamSystem build_system_function(const Eigen::MatrixXcd& B, const Eigen::MatrixXcd& S, double mu);

Eigen::VectorXcd extrapolate_beam(const BeamSystem& system, const Eigen::VectorXcd& s_new);

}  // namespace modalwave
