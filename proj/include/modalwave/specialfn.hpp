#pragma once

#include <complex>

#include <Eigen/Dense>

namespace modalwave {

using cplx = std::complex<double>;

/// Point in spherical coordinates: radius r >= 0, elevation theta in [0, pi]
/// measured from +z, azimuth phi normalized into [0, 2*pi).
struct SphericalPoint {
    double r = 0.0;
    double theta = 0.0;
    double phi = 0.0;

    static SphericalPoint from_cartesian(const Eigen::Vector3d& v);
    Eigen::Vector3d to_cartesian() const;
};

inline constexpr int kMaxOrder = 128;

/// Spherical Bessel function of the first kind j_l(x), x >= 0.
/// Downward (Miller) recurrence for l > x, upward otherwise.
double spherical_bessel_j(int l, double x);

/// Spherical Bessel function of the second kind y_l(x), x > 0.
double spherical_bessel_y(int l, double x);

/// Spherical Hankel function of the first kind h_l^(1)(x) = j_l(x) + i*y_l(x), x > 0.
cplx spherical_hankel1(int n, double x);

// Derivatives via z_l'(x) = z_{l-1}(x) - (l+1)/x * z_l(x).
double spherical_bessel_j_prime(int l, double x);
double spherical_bessel_y_prime(int l, double x);
cplx spherical_hankel1_prime(int n, double x);

/// Orthonormal complex spherical harmonic Y_l^m(theta, phi) with
/// Condon-Shortley phase.
cplx sph_harm(int l, int m, double theta, double phi);

/// Fills table[l*(l+1)+m] = Y_l^m(theta, phi) for all 0 <= l <= lmax, |m| <= l.
/// Pole-safe (pure Legendre recurrence, no division by sin(theta)).
void sph_harm_table(int lmax, double theta, double phi, cplx* table);

/// Wigner-3j symbol via the Racah single-sum formula with log-factorial
/// accumulation. Inputs violating the selection rules return exactly 0.
double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3);

/// log(n!)
double log_factorial(int n);

}  // namespace modalwave
