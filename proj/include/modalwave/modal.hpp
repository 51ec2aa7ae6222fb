#pragma once

#include <complex>

#include <Eigen/Dense>

#include "modalwave/specialfn.hpp"

namespace modalwave {

/// (degree, order) pair with |p| <= l, flattened as l^2 + l + p.
struct ModeIndex {
    int l = 0;
    int p = 0;
};

int mode_flatten(int l, int p);
inline int mode_flatten(ModeIndex m) { return mode_flatten(m.l, m.p); }
ModeIndex mode_unflatten(int flat);

inline int mode_count(int truncation) { return (truncation + 1) * (truncation + 1); }

/// Complex coefficient vector over the truncated mode set, length (L+1)^2,
/// ordered by mode_flatten.
struct ModalVector {
    Eigen::VectorXcd coefficients;
    int truncation = 0;

    static ModalVector zero(int truncation);
    static ModalVector unit(ModeIndex mode, int truncation);
};

/// Outgoing basis h_l^(1)(kr) Y_l^p at a Cartesian point relative to the
/// expansion center. Singular at the center.
cplx eval_outgoing(ModeIndex mode, double k, const Eigen::Vector3d& point);

/// Regular basis j_l(kr) Y_l^p; finite everywhere.
cplx eval_regular(ModeIndex mode, double k, const Eigen::Vector3d& point);

/// All outgoing basis values for l <= lmax at one point; out has (lmax+1)^2 slots.
void eval_outgoing_table(int lmax, double k, const Eigen::Vector3d& point, cplx* out);

/// Cartesian gradient of the outgoing basis for every mode l <= lmax.
/// Pole-safe: angular derivatives use same-degree / lower-degree harmonic
/// identities rather than division by sin(theta).
void grad_outgoing_table(int lmax, double k, const Eigen::Vector3d& point, Eigen::Vector3cd* out);

Eigen::Vector3cd grad_outgoing(ModeIndex mode, double k, const Eigen::Vector3d& point);

/// Source field sum_{n,m} s_n^m u_n^m(point), point relative to the source center.
cplx eval_source_field(const ModalVector& s, double k, const Eigen::Vector3d& point);

}  // namespace modalwave
