#include "modalwave/modal.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace modalwave {

int mode_flatten(int l, int p) {
    if (l < 0 || std::abs(p) > l) throw std::invalid_argument("mode_flatten: require |p| <= l");
    return l * l + l + p;
}

ModeIndex mode_unflatten(int flat) {
    if (flat < 0) throw std::invalid_argument("mode_unflatten: negative index");
    const int l = static_cast<int>(std::sqrt(static_cast<double>(flat)));
    return {l, flat - l * l - l};
}

ModalVector ModalVector::zero(int truncation) {
    return {Eigen::VectorXcd::Zero(mode_count(truncation)), truncation};
}

ModalVector ModalVector::unit(ModeIndex mode, int truncation) {
    ModalVector v = zero(truncation);
    v.coefficients[mode_flatten(mode)] = 1.0;
    return v;
}

cplx eval_outgoing(ModeIndex mode, double k, const Eigen::Vector3d& point) {
    const SphericalPoint sp = SphericalPoint::from_cartesian(point);
    return spherical_hankel1(mode.l, k * sp.r) * sph_harm(mode.l, mode.p, sp.theta, sp.phi);
}

cplx eval_regular(ModeIndex mode, double k, const Eigen::Vector3d& point) {
    const SphericalPoint sp = SphericalPoint::from_cartesian(point);
    if (sp.r == 0.0) return mode.l == 0 ? cplx(0.28209479177387814347, 0.0) : cplx(0.0, 0.0);
    return spherical_bessel_j(mode.l, k * sp.r) * sph_harm(mode.l, mode.p, sp.theta, sp.phi);
}

void eval_outgoing_table(int lmax, double k, const Eigen::Vector3d& point, cplx* out) {
    const SphericalPoint sp = SphericalPoint::from_cartesian(point);
    if (sp.r == 0.0) throw std::invalid_argument("eval_outgoing_table: singular at the expansion center");
    std::vector<cplx> ylm(mode_count(lmax));
    sph_harm_table(lmax, sp.theta, sp.phi, ylm.data());
    const double x = k * sp.r;
    for (int l = 0; l <= lmax; ++l) {
        const cplx h = spherical_hankel1(l, x);
        for (int p = -l; p <= l; ++p) {
            const int i = l * l + l + p;
            out[i] = h * ylm[i];
        }
    }
}

void grad_outgoing_table(int lmax, double k, const Eigen::Vector3d& point, Eigen::Vector3cd* out) {
    const SphericalPoint sp = SphericalPoint::from_cartesian(point);
    if (sp.r == 0.0) throw std::invalid_argument("grad_outgoing_table: singular at the expansion center");
    std::vector<cplx> ylm(mode_count(lmax));
    sph_harm_table(lmax, sp.theta, sp.phi, ylm.data());

    const double x = k * sp.r;
    const double ct = std::cos(sp.theta), st = std::sin(sp.theta);
    const double cp = std::cos(sp.phi), spn = std::sin(sp.phi);
    const Eigen::Vector3d er(st * cp, st * spn, ct);
    const Eigen::Vector3d etheta(ct * cp, ct * spn, -st);
    const Eigen::Vector3d ephi(-spn, cp, 0.0);
    const cplx eip = std::polar(1.0, sp.phi);
    const cplx eim = std::conj(eip);

    auto Y = [&](int l, int m) -> cplx {
        if (l < 0 || std::abs(m) > l) return {0.0, 0.0};
        return ylm[l * l + l + m];
    };

    for (int l = 0; l <= lmax; ++l) {
        const cplx h = spherical_hankel1(l, x);
        const cplx hp = spherical_hankel1_prime(l, x);
        for (int m = -l; m <= l; ++m) {
            // dY/d(theta), pole-safe same-degree identity
            const cplx dtheta =
                0.5 * (std::sqrt(static_cast<double>(l - m) * (l + m + 1)) * eim * Y(l, m + 1) -
                       std::sqrt(static_cast<double>(l + m) * (l - m + 1)) * eip * Y(l, m - 1));
            // m/sin(theta) * Y_l^m via degree-(l-1) harmonics
            cplx msin{0.0, 0.0};
            if (l > 0) {
                msin = -0.5 * std::sqrt((2.0 * l + 1.0) / (2.0 * l - 1.0)) *
                       (std::sqrt(static_cast<double>(l + m) * (l + m - 1)) * eip * Y(l - 1, m - 1) +
                        std::sqrt(static_cast<double>(l - m) * (l - m - 1)) * eim * Y(l - 1, m + 1));
            }
            const int i = l * l + l + m;
            const cplx radial = k * hp * ylm[i];
            const cplx tang = h / sp.r * dtheta;
            const cplx azim = h / sp.r * cplx(0.0, 1.0) * msin;
            out[i] = radial * er.cast<cplx>() + tang * etheta.cast<cplx>() + azim * ephi.cast<cplx>();
        }
    }
}

Eigen::Vector3cd grad_outgoing(ModeIndex mode, double k, const Eigen::Vector3d& point) {
    std::vector<Eigen::Vector3cd> table(mode_count(mode.l));
    grad_outgoing_table(mode.l, k, point, table.data());
    return table[mode_flatten(mode)];
}

cplx eval_source_field(const ModalVector& s, double k, const Eigen::Vector3d& point) {
    std::vector<cplx> u(mode_count(s.truncation));
    eval_outgoing_table(s.truncation, k, point, u.data());
    cplx acc{0.0, 0.0};
    for (int i = 0; i < s.coefficients.size(); ++i) acc += s.coefficients[i] * u[i];
    return acc;
}

}  // namespace modalwave
