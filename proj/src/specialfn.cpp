#include "modalwave/specialfn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace modalwave {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_order(int l) {
    if (l < 0) throw std::invalid_argument("order must be nonnegative");
    if (l > kMaxOrder) throw std::invalid_argument("order exceeds supported maximum");
}

}  // namespace

SphericalPoint SphericalPoint::from_cartesian(const Eigen::Vector3d& v) {
    SphericalPoint p;
    p.r = v.norm();
    if (p.r == 0.0) return p;
    p.theta = std::acos(std::clamp(v.z() / p.r, -1.0, 1.0));
    p.phi = std::atan2(v.y(), v.x());
    if (p.phi < 0.0) p.phi += kTwoPi;
    return p;
}

Eigen::Vector3d SphericalPoint::to_cartesian() const {
    const double st = std::sin(theta);
    return {r * st * std::cos(phi), r * st * std::sin(phi), r * std::cos(theta)};
}

double spherical_bessel_j(int l, double x) {
    check_order(l);
    if (!std::isfinite(x) || x < 0.0) throw std::invalid_argument("spherical_bessel_j: x must be finite and >= 0");
    if (x == 0.0) return l == 0 ? 1.0 : 0.0;
    if (l == 0) return std::sin(x) / x;
    const double j0 = std::sin(x) / x;
    const double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
    if (l == 1) return j1;

    if (x >= static_cast<double>(l)) {
        // upward recurrence, stable for x above the order
        double jm = j0, jc = j1;
        for (int n = 1; n < l; ++n) {
            const double jn = (2 * n + 1) / x * jc - jm;
            jm = jc;
            jc = jn;
        }
        return jc;
    }

    // Miller downward recurrence with normalization against j_0 or j_1
    const int start = l + 30 + static_cast<int>(x);
    double fp = 0.0, fc = 1e-30, result = 0.0;
    for (int n = start; n >= 0; --n) {
        const double fm = (2 * n + 3) / x * fc - fp;
        fp = fc;
        fc = fm;
        if (n == l) result = fc;
        if (std::abs(fc) > 1e250) {  // rescale to avoid overflow
            fc *= 1e-250;
            fp *= 1e-250;
            result *= 1e-250;
        }
    }
    // fc now holds the unnormalized j_0, fp the unnormalized j_1
    if (std::abs(j0) >= std::abs(j1)) return result * (j0 / fc);
    return result * (j1 / fp);
}

double spherical_bessel_y(int l, double x) {
    check_order(l);
    if (!std::isfinite(x) || x <= 0.0) throw std::invalid_argument("spherical_bessel_y: x must be finite and > 0");
    const double y0 = -std::cos(x) / x;
    if (l == 0) return y0;
    const double y1 = -std::cos(x) / (x * x) - std::sin(x) / x;
    double ym = y0, yc = y1;
    for (int n = 1; n < l; ++n) {
        const double yn = (2 * n + 1) / x * yc - ym;
        ym = yc;
        yc = yn;
    }
    return yc;
}

cplx spherical_hankel1(int n, double x) {
    if (!std::isfinite(x) || x <= 0.0) throw std::invalid_argument("spherical_hankel1: singular evaluation, x must be > 0");
    return {spherical_bessel_j(n, x), spherical_bessel_y(n, x)};
}

double spherical_bessel_j_prime(int l, double x) {
    if (l == 0) return x == 0.0 ? 0.0 : -spherical_bessel_j(1, x);
    return spherical_bessel_j(l - 1, x) - (l + 1) / x * spherical_bessel_j(l, x);
}

double spherical_bessel_y_prime(int l, double x) {
    if (l == 0) return -spherical_bessel_y(1, x);
    return spherical_bessel_y(l - 1, x) - (l + 1) / x * spherical_bessel_y(l, x);
}

cplx spherical_hankel1_prime(int n, double x) {
    return {spherical_bessel_j_prime(n, x), spherical_bessel_y_prime(n, x)};
}

void sph_harm_table(int lmax, double theta, double phi, cplx* table) {
    check_order(lmax);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);

    // Normalized associated Legendre P~_l^m (m >= 0) such that
    // Y_l^m = P~_l^m(cos theta) * exp(i m phi), Condon-Shortley included.
    std::vector<double> P((lmax + 1) * (lmax + 2) / 2);
    auto idx = [](int l, int m) { return l * (l + 1) / 2 + m; };
    P[0] = 0.28209479177387814347;  // 1/sqrt(4 pi)
    for (int m = 1; m <= lmax; ++m)
        P[idx(m, m)] = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st * P[idx(m - 1, m - 1)];
    for (int m = 0; m < lmax; ++m)
        P[idx(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * ct * P[idx(m, m)];
    for (int m = 0; m <= lmax; ++m) {
        for (int l = m + 2; l <= lmax; ++l) {
            const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
            const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - static_cast<double>(m) * m) /
                                       (4.0 * static_cast<double>(l - 1) * (l - 1) - 1.0));
            P[idx(l, m)] = a * (ct * P[idx(l - 1, m)] - b * P[idx(l - 2, m)]);
        }
    }

    for (int l = 0; l <= lmax; ++l) {
        for (int m = 0; m <= l; ++m) {
            const cplx e = std::polar(1.0, m * phi);
            const cplx ylm = P[idx(l, m)] * e;
            table[l * (l + 1) + m] = ylm;
            if (m > 0) {
                const double sign = (m % 2 == 0) ? 1.0 : -1.0;
                table[l * (l + 1) - m] = sign * std::conj(ylm);
            }
        }
    }
}

cplx sph_harm(int l, int m, double theta, double phi) {
    check_order(l);
    if (std::abs(m) > l) throw std::invalid_argument("sph_harm: |m| must not exceed l");
    std::vector<cplx> table((l + 1) * (l + 1));
    sph_harm_table(l, theta, phi, table.data());
    return table[l * (l + 1) + m];
}

double log_factorial(int n) {
    static const std::array<double, 513> table = [] {
        std::array<double, 513> t{};
        for (int i = 0; i < 513; ++i) t[i] = std::lgamma(i + 1.0);
        return t;
    }();
    return table[static_cast<size_t>(n)];
}

double wigner3j(int j1, int j2, int j3, int m1, int m2, int m3) {
    if (j1 < 0 || j2 < 0 || j3 < 0) throw std::invalid_argument("wigner3j: negative j");
    if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3)
        throw std::invalid_argument("wigner3j: |m| exceeds j");
    if (m1 + m2 + m3 != 0) return 0.0;
    if (j3 < std::abs(j1 - j2) || j3 > j1 + j2) return 0.0;

    const double log_delta = log_factorial(j1 + j2 - j3) + log_factorial(j1 - j2 + j3) +
                             log_factorial(-j1 + j2 + j3) - log_factorial(j1 + j2 + j3 + 1);
    const double log_num = log_factorial(j1 + m1) + log_factorial(j1 - m1) +
                           log_factorial(j2 + m2) + log_factorial(j2 - m2) +
                           log_factorial(j3 + m3) + log_factorial(j3 - m3);
    const double common = 0.5 * (log_delta + log_num);

    const int t_min = std::max({0, j2 - j3 - m1, j1 - j3 + m2});
    const int t_max = std::min({j1 + j2 - j3, j1 - m1, j2 + m2});

    // scale by the largest term exponent to keep the alternating sum stable
    std::vector<double> exps;
    exps.reserve(t_max - t_min + 1);
    double e_max = -1e300;
    for (int t = t_min; t <= t_max; ++t) {
        const double e = common - log_factorial(t) - log_factorial(j3 - j2 + t + m1) -
                         log_factorial(j3 - j1 + t - m2) - log_factorial(j1 + j2 - j3 - t) -
                         log_factorial(j1 - t - m1) - log_factorial(j2 - t + m2);
        exps.push_back(e);
        e_max = std::max(e_max, e);
    }
    double sum = 0.0;
    for (int t = t_min; t <= t_max; ++t) {
        const double term = std::exp(exps[t - t_min] - e_max);
        sum += (t % 2 == 0) ? term : -term;
    }
    const int phase = j1 - j2 - m3;
    const double sign = (((phase % 2) + 2) % 2 == 0) ? 1.0 : -1.0;
    return sign * sum * std::exp(e_max);
}

}  // namespace modalwave
