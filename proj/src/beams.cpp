#include "modalwave/beams.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "modalwave/specialfn.hpp"

namespace modalwave {

namespace {
constexpr double kPi = 3.1415926535897932384626433832795;
}

double gaussian_beam(const BeamPattern& pattern, double theta, double phi) {
    if (!(pattern.amplitude > 0.0)) throw std::invalid_argument("gaussian_beam: amplitude must be positive");
    if (!(pattern.sigma > 0.0)) throw std::invalid_argument("gaussian_beam: sigma must be positive");
    const double dt = theta - pattern.theta0;
    double dp = std::fmod(phi - pattern.phi0, 2.0 * kPi);
    if (dp > kPi) dp -= 2.0 * kPi;
    if (dp <= -kPi) dp += 2.0 * kPi;
    const double expo = (pattern.k_theta * dt * dt + pattern.k_phi * dp * dp) / (pattern.sigma * pattern.sigma);
    return pattern.amplitude * std::exp(-expo);
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence up to degree n
            double p0 = 1.0, p1 = x;
            for (int l = 2; l <= n; ++l) {
                const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

ModalVector fit_beam_coefficients(const std::function<cplx(double, double)>& profile, int L_max,
                                  double r0, double k) {
    if (L_max < 0) throw std::invalid_argument("fit_beam_coefficients: negative order");
    if (!(k > 0.0) || !(r0 > 0.0)) throw std::invalid_argument("fit_beam_coefficients: k and r0 must be positive");
    const double floor = 10.0 * (L_max + 1.0) * (L_max + 1.0);
    if (k * r0 < floor)
        throw std::invalid_argument("fit_beam_coefficients: r0 too close; need k*r0 >= " + std::to_string(floor));

    // band-limit minimum is 2(L+1) x 4(L+1); extra nodes suppress aliasing
    // from non-band-limited patterns without affecting exactness
    const int n_theta = std::max(2 * (L_max + 1), 48);
    const int n_phi = std::max(4 * (L_max + 1), 96);
    std::vector<double> ct, wt;
    gauss_legendre(n_theta, ct, wt);

    const int n_modes = mode_count(L_max);
    ModalVector s = ModalVector::zero(L_max);
    std::vector<cplx> harm(n_modes);
    const double w_phi = 2.0 * kPi / n_phi;
    for (int it = 0; it < n_theta; ++it) {
        const double theta = std::acos(ct[it]);
        for (int ip = 0; ip < n_phi; ++ip) {
            const double phi = w_phi * ip;
            const cplx f = profile(theta, phi);
            sph_harm_table(L_max, theta, phi, harm.data());
            const double w = wt[it] * w_phi;
            for (int i = 0; i < n_modes; ++i) s.coefficients[i] += w * f * std::conj(harm[i]);
        }
    }
    for (int l = 0; l <= L_max; ++l) {
        const cplx h = spherical_hankel1(l, k * r0);
        for (int p = -l; p <= l; ++p) s.coefficients[mode_flatten({l, p})] /= h;
    }
    return s;
}

ModalVector fit_beam_coefficients(const BeamPattern& pattern, int L_max, double r0, double k) {
    return fit_beam_coefficients(
        [&](double theta, double phi) { return cplx(gaussian_beam(pattern, theta, phi), 0.0); }, L_max, r0,
        k);
}

cplx synthesize_pattern(const ModalVector& s, double k, double r0, double theta, double phi) {
    const int L = s.truncation;
    std::vector<cplx> harm(mode_count(L));
    sph_harm_table(L, theta, phi, harm.data());
    cplx acc{0.0, 0.0};
    for (int l = 0; l <= L; ++l) {
        const cplx h = spherical_hankel1(l, k * r0);
        for (int p = -l; p <= l; ++p) {
            const int i = mode_flatten({l, p});
            acc += s.coefficients[i] * h * harm[i];
        }
    }
    return acc;
}

double max_pattern_deviation(const BeamPattern& pattern, const ModalVector& s, double k, double r0,
                             int n_theta, int n_phi) {
    double worst = 0.0;
    for (int it = 0; it < n_theta; ++it) {
        const double theta = kPi * it / (n_theta - 1);
        for (int ip = 0; ip < n_phi; ++ip) {
            const double phi = 2.0 * kPi * ip / n_phi;
            const double orig = gaussian_beam(pattern, theta, phi);
            const cplx syn = synthesize_pattern(s, k, r0, theta, phi);
            worst = std::max(worst, std::abs(syn - orig));
        }
    }
    return worst;
}

BeamSystem build_system_function(const Eigen::MatrixXcd& B, const Eigen::MatrixXcd& S, double mu) {
    if (B.cols() != S.cols()) throw std::invalid_argument("build_system_function: beam count mismatch");
    if (mu < 0.0) throw std::invalid_argument("build_system_function: negative regularization weight");
    BeamSystem sys;
    sys.B = B;
    sys.S = S;
    sys.mu = mu;

    const Eigen::VectorXd sv = S.jacobiSvd().singularValues();
    const double smin = sv(sv.size() - 1);
    sys.condition_S = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();

    const Eigen::MatrixXcd gram =
        S * S.adjoint() + mu * Eigen::MatrixXcd::Identity(S.rows(), S.rows());
    if (mu == 0.0) {
        const double cond2 = sys.condition_S * sys.condition_S;
        if (!(cond2 < 1e12)) {
            sys.ill_posed = true;
            throw std::runtime_error("build_system_function: S S^H is numerically singular at mu = 0 (cond(S) = " +
                                     std::to_string(sys.condition_S) + ")");
        }
    }
    sys.Q = B * S.adjoint() * gram.ldlt().solve(Eigen::MatrixXcd::Identity(S.rows(), S.rows()));
    return sys;
}

Eigen::VectorXcd extrapolate_beam(const BeamSystem& sys, const Eigen::VectorXcd& s_new) {
    if (s_new.size() != sys.Q.cols()) throw std::invalid_argument("extrapolate_beam: coefficient length mismatch");
    return sys.Q * s_new;
}

}  // namespace modalwave
