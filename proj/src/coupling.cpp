#include "modalwave/coupling.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace modalwave {

namespace {

double relative_residual(const BlockSystem& sys, const Eigen::VectorXcd& b, double c_norm) {
    const double r = (b - sys.M * b - sys.c).norm();
    return c_norm > 0.0 ? r / c_norm : r;
}

constexpr double kDivergenceGuard = 1e6;

enum class Sweep { Jacobi, GaussSeidel };

SolveReport iterate(const BlockSystem& sys, Sweep sweep, double omega, int max_iters, double tol) {
    const double c_norm = sys.c.norm();
    SolveReport report;
    report.solution = Eigen::VectorXcd::Zero(sys.dim());
    const double initial = relative_residual(sys, report.solution, c_norm);

    Eigen::VectorXcd b = report.solution;
    for (int it = 0; it < max_iters; ++it) {
        if (sweep == Sweep::Jacobi) {
            b = sys.M * b + sys.c;
        } else {
            for (int j = 0; j < sys.J; ++j) {
                Eigen::VectorXcd upd = sys.c.segment(j * sys.block, sys.block);
                for (int i = 0; i < sys.J; ++i) {
                    if (i == j) continue;
                    upd += sys.M.block(j * sys.block, i * sys.block, sys.block, sys.block) *
                           b.segment(i * sys.block, sys.block);
                }
                b.segment(j * sys.block, sys.block) =
                    (1.0 - omega) * b.segment(j * sys.block, sys.block) + omega * upd;
            }
        }
        const double res = relative_residual(sys, b, c_norm);
        report.residual_history.push_back(res);
        report.iterations = it + 1;
        report.solution = b;
        if (tol > 0.0 && res <= tol) {
            report.converged = true;
            break;
        }
        if (!std::isfinite(res) || res > kDivergenceGuard * std::max(initial, 1.0)) {
            report.diverged = true;
            break;
        }
    }
    if (!report.residual_history.empty() && tol > 0.0)
        report.converged = report.residual_history.back() <= tol;
    return report;
}

}  // namespace

BlockSystem assemble(const Scene& scene, const ModalVector& s, TranslationCache* cache) {
    scene.validate();
    if (s.truncation != scene.source_truncation)
        throw std::invalid_argument("assemble: source coefficient truncation mismatch");

    BlockSystem sys;
    sys.J = static_cast<int>(scene.scatterers.size());
    sys.L = scene.inter_truncation;
    sys.block = mode_count(sys.L);
    const double k = scene.k();
    const int N = scene.source_truncation;

    auto translation = [&](int L_dst, int N_src, const Eigen::Vector3d& d) -> Eigen::MatrixXcd {
        if (cache != nullptr) return cache->get(L_dst, N_src, d, k).entries;
        return build_translation_matrix(L_dst, N_src, d, k).entries;
    };

    sys.T.reserve(sys.J);
    sys.Hs.reserve(sys.J);
    for (const auto& sc : scene.scatterers) {
        sys.T.push_back(sc.t_matrix);
        sys.Hs.push_back(translation(sys.L, N, sc.position() - scene.source_position));
    }

    sys.H = Eigen::MatrixXcd::Zero(sys.dim(), sys.dim());
    for (int j = 0; j < sys.J; ++j) {
        for (int i = 0; i < sys.J; ++i) {
            if (i == j) continue;
            const Eigen::Vector3d d_ij = scene.scatterers[j].position() - scene.scatterers[i].position();
            sys.H.block(j * sys.block, i * sys.block, sys.block, sys.block) = translation(sys.L, sys.L, d_ij);
        }
    }

    sys.M = Eigen::MatrixXcd::Zero(sys.dim(), sys.dim());
    sys.c = Eigen::VectorXcd::Zero(sys.dim());
    for (int j = 0; j < sys.J; ++j) {
        sys.M.middleRows(j * sys.block, sys.block) = sys.T[j] * sys.H.middleRows(j * sys.block, sys.block);
        sys.c.segment(j * sys.block, sys.block) = sys.T[j] * (sys.Hs[j] * s.coefficients);
    }
    return sys;
}

SolveReport solve_direct(const BlockSystem& sys) {
    const Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(sys.dim(), sys.dim()) - sys.M;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
    const double rcond = lu.rcond();
    SolveReport report;
    report.condition_estimate = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(rcond > 1e-14))
        throw std::runtime_error("solve_direct: system is singular or near-singular (condition estimate " +
                                 std::to_string(report.condition_estimate) + ")");
    report.solution = lu.solve(sys.c);
    const double c_norm = sys.c.norm();
    report.residual_history.push_back(relative_residual(sys, report.solution, c_norm));
    report.iterations = 1;
    report.converged = report.residual_history.back() <= 1e-10;
    return report;
}

SolveReport solve_jacobi(const BlockSystem& sys, int max_iters, double tol) {
    return iterate(sys, Sweep::Jacobi, 1.0, max_iters, tol);
}

SolveReport solve_gauss_seidel(const BlockSystem& sys, int max_iters, double tol) {
    return iterate(sys, Sweep::GaussSeidel, 1.0, max_iters, tol);
}

SolveReport solve_sor(const BlockSystem& sys, double omega, int max_iters, double tol) {
    if (!(omega > 0.0 && omega < 2.0)) throw std::invalid_argument("solve_sor: omega must lie in (0, 2)");
    return iterate(sys, Sweep::GaussSeidel, omega, max_iters, tol);
}

SolveReport solve(const BlockSystem& sys, const SolverConfig& config) {
    switch (config.method) {
        case SolverMethod::Direct: return solve_direct(sys);
        case SolverMethod::Jacobi: return solve_jacobi(sys, config.max_iters, config.tol);
        case SolverMethod::GaussSeidel: return solve_gauss_seidel(sys, config.max_iters, config.tol);
        case SolverMethod::Sor: return solve_sor(sys, config.omega, config.max_iters, config.tol);
    }
    throw std::logic_error("solve: unknown method");
}

namespace {

// y = G x for the iteration matrix of each method, using the block structure
// of M (zero diagonal blocks) for the triangular solves.
Eigen::VectorXcd apply_iteration_matrix(const BlockSystem& sys, SolverMethod method, double omega,
                                        const Eigen::VectorXcd& x) {
    const int nb = sys.block;
    if (method == SolverMethod::Jacobi) return sys.M * x;

    const double w = method == SolverMethod::GaussSeidel ? 1.0 : omega;
    // z = (1-w) x + w U x, then solve (I - w L) y = z by forward substitution
    Eigen::VectorXcd z = (1.0 - w) * x;
    for (int j = 0; j < sys.J; ++j)
        for (int i = j + 1; i < sys.J; ++i)
            z.segment(j * nb, nb) += w * sys.M.block(j * nb, i * nb, nb, nb) * x.segment(i * nb, nb);
    Eigen::VectorXcd y(sys.dim());
    for (int j = 0; j < sys.J; ++j) {
        Eigen::VectorXcd acc = z.segment(j * nb, nb);
        for (int i = 0; i < j; ++i)
            acc += w * sys.M.block(j * nb, i * nb, nb, nb) * y.segment(i * nb, nb);
        y.segment(j * nb, nb) = acc;
    }
    return y;
}

}  // namespace

double spectral_radius(const BlockSystem& sys, SolverMethod method, double omega) {
    if (method == SolverMethod::Direct) throw std::invalid_argument("spectral_radius: iterative methods only");
    constexpr int kDenseLimit = 4096;
    if (sys.dim() > kDenseLimit) throw std::invalid_argument("spectral_radius: system exceeds the dense limit");
    if (method == SolverMethod::Sor && !(omega > 0.0 && omega < 2.0))
        throw std::invalid_argument("spectral_radius: omega must lie in (0, 2)");

    // power iteration first
    std::mt19937_64 rng(0x5eed5eedULL);
    std::normal_distribution<double> gauss;
    Eigen::VectorXcd x(sys.dim());
    for (int i = 0; i < x.size(); ++i) x[i] = cplx(gauss(rng), gauss(rng));
    x.normalize();
    double prev = 0.0;
    int stable = 0;
    for (int it = 0; it < 500; ++it) {
        Eigen::VectorXcd y = apply_iteration_matrix(sys, method, omega, x);
        const double norm = y.norm();
        if (norm == 0.0) return 0.0;
        stable = std::abs(norm - prev) <= 1e-9 * norm ? stable + 1 : 0;
        prev = norm;
        x = y / norm;
        if (stable >= 5) return prev;
    }

    // dense fallback: materialize the iteration matrix column by column
    Eigen::MatrixXcd G(sys.dim(), sys.dim());
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(sys.dim());
    for (int i = 0; i < sys.dim(); ++i) {
        e[i] = 1.0;
        G.col(i) = apply_iteration_matrix(sys, method, omega, e);
        e[i] = 0.0;
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(G, false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("spectral_radius: both power iteration and dense eigensolve failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace modalwave
