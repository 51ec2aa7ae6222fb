#pragma once

#include <vector>

#include <Eigen/Dense>

#include "modalwave/scene.hpp"
#include "modalwave/translation.hpp"

namespace modalwave {

/// Assembled global system (I - TH) b = T H_s s with per-scatterer blocks of
/// size (L+1)^2. M = TH has zero diagonal blocks.
struct BlockSystem {
    int J = 0;
    int L = 0;
    int block = 0;                       // (L+1)^2
    std::vector<Eigen::MatrixXcd> T;     // per-scatterer T_j
    std::vector<Eigen::MatrixXcd> Hs;    // per-scatterer H_sj, (L+1)^2 x (N+1)^2
    Eigen::MatrixXcd H;                  // (j,i) block = H_ij for i != j, 0 on the diagonal
    Eigen::MatrixXcd M;                  // T * H
    Eigen::VectorXcd c;                  // stack of T_j H_sj s

    int dim() const { return J * block; }
};

struct SolveReport {
    Eigen::VectorXcd solution;
    std::vector<double> residual_history;  // relative residual per iteration
    int iterations = 0;
    bool converged = false;
    bool diverged = false;  // residual guard tripped (growth beyond 1e6x initial)
    double condition_estimate = 0.0;       // direct solver only
};

BlockSystem assemble(const Scene& scene, const ModalVector& s, TranslationCache* cache = nullptr);

/// Dense LU factorization solve of (I - M) b = c.
SolveReport solve_direct(const BlockSystem& system);

SolveReport solve_jacobi(const BlockSystem& system, int max_iters, double tol);
SolveReport solve_gauss_seidel(const BlockSystem& system, int max_iters, double tol);

/// omega in (0, 2); omega = 1 reproduces Gauss-Seidel iterate-for-iterate.
SolveReport solve_sor(const BlockSystem& system, double omega, int max_iters, double tol);

SolveReport solve(const BlockSystem& system, const SolverConfig& config);

/// Spectral radius of the iteration matrix of the chosen method: (L+U),
/// (I-L)^{-1} U, or (I-wL)^{-1} [(1-w)I + wU]. Power iteration with a dense
/// eigensolve fallback.
double spectral_radius(const BlockSystem& system, SolverMethod method, double omega = 1.0);

}  // namespace modalwave
