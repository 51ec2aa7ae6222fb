// End-to-end acceptance checks. Each criterion prints exactly one
// "criterion N: PASS/FAIL — detail" line; the process exits nonzero if any
// requested criterion fails. Run with no arguments for all ten, or pass
// criterion numbers to run a subset.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "modalwave/beams.hpp"
#include "modalwave/commands.hpp"
#include "modalwave/coupling.hpp"
#include "modalwave/inverse.hpp"
#include "modalwave/io.hpp"
#include "modalwave/scene.hpp"
#include "modalwave/specialfn.hpp"
#include "modalwave/translation.hpp"
#include "oracles.hpp"

using namespace modalwave;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

std::vector<Eigen::Vector3d> plane_grid(double x0, double x1, double y0, double y1, int n, double z) {
    std::vector<Eigen::Vector3d> pts;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            pts.push_back({x0 + (x1 - x0) * i / (n - 1), y0 + (y1 - y0) * j / (n - 1), z});
    return pts;
}

std::vector<Eigen::Vector3d> receiver_ring(int count, double radius) {
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < count; ++i) {
        const double a = 2.0 * kPi * i / count;
        pts.push_back({radius * std::cos(a), radius * std::sin(a), 2.0 + 0.1 * i});
    }
    return pts;
}

// --- 1. addition-theorem verification, Fig. 4 protocol ----------------------

bool criterion1(std::string& detail) {
    const double k = 2.0 * kPi;  // lambda = 1
    const Eigen::Vector3d d(0.0, 4.0, 15.0);
    const ModeIndex src{4, 2};
    std::vector<Eigen::Vector3d> pts;
    const int n = 41;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            pts.push_back(d + Eigen::Vector3d(-1.4 + 2.8 * i / (n - 1), -1.4 + 2.8 * j / (n - 1), 0.0));

    auto pointwise = [&](int L) {
        const TranslationMatrix tm = build_translation_matrix(L, src.l, d, k);
        std::vector<double> e;
        for (const auto& r : pts) {
            cplx rec{0.0, 0.0};
            for (int i = 0; i < mode_count(L); ++i)
                rec += tm.entries(i, mode_flatten(src)) * eval_regular(mode_unflatten(i), k, r - d);
            e.push_back(std::abs(rec - eval_outgoing(src, k, r)));
        }
        return e;
    };
    const auto e7 = pointwise(7), e15 = pointwise(15);
    int better = 0;
    double s7 = 0.0, s15 = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
        if (e15[i] < e7[i]) ++better;
        s7 += e7[i] * e7[i];
        s15 += e15[i] * e15[i];
    }
    const double frac = static_cast<double>(better) / pts.size();
    const double ratio = std::sqrt(s15 / s7);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "L=15 beats L=7 at %.2f%% of slice points, RMS ratio %.2e", 100.0 * frac,
                  ratio);
    detail = buf;
    return frac >= 0.99 && ratio < 0.1;
}

// --- 2. special-function suite ----------------------------------------------

bool criterion2(std::string& detail) {
    // spherical-harmonic orthonormality, l <= 10, via quadrature
    const int L = 10, nm = mode_count(L);
    std::vector<double> ct, wt;
    gauss_legendre(64, ct, wt);
    const int n_phi = 128;
    Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(nm, nm);
    std::vector<cplx> tab(nm);
    for (size_t it = 0; it < ct.size(); ++it)
        for (int ip = 0; ip < n_phi; ++ip) {
            sph_harm_table(L, std::acos(ct[it]), 2.0 * kPi * ip / n_phi, tab.data());
            const double w = wt[it] * 2.0 * kPi / n_phi;
            Eigen::Map<Eigen::VectorXcd> y(tab.data(), nm);
            gram.noalias() += w * y * y.adjoint();
        }
    const double ortho = (gram - Eigen::MatrixXcd::Identity(nm, nm)).cwiseAbs().maxCoeff();
    if (ortho > 1e-10) {
        detail = "harmonic orthonormality defect " + std::to_string(ortho);
        return false;
    }

    // Bessel Wronskian j_n y_n' - j_n' y_n = 1/x^2
    double wron = 0.0;
    for (int n = 0; n <= 20; ++n)
        for (double x : {0.5, 1.0, 5.0, 20.0, 100.0}) {
            const double w = spherical_bessel_j(n, x) * spherical_bessel_y_prime(n, x) -
                             spherical_bessel_j_prime(n, x) * spherical_bessel_y(n, x);
            wron = std::max(wron, std::abs(w * x * x - 1.0));
        }
    if (wron > 1e-10) {
        detail = "Wronskian defect " + std::to_string(wron);
        return false;
    }

    // Hankel far-field behavior at kr = 1e4. The leading asymptote carries
    // its own n(n+1)/(2x) phase error, which reaches 1.5e-3 at n = 5, so the
    // complex form is checked for n <= 4 and the 1/x magnitude decay
    // (tight for every n <= 5) covers the rest.
    const double x = 1e4;
    double hankel = 0.0;
    for (int n = 0; n <= 5; ++n) {
        const cplx h = spherical_hankel1(n, x);
        if (n <= 4) {
            const cplx asym = std::polar(1.0 / x, x - (n + 1) * kPi / 2.0);
            hankel = std::max(hankel, std::abs(h - asym) / std::abs(h));
        }
        hankel = std::max(hankel, std::abs(std::abs(h) - 1.0 / x) / std::abs(h));
    }
    if (hankel > 1e-3) {
        detail = "Hankel asymptotic error " + std::to_string(hankel);
        return false;
    }

    // Wigner-3j vs the exact-rational Racah oracle, 1000 seeded tuples
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> uj(0, 15);
    double wig = 0.0;
    int done = 0;
    while (done < 1000) {
        const int j1 = uj(rng), j2 = uj(rng);
        std::uniform_int_distribution<int> uj3(std::abs(j1 - j2), std::min(15, j1 + j2));
        const int j3 = uj3(rng);
        std::uniform_int_distribution<int> um1(-j1, j1), um2(-j2, j2);
        const int m1 = um1(rng), m2 = um2(rng), m3 = -m1 - m2;
        if (std::abs(m3) > j3) continue;
        ++done;
        const double v = wigner3j(j1, j2, j3, m1, m2, m3);
        const double ref = oracle::wigner3j_racah_exact(j1, j2, j3, m1, m2, m3);
        wig = std::max(wig, std::abs(v - ref) / std::max(1.0, std::abs(ref)));
    }
    if (wig > 1e-12) {
        detail = "Wigner-3j oracle mismatch " + std::to_string(wig);
        return false;
    }

    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "orthonormality %.1e, Wronskian %.1e, Hankel %.1e, Wigner-3j %.1e over 1000 tuples", ortho,
                  wron, hankel, wig);
    detail = buf;
    return true;
}

// --- 3. solver oracle equivalence -------------------------------------------

bool criterion3(std::string& detail) {
    double worst_agree = 0.0;
    for (int t = 0; t < 20; ++t) {
        const int J = 2 + ((t * 7) % 19);  // covers {2,...,20}
        const int L = t % 4;
        Scene scene = testutil::random_scene(9000 + t, J, L, 0.3, 8.0);
        const ModalVector s = testutil::random_source(9100 + t, scene.source_truncation);
        testutil::set_jacobi_radius(scene, s, 0.6);
        const BlockSystem sys = assemble(scene, s);
        const SolveReport dir = solve_direct(sys);
        for (auto m : {SolverMethod::Jacobi, SolverMethod::GaussSeidel, SolverMethod::Sor}) {
            const SolverConfig cfg{m, 0.5, 3000, 1e-10};
            const SolveReport it = solve(sys, cfg);
            const double agree = (it.solution - dir.solution).norm() / dir.solution.norm();
            worst_agree = std::max(worst_agree, agree);
            if (!it.converged || it.residual_history.back() > 1e-8 || agree > 1e-8) {
                detail = "scene " + std::to_string(t) + " method " + std::to_string(static_cast<int>(m)) +
                         " residual " + std::to_string(it.residual_history.back()) + " agreement " +
                         std::to_string(agree);
                return false;
            }
        }
    }

    // Born-series identity: Jacobi iterate k equals the partial Neumann sum
    Scene scene = testutil::random_scene(19, 5, 1, 0.4, 8.0);
    const ModalVector s = testutil::random_source(20, scene.source_truncation);
    testutil::set_jacobi_radius(scene, s, 0.7);
    const BlockSystem sys = assemble(scene, s);
    Eigen::VectorXcd neumann = Eigen::VectorXcd::Zero(sys.dim());
    Eigen::VectorXcd power = sys.c;
    double born = 0.0;
    for (int kk = 1; kk <= 10; ++kk) {
        neumann += power;
        const SolveReport rep = solve_jacobi(sys, kk, 0.0);
        born = std::max(born, (rep.solution - neumann).norm() / std::max(1.0, neumann.norm()));
        power = sys.M * power;
    }
    if (born > 1e-14) {
        detail = "Born identity defect " + std::to_string(born);
        return false;
    }

    // SOR(omega = 1) is Gauss-Seidel iterate for iterate
    for (int iters : {1, 3, 10}) {
        const SolveReport gs = solve_gauss_seidel(sys, iters, 0.0);
        const SolveReport sor = solve_sor(sys, 1.0, iters, 0.0);
        if (gs.solution != sor.solution || gs.residual_history != sor.residual_history) {
            detail = "SOR(1) deviates from Gauss-Seidel at " + std::to_string(iters) + " iterations";
            return false;
        }
    }

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "20 scenes agree with the direct solve to %.1e; Born defect %.1e; SOR(1) == GS",
                  worst_agree, born);
    detail = buf;
    return true;
}

// --- 4. strongly coupled scene: Jacobi/GS diverge, SOR(0.5) converges -------

bool criterion4(std::string& detail) {
    Scene scene = testutil::random_scene(37, 6, 1, 0.3, 6.0);
    const ModalVector s = testutil::random_source(1037, scene.source_truncation);
    testutil::set_jacobi_radius(scene, s, 1.2);
    const BlockSystem sys = assemble(scene, s);

    // dense eigensolve of the Jacobi iteration matrix M
    const Eigen::VectorXcd eigs = Eigen::ComplexEigenSolver<Eigen::MatrixXcd>(sys.M).eigenvalues();
    const double rho = eigs.cwiseAbs().maxCoeff();
    if (rho <= 1.0) {
        detail = "constructed scene is not strongly coupled (rho = " + std::to_string(rho) + ")";
        return false;
    }

    const SolveReport jac = solve_jacobi(sys, 40, 0.0);
    const SolveReport gs = solve_gauss_seidel(sys, 40, 0.0);
    const SolveReport sor = solve_sor(sys, 0.5, 40, 0.0);
    const bool jac_grows = jac.residual_history.back() > jac.residual_history.front();
    const bool gs_grows = gs.residual_history.back() > gs.residual_history.front();
    const double drop = sor.residual_history.back() / sor.residual_history.front();

    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "rho(M) = %.3f; Jacobi residual x%.1e, GS x%.1e over 40 iters; SOR(0.5) drop %.1e", rho,
                  jac.residual_history.back() / jac.residual_history.front(),
                  gs.residual_history.back() / gs.residual_history.front(), drop);
    detail = buf;
    return jac_grows && gs_grows && drop <= 1e-2;
}

// --- 5. analytic gradients match finite differences -------------------------

bool criterion5(std::string& detail) {
    double worst = 0.0;
    for (uint64_t seed : {62, 63, 65}) {
        Scene truth = testutil::random_scene(seed, 3, 1, 0.3, 5.0);
        const std::vector<ModalVector> beams = {testutil::random_source(seed + 1, truth.source_truncation),
                                                testutil::random_source(seed + 2, truth.source_truncation)};
        const SolverConfig synth;  // direct
        const MeasurementSet meas = synthesize_measurements(truth, beams, receiver_ring(20, 14.0), synth);

        FitParameters p = FitParameters::from_scene(truth);
        std::mt19937_64 rng(seed + 3);
        std::normal_distribution<double> gauss;
        for (auto& t : p.t_diag)
            for (Eigen::Index i = 0; i < t.size(); ++i) t[i] += 0.05 * cplx(gauss(rng), gauss(rng));
        for (auto& o : p.offsets)
            for (int d = 0; d < 3; ++d) o[d] = 0.03 * gauss(rng);

        for (auto method : {SolverMethod::Jacobi, SolverMethod::GaussSeidel, SolverMethod::Sor}) {
            const SolverConfig cfg{method, 0.7, 6, 0.0};
            const Eigen::VectorXd ga =
                gradient(p, truth, beams, meas.records, cfg, GradientMode::Analytic);
            const Eigen::VectorXd gf =
                gradient(p, truth, beams, meas.records, cfg, GradientMode::FiniteDifference, 1e-6);
            for (Eigen::Index i = 0; i < ga.size(); ++i)
                if (std::abs(gf[i]) > 1e-10) worst = std::max(worst, std::abs(ga[i] - gf[i]) / std::abs(gf[i]));
        }
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "worst per-coordinate relative deviation %.2e over 3 seeded scenes",
                  worst);
    detail = buf;
    return worst < 1e-4;
}

// --- 6. inverse recovery at desk scale ---------------------------------------

bool criterion6(std::string& detail) {
    const uint64_t seed = 303;
    Scene truth = testutil::random_scene(seed, 4, 1, 0.3, 5.0);
    std::vector<ModalVector> beams;
    for (int i = 0; i < 4; ++i)
        beams.push_back(testutil::random_source(seed + 10 + i, truth.source_truncation));

    const auto train_pts = plane_grid(-7, 7, -7, 7, 15, 8.0);
    const SolverConfig synth;  // direct
    const MeasurementSet meas = synthesize_measurements(truth, beams, train_pts, synth);

    // template anchors carry a 0.15-lambda placement error; offsets must fix it
    Scene tmpl = truth;
    std::mt19937_64 rng(seed + 99);
    std::normal_distribution<double> gauss;
    for (auto& sc : tmpl.scatterers) {
        Eigen::Vector3d d(gauss(rng), gauss(rng), gauss(rng));
        sc.anchor += 0.15 * d.normalized();
        sc.t_matrix.setZero();
    }

    FitConfig fc;
    fc.scene_template = tmpl;
    fc.beams = beams;
    fc.solver = {SolverMethod::GaussSeidel, 1.0, 8, 0.0};
    fc.epochs = 1500;
    fc.batch_fraction = 0.25;
    fc.gamma = 4.0;
    fc.offset_radius = 0.4;
    fc.optimize_offsets = true;
    fc.lr_t = 2e-2;
    fc.lr_offset = 2e-3;
    fc.seed = seed + 7;
    const FitResult joint = fit(fc, meas);

    FitConfig fc2 = fc;
    fc2.optimize_offsets = false;
    const FitResult tonly = fit(fc2, meas);

    const Eigen::VectorXcd y = forward_predict(joint.best_params, tmpl, beams, meas.records, fc.solver);
    Eigen::VectorXcd ym(meas.size());
    for (int i = 0; i < meas.size(); ++i) ym[i] = meas.records[i].value;
    const double train_nmse = nmse(y, ym);

    const auto dense_pts = plane_grid(-7, 7, 7.5, 14, 31, 8.0);
    Scene fitted = tmpl;
    joint.best_params.apply_to(fitted);
    const Radiomap mtruth = compute_radiomap(truth, beams[0], dense_pts, FieldComponent::Scattered, synth);
    const Radiomap mfit = compute_radiomap(fitted, beams[0], dense_pts, FieldComponent::Scattered, fc.solver);
    const double dense = nmse(mfit.scattered, mtruth.scattered);

    char buf[220];
    std::snprintf(buf, sizeof(buf),
                  "train NMSE %.2e, disjoint dense NMSE %.2e, final val joint %.2e vs T-only %.2e",
                  train_nmse, dense, joint.val_loss.back(), tonly.val_loss.back());
    detail = buf;
    return train_nmse < 1e-3 && dense < 5e-2 && joint.val_loss.back() <= tonly.val_loss.back();
}

// --- 7. virtual-scatterer equivalence ----------------------------------------

bool criterion7(std::string& detail) {
    const uint64_t seed = 407;
    Scene truth = testutil::random_scene(seed, 2, 3, 0.15, 4.0);
    std::vector<ModalVector> beams;
    for (int i = 0; i < 8; ++i)
        beams.push_back(testutil::random_source(seed + 10 + i, truth.source_truncation));

    const auto train_pts = plane_grid(10, 40, 10, 40, 15, 0.0);  // far-field cone
    const SolverConfig synth;  // direct
    MeasurementSet meas = synthesize_measurements(truth, beams, train_pts, synth);
    {
        // fixed relative measurement noise: both fits share the same floor
        std::mt19937_64 rng(seed + 123);
        std::normal_distribution<double> gauss;
        const double s = 0.1 / std::sqrt(2.0);
        for (auto& rec : meas.records) rec.value += rec.y_ref * s * cplx(gauss(rng), gauss(rng));
    }

    FitConfig fc;
    fc.beams = beams;
    fc.solver = {SolverMethod::GaussSeidel, 1.0, 8, 0.0};
    fc.epochs = 3000;
    fc.batch_fraction = 0.25;
    fc.gamma = 4.0;
    fc.offset_radius = 0.0;
    fc.optimize_offsets = false;
    fc.lr_t = 1e-2;
    fc.seed = seed + 7;

    Scene tmpl_same = truth;
    for (auto& sc : tmpl_same.scatterers) sc.t_matrix.setZero();
    fc.scene_template = tmpl_same;
    const FitResult same = fit(fc, meas);
    Scene fitted_same = tmpl_same;
    same.best_params.apply_to(fitted_same);

    Scene tmpl_virt = expand_virtual_scene(truth, 1, 4, 0.35, seed + 55);
    for (auto& sc : tmpl_virt.scatterers) {  // replica placement is structural, not learnable
        sc.anchor = sc.position();
        sc.offset.setZero();
    }
    fc.scene_template = tmpl_virt;
    fc.gamma = 0.25;
    fc.t_init_std_factor = 0.02;  // start well inside the stable coupling regime
    const FitResult virt = fit(fc, meas);
    Scene fitted_virt = tmpl_virt;
    virt.best_params.apply_to(fitted_virt);

    const auto dense_pts = plane_grid(15, 45, 15, 45, 31, -4.0);
    auto dense_all = [&](const Scene& sc, const SolverConfig& cfg) {
        Eigen::VectorXcd all(dense_pts.size() * beams.size());
        for (size_t bi = 0; bi < beams.size(); ++bi) {
            const Radiomap m = compute_radiomap(sc, beams[bi], dense_pts, FieldComponent::Scattered, cfg);
            all.segment(bi * dense_pts.size(), dense_pts.size()) = m.scattered;
        }
        return all;
    };
    const Eigen::VectorXcd truth_all = dense_all(truth, synth);
    const double n_same = nmse(dense_all(fitted_same, fc.solver), truth_all);
    const double n_virt = nmse(dense_all(fitted_virt, fc.solver), truth_all);

    char buf[180];
    std::snprintf(buf, sizeof(buf), "dense NMSE: same-order %.2e, 4x dipole replicas %.2e (ratio %.2f)",
                  n_same, n_virt, n_virt / n_same);
    detail = buf;
    return n_virt <= 2.0 * n_same;
}

// --- 8. beam fitting quality improves with order -----------------------------

bool criterion8(std::string& detail) {
    const double k = 2.0 * kPi;
    const double r0 = 10.0 * 36.0 / k * 1.05;  // far-field floor for L_max = 5
    std::vector<BeamPattern> beams;
    for (double t0 : {90.0, 120.0, 150.0, 180.0})
        for (double p0 : {0.0, 30.0, 60.0, 90.0})
            beams.push_back({1.0, 1.0, 1.0, 0.6, t0 * kPi / 180.0, p0 * kPi / 180.0});

    double prev = 1e300;
    double devs[3] = {0.0, 0.0, 0.0};
    for (int li = 0; li < 3; ++li) {
        const int L = 3 + li;
        double worst = 0.0;
        for (const auto& b : beams) {
            const ModalVector s = fit_beam_coefficients(b, L, r0, k);
            worst = std::max(worst, max_pattern_deviation(b, s, k, r0, 91, 180));
        }
        devs[li] = worst;
        if (!(worst < prev)) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "max deviation did not decrease at L_max = %d (%.4f -> %.4f)", L,
                          prev, worst);
            detail = buf;
            return false;
        }
        prev = worst;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "16-beam max deviation %.4f -> %.4f -> %.4f over L_max = 3, 4, 5",
                  devs[0], devs[1], devs[2]);
    detail = buf;
    return true;
}

// --- 9. beam extrapolation: mu sweep ordering and self-consistency -----------

bool criterion9(std::string& detail) {
    const uint64_t seed = 501;
    Scene scene = testutil::random_scene(seed, 3, 1, 0.3, 5.0);
    scene.source_truncation = 3;  // beams expanded at L_max = 3
    const double k = scene.k();
    const int Lb = 3, q = 16;
    const double r0 = 26.0;

    std::vector<ModalVector> train;
    for (double t0 : {90.0, 120.0, 150.0, 180.0})
        for (double p0 : {0.0, 30.0, 60.0, 90.0}) {
            const BeamPattern b{1.0, 1.0, 1.0, 0.6, t0 * kPi / 180.0, p0 * kPi / 180.0};
            train.push_back(fit_beam_coefficients(b, Lb, r0, k));
        }
    const BeamPattern t1{1.0, 1.0, 1.0, 0.6, 135.0 * kPi / 180.0, 45.0 * kPi / 180.0};
    const BeamPattern t2{1.0, 1.0, 1.0, 0.6, 100.0 * kPi / 180.0, 80.0 * kPi / 180.0};
    const ModalVector s1 = fit_beam_coefficients(t1, Lb, r0, k);
    const ModalVector s2 = fit_beam_coefficients(t2, Lb, r0, k);

    const int dim = 3 * mode_count(scene.inter_truncation);
    Eigen::MatrixXcd B(dim, q), S(mode_count(Lb), q);
    for (int j = 0; j < q; ++j) {
        S.col(j) = train[j].coefficients;
        B.col(j) = solve_direct(assemble(scene, train[j])).solution;
    }
    {
        // seeded 1% relative noise on the training coefficient stacks
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
        std::normal_distribution<double> gauss;
        const double rms = std::sqrt(B.squaredNorm() / static_cast<double>(B.size()));
        for (int j = 0; j < q; ++j)
            for (int i = 0; i < dim; ++i) B(i, j) += 1e-2 * rms / std::sqrt(2.0) * cplx(gauss(rng), gauss(rng));
    }
    {
        // fix the overall beam amplitude scale so mu is commensurate with S
        const double scale = std::sqrt(S.squaredNorm() / q);
        S /= scale;
        B /= scale;
    }

    const auto pts = plane_grid(-7, 7, -7, 7, 21, 8.0);
    auto map_of = [&](const Eigen::VectorXcd& b) {
        Eigen::VectorXcd m(pts.size());
        for (size_t i = 0; i < pts.size(); ++i) m[i] = eval_scattered(scene, b, pts[i]);
        return m;
    };
    const Eigen::VectorXcd oracle1 = map_of(solve_direct(assemble(scene, s1)).solution);
    const Eigen::VectorXcd oracle2 = map_of(solve_direct(assemble(scene, s2)).solution);

    const double mus[3] = {1e-5, 1e-4, 1e-3};
    double n1[3], n2[3];
    for (int m = 0; m < 3; ++m) {
        const BeamSystem sys = build_system_function(B, S, mus[m]);
        n1[m] = nmse(map_of(extrapolate_beam(sys, s1.coefficients)), oracle1);
        n2[m] = nmse(map_of(extrapolate_beam(sys, s2.coefficients)), oracle2);
    }
    const bool interior = n1[1] < n1[0] && n1[1] < n1[2] && n2[1] < n2[0] && n2[1] < n2[2];
    if (!interior) {
        char buf[220];
        std::snprintf(buf, sizeof(buf),
                      "no interior minimum at mu=1e-4: beam1 %.2e/%.2e/%.2e beam2 %.2e/%.2e/%.2e", n1[0],
                      n1[1], n1[2], n2[0], n2[1], n2[2]);
        detail = buf;
        return false;
    }

    // well-conditioned square S: training-beam self-extrapolation is exact
    Eigen::MatrixXcd S2(mode_count(Lb), q), B2(dim, q);
    for (int j = 0; j < q; ++j) {
        const ModalVector s = testutil::random_source(seed + 200 + j, Lb);
        S2.col(j) = s.coefficients;
        B2.col(j) = solve_direct(assemble(scene, s)).solution;
    }
    const BeamSystem well = build_system_function(B2, S2, 1e-12);
    const double self = (well.Q * S2 - B2).squaredNorm() / B2.squaredNorm();
    char buf[260];
    std::snprintf(buf, sizeof(buf),
                  "mu sweep NMSE beam1 %.2e/%.2e/%.2e, beam2 %.2e/%.2e/%.2e (min at 1e-4); square-S "
                  "self-extrapolation %.1e",
                  n1[0], n1[1], n1[2], n2[0], n2[1], n2[2], self);
    detail = buf;
    return self < 1e-6;
}

// --- 10. manifest reruns are byte-identical ----------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return "<missing:" + p.string() + ">";
    return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("modalwave_acceptance_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

bool rerun_matches(const std::string& command, const io::json& cfg, uint64_t seed, int& compared) {
    const fs::path a = fresh_dir(command + "_a");
    const fs::path b = fresh_dir(command + "_b");
    if (run_command(command, cfg, a.string(), seed) != 0) return false;
    const io::json manifest = io::load_json((a / "manifest.json").string());
    if (run_command(command, manifest, b.string(), std::nullopt) != 0) return false;
    for (const auto& item : manifest.at("artifacts").items()) {
        if (slurp(a / item.key()) != slurp(b / item.key())) return false;
        ++compared;
    }
    return true;
}

bool criterion10(std::string& detail) {
    using io::json;
    int compared = 0;

    json fwd;
    {
        Scene scene = testutil::random_scene(92, 3, 1, 0.3);
        fwd["scene"] = io::scene_to_json(scene);
        fwd["source_mode"] = {{"l", 1}, {"p", 0}};
        fwd["grid"] = {{"corner_min", {13.0, 13.0, 0.0}}, {"corner_max", {17.0, 17.0, 0.0}},
                       {"nx", 6},       {"ny", 6},        {"plane_axis", 2}};
        fwd["components"] = "total";
    }
    if (!rerun_matches("forward", fwd, 11, compared)) {
        detail = "forward artifacts differ across manifest rerun";
        return false;
    }

    json va;
    va["wavelength"] = 1.0;
    va["mode"] = {{"n", 4}, {"m", 2}};
    va["displacement"] = {0.0, 4.0, 15.0};
    va["orders"] = {7, 11, 15};
    va["slice"] = {{"corner_min", {-1.4, 2.6, 15.0}}, {"corner_max", {1.4, 5.4, 15.0}},
                   {"nx", 9},      {"ny", 9},         {"plane_axis", 2}};
    if (!rerun_matches("verify-addition", va, 12, compared)) {
        detail = "verify-addition artifacts differ across manifest rerun";
        return false;
    }

    json sc;
    {
        Scene scene = testutil::random_scene(94, 4, 1, 0.3);
        const ModalVector s = testutil::random_source(95, scene.source_truncation);
        testutil::set_jacobi_radius(scene, s, 0.6);
        sc["scene"] = io::scene_to_json(scene);
        json coeffs = json::array();
        for (Eigen::Index i = 0; i < s.coefficients.size(); ++i)
            coeffs.push_back({s.coefficients[i].real(), s.coefficients[i].imag()});
        sc["source_coefficients"] = coeffs;
        sc["methods"] = {"jacobi", "gauss_seidel", "sor"};
        sc["omega"] = 0.5;
        sc["max_iters"] = 40;
    }
    if (!rerun_matches("solver-compare", sc, 13, compared)) {
        detail = "solver-compare artifacts differ across manifest rerun";
        return false;
    }

    json ft;
    {
        Scene truth = testutil::random_scene(96, 2, 1, 0.3);
        ft["truth_scene"] = io::scene_to_json(truth);
        ft["beams"] = {json{{"source_mode", {{"l", 0}, {"p", 0}}}},
                       json{{"source_mode", {{"l", 1}, {"p", 0}}}}};
        ft["receivers"] = {{"corner_min", {13.0, 13.0, 0.0}}, {"corner_max", {16.0, 16.0, 0.0}},
                           {"nx", 4},       {"ny", 4},        {"plane_axis", 2}};
        ft["epochs"] = 5;
        ft["gamma"] = 1.0;
        ft["offset_radius"] = 0.2;
    }
    if (!rerun_matches("fit", ft, 14, compared)) {
        detail = "fit artifacts differ across manifest rerun";
        return false;
    }

    json bx;
    {
        Scene scene = testutil::random_scene(98, 2, 1, 0.3);
        scene.source_truncation = 3;
        bx["scene"] = io::scene_to_json(scene);
        bx["r0"] = 26.0;
        json beams = json::array();
        for (double t0 : {90.0, 120.0, 150.0, 180.0})
            beams.push_back({{"A", 1.0}, {"k_theta", 1.0}, {"k_phi", 1.0}, {"sigma", 0.6},
                             {"theta0_deg", t0}, {"phi0_deg", 30.0}});
        bx["training_beams"] = beams;
        bx["test_beams"] = {json{{"A", 1.0}, {"k_theta", 1.0}, {"k_phi", 1.0}, {"sigma", 0.6},
                                 {"theta0_deg", 135.0}, {"phi0_deg", 45.0}}};
        bx["mu_list"] = {1e-3};
        bx["grid"] = {{"corner_min", {-6.0, -6.0, 8.0}}, {"corner_max", {6.0, 6.0, 8.0}},
                      {"nx", 5},      {"ny", 5},         {"plane_axis", 2}};
        bx["b_noise_std"] = 1e-2;
    }
    if (!rerun_matches("beam-extrapolate", bx, 15, compared)) {
        detail = "beam-extrapolate artifacts differ across manifest rerun";
        return false;
    }

    detail = std::to_string(compared) +
             " artifacts byte-identical across manifest reruns of forward, verify-addition, "
             "solver-compare, fit, beam-extrapolate";
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    using Criterion = bool (*)(std::string&);
    const Criterion criteria[10] = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                    criterion6, criterion7, criterion8, criterion9, criterion10};
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) {
        const int n = std::atoi(argv[i]);
        if (n < 1 || n > 10) {
            std::fprintf(stderr, "unknown criterion '%s' (expected 1..10)\n", argv[i]);
            return 2;
        }
        wanted.insert(n);
    }
    if (wanted.empty())
        for (int n = 1; n <= 10; ++n) wanted.insert(n);

    int failures = 0;
    for (int n : wanted) {
        std::string detail;
        bool ok = false;
        try {
            ok = criteria[n - 1](detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("criterion %d: %s — %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
