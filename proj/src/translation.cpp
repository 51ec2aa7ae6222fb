#include "modalwave/translation.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace modalwave {

namespace {

constexpr double kFourPi = 12.566370614359172953850573533118;

// Per (row, col) the q-sum reduces to sum_q K_q * h_q(k|d|) * Y_q^{m-p}(d_hat),
// where K_q folds the parity/triangle gates, the Wigner-3j pair, the sqrt
// factor and the conjugation sign (-1)^{p-m}. K depends only on mode indices,
// so plans are precomputed once per (L_dst, N_src) and shared.
struct Term {
    int q;
    int mu;  // m - p
    cplx coeff;
};

struct Plan {
    int L_dst, N_src;
    std::vector<std::vector<Term>> terms;  // indexed row * ncols + col
};

cplx ipow(int e) {
    switch (((e % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

std::shared_ptr<const Plan> get_plan(int L_dst, int N_src) {
    static std::map<std::pair<int, int>, std::shared_ptr<const Plan>> plans;
    static std::shared_mutex mutex;
    const std::pair<int, int> key{L_dst, N_src};
    {
        std::shared_lock lock(mutex);
        if (auto it = plans.find(key); it != plans.end()) return it->second;
    }
    auto plan = std::make_shared<Plan>();
    plan->L_dst = L_dst;
    plan->N_src = N_src;
    const int nrows = mode_count(L_dst), ncols = mode_count(N_src);
    plan->terms.resize(static_cast<size_t>(nrows) * ncols);
    for (int row = 0; row < nrows; ++row) {
        const auto [l, p] = mode_unflatten(row);
        for (int col = 0; col < ncols; ++col) {
            const auto [n, m] = mode_unflatten(col);
            auto& list = plan->terms[static_cast<size_t>(row) * ncols + col];
            for (int q = std::abs(n - l); q <= n + l; ++q) {
                if ((q + l + n) % 2 != 0) continue;
                if (std::abs(p - m) > q) continue;
                const double w1 = wigner3j(n, l, q, m, -p, p - m);
                const double w2 = wigner3j(n, l, q, 0, 0, 0);
                if (w1 == 0.0 || w2 == 0.0) continue;
                const double root = std::sqrt((2.0 * n + 1.0) * (2.0 * l + 1.0) * (2.0 * q + 1.0) / kFourPi);
                const double conj_sign = ((p - m) % 2 == 0) ? 1.0 : -1.0;
                const double p_sign = (p % 2 == 0) ? 1.0 : -1.0;
                const cplx coeff = kFourPi * p_sign * ipow(q + l - n) * w1 * w2 * root * conj_sign;
                list.push_back({q, m - p, coeff});
            }
        }
    }
    std::unique_lock lock(mutex);
    auto [it, inserted] = plans.emplace(key, std::move(plan));
    return it->second;
}

void check_displacement(const Eigen::Vector3d& d) {
    if (d.norm() == 0.0) throw std::invalid_argument("translation: coincident centers (|d| = 0)");
}

}  // namespace

cplx translation_coefficient(int n, int m, int l, int p, const Eigen::Vector3d& d, double k) {
    if (std::abs(m) > n || std::abs(p) > l) throw std::invalid_argument("translation_coefficient: |order| exceeds degree");
    check_displacement(d);
    const int qmax = n + l;
    std::vector<cplx> u(mode_count(qmax));
    eval_outgoing_table(qmax, k, d, u.data());
    const auto plan = get_plan(l, n);
    const auto& list = plan->terms[static_cast<size_t>(mode_flatten(l, p)) * mode_count(n) + mode_flatten(n, m)];
    cplx acc{0.0, 0.0};
    for (const auto& t : list) acc += t.coeff * u[t.q * t.q + t.q + t.mu];
    return acc;
}

TranslationMatrix build_translation_matrix(int L_dst, int N_src, const Eigen::Vector3d& d, double k) {
    check_displacement(d);
    const auto plan = get_plan(L_dst, N_src);
    const int qmax = L_dst + N_src;
    std::vector<cplx> u(mode_count(qmax));
    eval_outgoing_table(qmax, k, d, u.data());

    const int nrows = mode_count(L_dst), ncols = mode_count(N_src);
    TranslationMatrix out{Eigen::MatrixXcd::Zero(nrows, ncols), d, k};
    for (int row = 0; row < nrows; ++row) {
        for (int col = 0; col < ncols; ++col) {
            cplx acc{0.0, 0.0};
            for (const auto& t : plan->terms[static_cast<size_t>(row) * ncols + col])
                acc += t.coeff * u[t.q * t.q + t.q + t.mu];
            out.entries(row, col) = acc;
        }
    }
    return out;
}

TranslationMatrixGrad build_translation_matrix_grad(int L_dst, int N_src, const Eigen::Vector3d& d, double k) {
    check_displacement(d);
    const auto plan = get_plan(L_dst, N_src);
    const int qmax = L_dst + N_src;
    std::vector<cplx> u(mode_count(qmax));
    std::vector<Eigen::Vector3cd> g(mode_count(qmax));
    eval_outgoing_table(qmax, k, d, u.data());
    grad_outgoing_table(qmax, k, d, g.data());

    const int nrows = mode_count(L_dst), ncols = mode_count(N_src);
    TranslationMatrixGrad out;
    out.value = Eigen::MatrixXcd::Zero(nrows, ncols);
    for (auto& m : out.d_disp) m = Eigen::MatrixXcd::Zero(nrows, ncols);
    for (int row = 0; row < nrows; ++row) {
        for (int col = 0; col < ncols; ++col) {
            cplx acc{0.0, 0.0};
            Eigen::Vector3cd gacc = Eigen::Vector3cd::Zero();
            for (const auto& t : plan->terms[static_cast<size_t>(row) * ncols + col]) {
                const int i = t.q * t.q + t.q + t.mu;
                acc += t.coeff * u[i];
                gacc += t.coeff * g[i];
            }
            out.value(row, col) = acc;
            for (int a = 0; a < 3; ++a) out.d_disp[a](row, col) = gacc[a];
        }
    }
    return out;
}

AdditionReport verify_addition(ModeIndex source_mode, const Eigen::Vector3d& d, double k, int L,
                               std::span<const Eigen::Vector3d> eval_points) {
    const double dn = d.norm();
    for (const auto& r : eval_points) {
        if ((r - d).norm() >= dn * (1.0 - 1e-9))
            throw std::invalid_argument("verify_addition: evaluation point outside the convergence region");
    }
    const TranslationMatrix H = build_translation_matrix(L, source_mode.l, d, k);
    const int col = mode_flatten(source_mode);

    AdditionReport report;
    double sq_sum = 0.0;
    for (const auto& r : eval_points) {
        const cplx direct = eval_outgoing(source_mode, k, r);
        cplx expanded{0.0, 0.0};
        const Eigen::Vector3d local = r - d;
        for (int i = 0; i < mode_count(L); ++i)
            expanded += H.entries(i, col) * eval_regular(mode_unflatten(i), k, local);
        const double err = std::abs(direct - expanded);
        report.max_abs_error = std::max(report.max_abs_error, err);
        sq_sum += err * err;
    }
    if (!eval_points.empty()) report.rms_error = std::sqrt(sq_sum / static_cast<double>(eval_points.size()));
    return report;
}

const TranslationMatrix& TranslationCache::get(int L_dst, int N_src, const Eigen::Vector3d& d, double k) {
    const Key key{L_dst, N_src, d.x(), d.y(), d.z(), k};
    {
        std::shared_lock lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end()) return *it->second;
    }
    auto built = std::make_unique<TranslationMatrix>(build_translation_matrix(L_dst, N_src, d, k));
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, std::move(built));
    return *it->second;
}

void TranslationCache::clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
}

size_t TranslationCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

}  // namespace modalwave
