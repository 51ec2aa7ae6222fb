#pragma once

#include <array>
#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "modalwave/modal.hpp"

namespace modalwave {

/// Dense matrix of addition-theorem coefficients mapping outgoing modes at the
/// displaced center onto regular modes at the local one. Row flat(l,p),
/// column flat(n,m) holds a_{nm}^{lp}(d).
struct TranslationMatrix {
    Eigen::MatrixXcd entries;
    Eigen::Vector3d displacement;
    double k = 0.0;
};

/// Translation matrix together with its derivative with respect to the three
/// Cartesian components of the displacement.
struct TranslationMatrixGrad {
    Eigen::MatrixXcd value;
    std::array<Eigen::MatrixXcd, 3> d_disp;
};

/// Single addition-theorem coefficient a_{nm}^{lp}(d). Requires |d| > 0.
cplx translation_coefficient(int n, int m, int l, int p, const Eigen::Vector3d& d, double k);

TranslationMatrix build_translation_matrix(int L_dst, int N_src, const Eigen::Vector3d& d, double k);

TranslationMatrixGrad build_translation_matrix_grad(int L_dst, int N_src, const Eigen::Vector3d& d, double k);

struct AdditionReport {
    double max_abs_error = 0.0;
    double rms_error = 0.0;
};

/// Compares u_n^m(r) against its order-L regular re-expansion about d over the
/// given points. Every point must satisfy ||r - d|| < ||d|| (strict, with a
/// 1e-9 relative margin).
AdditionReport verify_addition(ModeIndex source_mode, const Eigen::Vector3d& d, double k, int L,
                               std::span<const Eigen::Vector3d> eval_points);

/// Read-mostly cache of translation matrices keyed by (displacement, k, orders).
class TranslationCache {
public:
    const TranslationMatrix& get(int L_dst, int N_src, const Eigen::Vector3d& d, double k);
    void clear();
    size_t size() const;

private:
    using Key = std::tuple<int, int, double, double, double, double>;
    mutable std::shared_mutex mutex_;
    std::map<Key, std::unique_ptr<TranslationMatrix>> entries_;
};

}  // namespace modalwave
