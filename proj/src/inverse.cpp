#include "modalwave/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace modalwave {

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t stream, uint64_t index) {
    // splitmix64 over (seed, stream, index)
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1) + 0xbf58476d1ce4e5b9ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr uint64_t kStreamInit = 1;
constexpr uint64_t kStreamBatch = 2;
constexpr uint64_t kStreamNoise = 3;

}  // namespace

FitParameters FitParameters::from_scene(const Scene& scene) {
    FitParameters p;
    p.truncation = scene.inter_truncation;
    p.diagonal = std::all_of(scene.scatterers.begin(), scene.scatterers.end(),
                             [](const Scatterer& s) { return s.diagonal; });
    for (const auto& sc : scene.scatterers) {
        if (p.diagonal)
            p.t_diag.push_back(sc.t_matrix.diagonal());
        else
            p.t_full.push_back(sc.t_matrix);
        p.offsets.push_back(sc.offset);
    }
    return p;
}

void FitParameters::apply_to(Scene& scene) const {
    const size_t J = scene.scatterers.size();
    if ((diagonal ? t_diag.size() : t_full.size()) != J || offsets.size() != J)
        throw std::invalid_argument("FitParameters: scatterer count mismatch");
    const int blk = mode_count(truncation);
    for (size_t j = 0; j < J; ++j) {
        auto& sc = scene.scatterers[j];
        sc.diagonal = diagonal;
        sc.t_matrix = diagonal ? Eigen::MatrixXcd(t_diag[j].asDiagonal()) : t_full[j];
        if (sc.t_matrix.rows() != blk) throw std::invalid_argument("FitParameters: T shape mismatch");
        sc.offset = offsets[j];
    }
}

int FitParameters::flat_size() const {
    int n = 0;
    if (diagonal)
        for (const auto& t : t_diag) n += 2 * static_cast<int>(t.size());
    else
        for (const auto& t : t_full) n += 2 * static_cast<int>(t.size());
    n += 3 * static_cast<int>(offsets.size());
    return n;
}

Eigen::VectorXd FitParameters::flatten() const {
    Eigen::VectorXd x(flat_size());
    int i = 0;
    if (diagonal) {
        for (const auto& t : t_diag)
            for (Eigen::Index d = 0; d < t.size(); ++d) {
                x[i++] = t[d].real();
                x[i++] = t[d].imag();
            }
    } else {
        for (const auto& t : t_full)
            for (Eigen::Index c = 0; c < t.cols(); ++c)
                for (Eigen::Index r = 0; r < t.rows(); ++r) {
                    x[i++] = t(r, c).real();
                    x[i++] = t(r, c).imag();
                }
    }
    for (const auto& o : offsets)
        for (int d = 0; d < 3; ++d) x[i++] = o[d];
    return x;
}

void FitParameters::unflatten(const Eigen::VectorXd& x) {
    if (x.size() != flat_size()) throw std::invalid_argument("FitParameters::unflatten: size mismatch");
    int i = 0;
    if (diagonal) {
        for (auto& t : t_diag)
            for (Eigen::Index d = 0; d < t.size(); ++d) {
                t[d] = cplx(x[i], x[i + 1]);
                i += 2;
            }
    } else {
        for (auto& t : t_full)
            for (Eigen::Index c = 0; c < t.cols(); ++c)
                for (Eigen::Index r = 0; r < t.rows(); ++r) {
                    t(r, c) = cplx(x[i], x[i + 1]);
                    i += 2;
                }
    }
    for (auto& o : offsets)
        for (int d = 0; d < 3; ++d) o[d] = x[i++];
}

void MeasurementSet::validate() const {
    for (size_t q = 0; q < records.size(); ++q)
        if (!(records[q].y_ref > 0.0))
            throw std::invalid_argument("MeasurementSet: y_ref must be positive (record " + std::to_string(q) + ")");
}

MeasurementSet synthesize_measurements(const Scene& truth, const std::vector<ModalVector>& beams,
                                       const std::vector<Eigen::Vector3d>& receivers,
                                       const SolverConfig& solver) {
    MeasurementSet set;
    for (size_t b = 0; b < beams.size(); ++b) {
        const Radiomap map = compute_radiomap(truth, beams[b], receivers, FieldComponent::Scattered, solver);
        for (size_t q = 0; q < receivers.size(); ++q)
            set.records.push_back({static_cast<int>(b), receivers[q], map.scattered[q],
                                   std::abs(map.scattered[q])});
    }
    double ref_max = 0.0;
    for (const auto& r : set.records) ref_max = std::max(ref_max, r.y_ref);
    const double floor = 1e-12 * ref_max;
    for (auto& r : set.records) r.y_ref = std::max(r.y_ref, floor);
    set.validate();
    return set;
}

namespace {

// Everything one parameter point needs for forward evaluation and backprop:
// geometry-dependent translation blocks (optionally with displacement
// derivatives) and the per-beam unrolled iterate tape.
struct Workspace {
    int J = 0, blk = 0, N = 0, K = 0;
    double omega = 1.0;
    bool jacobi = false;
    double k = 0.0;
    std::vector<Eigen::Vector3d> positions;
    std::vector<Eigen::MatrixXcd> T;
    std::vector<Eigen::MatrixXcd> Hs;                    // J blocks
    std::vector<std::array<Eigen::MatrixXcd, 3>> dHs;    // d/d(r_j)
    std::vector<Eigen::MatrixXcd> W;                     // J*J blocks, W[j*J+i] = H_ij
    std::vector<std::array<Eigen::MatrixXcd, 3>> dW;     // d/d(d_ij)
};

Workspace make_workspace(const FitParameters& params, const Scene& scene_template, const SolverConfig& solver,
                         bool with_grads) {
    Scene scene = scene_template;
    params.apply_to(scene);
    scene.validate();

    Workspace ws;
    ws.J = static_cast<int>(scene.scatterers.size());
    ws.blk = mode_count(scene.inter_truncation);
    ws.N = scene.source_truncation;
    ws.k = scene.k();
    ws.K = solver.max_iters;
    switch (solver.method) {
        case SolverMethod::Jacobi: ws.jacobi = true; break;
        case SolverMethod::GaussSeidel: ws.omega = 1.0; break;
        case SolverMethod::Sor: ws.omega = solver.omega; break;
        case SolverMethod::Direct:
            throw std::invalid_argument("inverse: the unrolled forward map requires an iterative solver");
    }
    const int L = scene.inter_truncation;
    ws.T.reserve(ws.J);
    for (int j = 0; j < ws.J; ++j) {
        ws.T.push_back(scene.scatterers[j].t_matrix);
        ws.positions.push_back(scene.scatterers[j].position());
    }
    ws.Hs.resize(ws.J);
    ws.W.resize(static_cast<size_t>(ws.J) * ws.J);
    if (with_grads) {
        ws.dHs.resize(ws.J);
        ws.dW.resize(static_cast<size_t>(ws.J) * ws.J);
    }
    for (int j = 0; j < ws.J; ++j) {
        const Eigen::Vector3d d_sj = ws.positions[j] - scene.source_position;
        if (with_grads) {
            auto g = build_translation_matrix_grad(L, ws.N, d_sj, ws.k);
            ws.Hs[j] = std::move(g.value);
            ws.dHs[j] = std::move(g.d_disp);
        } else {
            ws.Hs[j] = build_translation_matrix(L, ws.N, d_sj, ws.k).entries;
        }
        for (int i = 0; i < ws.J; ++i) {
            if (i == j) continue;
            const Eigen::Vector3d d_ij = ws.positions[j] - ws.positions[i];
            if (with_grads) {
                auto g = build_translation_matrix_grad(L, L, d_ij, ws.k);
                ws.W[static_cast<size_t>(j) * ws.J + i] = std::move(g.value);
                ws.dW[static_cast<size_t>(j) * ws.J + i] = std::move(g.d_disp);
            } else {
                ws.W[static_cast<size_t>(j) * ws.J + i] = build_translation_matrix(L, L, d_ij, ws.k).entries;
            }
        }
    }
    return ws;
}

// Unrolled fixed-depth iteration; returns all states b^0 .. b^K.
std::vector<Eigen::VectorXcd> run_iterations(const Workspace& ws, const Eigen::VectorXcd& s_coeff,
                                             std::vector<Eigen::VectorXcd>& e_blocks) {
    const int nb = ws.blk;
    e_blocks.resize(ws.J);
    for (int j = 0; j < ws.J; ++j) e_blocks[j] = ws.Hs[j] * s_coeff;

    std::vector<Eigen::VectorXcd> states;
    states.reserve(ws.K + 1);
    states.push_back(Eigen::VectorXcd::Zero(ws.J * nb));
    for (int it = 0; it < ws.K; ++it) {
        Eigen::VectorXcd b = states.back();
        if (ws.jacobi) {
            Eigen::VectorXcd next(ws.J * nb);
            for (int j = 0; j < ws.J; ++j) {
                Eigen::VectorXcd z = e_blocks[j];
                for (int i = 0; i < ws.J; ++i)
                    if (i != j) z += ws.W[static_cast<size_t>(j) * ws.J + i] * b.segment(i * nb, nb);
                next.segment(j * nb, nb) = ws.T[j] * z;
            }
            b = std::move(next);
        } else {
            for (int j = 0; j < ws.J; ++j) {
                Eigen::VectorXcd z = e_blocks[j];
                for (int i = 0; i < ws.J; ++i)
                    if (i != j) z += ws.W[static_cast<size_t>(j) * ws.J + i] * b.segment(i * nb, nb);
                b.segment(j * nb, nb) = (1.0 - ws.omega) * b.segment(j * nb, nb) + ws.omega * (ws.T[j] * z);
            }
        }
        states.push_back(std::move(b));
    }
    return states;
}

struct ParamGrad {
    std::vector<Eigen::MatrixXcd> T_bar;          // adjoint of T_j
    std::vector<Eigen::Vector3d> pos_grad;        // dL/d(r_j)

    explicit ParamGrad(const Workspace& ws)
        : T_bar(ws.J, Eigen::MatrixXcd::Zero(ws.blk, ws.blk)),
          pos_grad(ws.J, Eigen::Vector3d::Zero()) {}
};

// Backprop through receiver evaluation and the unrolled iterations for one
// beam. b_bar_final is the adjoint of the final state.
void backward_beam(const Workspace& ws, const Eigen::VectorXcd& s_coeff,
                   const std::vector<Eigen::VectorXcd>& e_blocks,
                   const std::vector<Eigen::VectorXcd>& states, Eigen::VectorXcd b_bar,
                   ParamGrad& out) {
    const int nb = ws.blk;
    std::vector<Eigen::VectorXcd> e_bar(ws.J, Eigen::VectorXcd::Zero(nb));
    std::vector<Eigen::MatrixXcd> W_bar(static_cast<size_t>(ws.J) * ws.J);
    for (auto& m : W_bar) m = Eigen::MatrixXcd::Zero(nb, nb);

    for (int it = ws.K - 1; it >= 0; --it) {
        const Eigen::VectorXcd& prev = states[it];
        const Eigen::VectorXcd& next = states[it + 1];
        if (ws.jacobi) {
            Eigen::VectorXcd prev_bar = Eigen::VectorXcd::Zero(ws.J * nb);
            for (int j = 0; j < ws.J; ++j) {
                const Eigen::VectorXcd a = b_bar.segment(j * nb, nb);
                Eigen::VectorXcd z = e_blocks[j];
                for (int i = 0; i < ws.J; ++i)
                    if (i != j) z += ws.W[static_cast<size_t>(j) * ws.J + i] * prev.segment(i * nb, nb);
                out.T_bar[j] += a * z.adjoint();
                const Eigen::VectorXcd z_bar = ws.T[j].adjoint() * a;
                e_bar[j] += z_bar;
                for (int i = 0; i < ws.J; ++i) {
                    if (i == j) continue;
                    W_bar[static_cast<size_t>(j) * ws.J + i] += z_bar * prev.segment(i * nb, nb).adjoint();
                    prev_bar.segment(i * nb, nb) += ws.W[static_cast<size_t>(j) * ws.J + i].adjoint() * z_bar;
                }
            }
            b_bar = std::move(prev_bar);
        } else {
            // reverse the sweep: blocks i < j read the updated level, i > j the
            // previous one; descending order makes the in-place adjoint valid
            for (int j = ws.J - 1; j >= 0; --j) {
                const Eigen::VectorXcd a = b_bar.segment(j * nb, nb);
                Eigen::VectorXcd z = e_blocks[j];
                for (int i = 0; i < ws.J; ++i) {
                    if (i == j) continue;
                    const auto& src = i < j ? next : prev;
                    z += ws.W[static_cast<size_t>(j) * ws.J + i] * src.segment(i * nb, nb);
                }
                b_bar.segment(j * nb, nb) = (1.0 - ws.omega) * a;
                const Eigen::VectorXcd g = ws.omega * a;
                out.T_bar[j] += g * z.adjoint();
                const Eigen::VectorXcd z_bar = ws.T[j].adjoint() * g;
                e_bar[j] += z_bar;
                for (int i = 0; i < ws.J; ++i) {
                    if (i == j) continue;
                    const auto& src = i < j ? next : prev;
                    W_bar[static_cast<size_t>(j) * ws.J + i] += z_bar * src.segment(i * nb, nb).adjoint();
                    b_bar.segment(i * nb, nb) += ws.W[static_cast<size_t>(j) * ws.J + i].adjoint() * z_bar;
                }
            }
        }
    }

    // translation-block adjoints -> position gradients
    for (int j = 0; j < ws.J; ++j) {
        const Eigen::MatrixXcd Hs_bar = e_bar[j] * s_coeff.adjoint();
        for (int a = 0; a < 3; ++a)
            out.pos_grad[j][a] += Hs_bar.conjugate().cwiseProduct(ws.dHs[j][a]).sum().real();
        for (int i = 0; i < ws.J; ++i) {
            if (i == j) continue;
            const auto& wb = W_bar[static_cast<size_t>(j) * ws.J + i];
            if (wb.isZero(0.0)) continue;
            for (int a = 0; a < 3; ++a) {
                const double g = wb.conjugate().cwiseProduct(ws.dW[static_cast<size_t>(j) * ws.J + i][a]).sum().real();
                out.pos_grad[j][a] += g;
                out.pos_grad[i][a] -= g;
            }
        }
    }
}

Eigen::VectorXd pack_gradient(const FitParameters& params, const Workspace& ws, const ParamGrad& pg) {
    Eigen::VectorXd g(params.flat_size());
    int i = 0;
    if (params.diagonal) {
        for (int j = 0; j < ws.J; ++j)
            for (int d = 0; d < ws.blk; ++d) {
                g[i++] = pg.T_bar[j](d, d).real();
                g[i++] = pg.T_bar[j](d, d).imag();
            }
    } else {
        for (int j = 0; j < ws.J; ++j)
            for (int c = 0; c < ws.blk; ++c)
                for (int r = 0; r < ws.blk; ++r) {
                    g[i++] = pg.T_bar[j](r, c).real();
                    g[i++] = pg.T_bar[j](r, c).imag();
                }
    }
    for (int j = 0; j < ws.J; ++j)
        for (int d = 0; d < 3; ++d) g[i++] = pg.pos_grad[j][d];
    return g;
}

}  // namespace

Eigen::VectorXcd forward_predict(const FitParameters& params, const Scene& scene_template,
                                 const std::vector<ModalVector>& beams,
                                 const std::vector<Measurement>& records, const SolverConfig& solver) {
    if (solver.method == SolverMethod::Direct) {
        Scene scene = scene_template;
        params.apply_to(scene);
        scene.validate();
        Eigen::VectorXcd y(records.size());
        std::vector<Eigen::VectorXcd> b(beams.size());
        for (size_t k = 0; k < beams.size(); ++k)
            b[k] = solve_direct(assemble(scene, beams[k])).solution;
        for (size_t q = 0; q < records.size(); ++q)
            y[q] = eval_scattered(scene, b[records[q].beam], records[q].receiver);
        return y;
    }

    const Workspace ws = make_workspace(params, scene_template, solver, false);
    Eigen::VectorXcd y(records.size());
    Scene scene = scene_template;
    params.apply_to(scene);
    for (size_t bi = 0; bi < beams.size(); ++bi) {
        std::vector<Eigen::VectorXcd> e_blocks;
        const auto states = run_iterations(ws, beams[bi].coefficients, e_blocks);
        const Eigen::VectorXcd& b = states.back();
        for (size_t q = 0; q < records.size(); ++q)
            if (records[q].beam == static_cast<int>(bi)) y[q] = eval_scattered(scene, b, records[q].receiver);
    }
    return y;
}

double loss(const Eigen::VectorXcd& y, const std::vector<Measurement>& batch) {
    if (batch.empty()) throw std::invalid_argument("loss: empty batch");
    if (y.size() != static_cast<Eigen::Index>(batch.size())) throw std::invalid_argument("loss: size mismatch");
    double acc = 0.0;
    for (size_t q = 0; q < batch.size(); ++q)
        acc += std::norm(y[q] - batch[q].value) / (batch[q].y_ref * batch[q].y_ref);
    return acc / static_cast<double>(batch.size());
}

Eigen::VectorXd gradient(const FitParameters& params, const Scene& scene_template,
                         const std::vector<ModalVector>& beams, const std::vector<Measurement>& batch,
                         const SolverConfig& solver, GradientMode mode, double fd_step) {
    if (mode == GradientMode::FiniteDifference) {
        FitParameters p = params;
        Eigen::VectorXd x = p.flatten();
        Eigen::VectorXd g(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double h = fd_step * std::max(1.0, std::abs(x[i]));
            Eigen::VectorXd xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            p.unflatten(xp);
            const double lp = loss(forward_predict(p, scene_template, beams, batch, solver), batch);
            p.unflatten(xm);
            const double lm = loss(forward_predict(p, scene_template, beams, batch, solver), batch);
            g[i] = (lp - lm) / (2.0 * h);
        }
        return g;
    }

    const Workspace ws = make_workspace(params, scene_template, solver, true);
    ParamGrad pg(ws);
    const double Q = static_cast<double>(batch.size());
    const int nb = ws.blk;

    std::vector<cplx> u(nb);
    std::vector<Eigen::Vector3cd> du(nb);
    for (size_t bi = 0; bi < beams.size(); ++bi) {
        std::vector<Eigen::VectorXcd> e_blocks;
        const auto states = run_iterations(ws, beams[bi].coefficients, e_blocks);
        const Eigen::VectorXcd& b = states.back();

        Eigen::VectorXcd b_bar = Eigen::VectorXcd::Zero(ws.J * nb);
        bool touched = false;
        for (const auto& rec : batch) {
            if (rec.beam != static_cast<int>(bi)) continue;
            touched = true;
            cplx y{0.0, 0.0};
            // evaluate and differentiate the receiver sum in one pass
            std::vector<std::vector<cplx>> u_per(ws.J);
            for (int j = 0; j < ws.J; ++j) {
                const Eigen::Vector3d rel = rec.receiver - ws.positions[j];
                eval_outgoing_table(ws.blk == 1 ? 0 : mode_unflatten(nb - 1).l, ws.k, rel, u.data());
                u_per[j].assign(u.begin(), u.end());
                for (int i = 0; i < nb; ++i) y += b[j * nb + i] * u_per[j][i];
            }
            const double w = 1.0 / (rec.y_ref * rec.y_ref);
            const cplx y_bar = 2.0 * w / Q * (y - rec.value);
            for (int j = 0; j < ws.J; ++j) {
                const Eigen::Vector3d rel = rec.receiver - ws.positions[j];
                grad_outgoing_table(mode_unflatten(nb - 1).l, ws.k, rel, du.data());
                for (int i = 0; i < nb; ++i) {
                    b_bar[j * nb + i] += std::conj(u_per[j][i]) * y_bar;
                    for (int a = 0; a < 3; ++a)
                        pg.pos_grad[j][a] += (std::conj(y_bar) * b[j * nb + i] * (-du[i][a])).real();
                }
            }
        }
        if (!touched) continue;
        backward_beam(ws, beams[bi].coefficients, e_blocks, states, std::move(b_bar), pg);
    }

    Eigen::VectorXd g = pack_gradient(params, ws, pg);
    for (Eigen::Index i = 0; i < g.size(); ++i)
        if (!std::isfinite(g[i]))
            throw std::runtime_error("gradient: non-finite entry at parameter index " + std::to_string(i));
    return g;
}

void project_constraints(FitParameters& params, double gamma, double offset_radius) {
    if (!(gamma > 0.0)) throw std::invalid_argument("project_constraints: gamma must be positive");
    if (offset_radius < 0.0) throw std::invalid_argument("project_constraints: negative offset radius");
    // the relative slack keeps the projection idempotent in the presence of
    // rescaling round-off
    constexpr double kSlack = 1.0 + 1e-12;
    const double bound = std::sqrt(gamma);
    if (params.diagonal) {
        for (auto& t : params.t_diag)
            for (Eigen::Index d = 0; d < t.size(); ++d) {
                const double mag = std::abs(t[d]);
                if (mag > bound * kSlack) t[d] *= bound / mag;
            }
    } else {
        for (auto& t : params.t_full) {
            const double smax = t.jacobiSvd().singularValues()(0);
            if (smax > bound * kSlack) t *= bound / smax;
        }
    }
    for (auto& o : params.offsets) {
        const double n = o.norm();
        if (n > offset_radius * kSlack) o *= offset_radius / n;
    }
}

AdamState AdamState::init(int n, double lr_t, double lr_offset) {
    AdamState s;
    s.m = Eigen::VectorXd::Zero(n);
    s.v = Eigen::VectorXd::Zero(n);
    s.lr_t = lr_t;
    s.lr_offset = lr_offset;
    return s;
}

void adam_step(AdamState& state, FitParameters& params, const Eigen::VectorXd& grad, double gamma,
               double offset_radius) {
    Eigen::VectorXd x = params.flatten();
    if (grad.size() != x.size() || state.m.size() != x.size())
        throw std::invalid_argument("adam_step: state/gradient size mismatch");
    state.step += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(state.beta1, state.step);
    const double bc2 = 1.0 - std::pow(state.beta2, state.step);
    const int n_offset = 3 * static_cast<int>(params.offsets.size());
    const int n_t = static_cast<int>(x.size()) - n_offset;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double lr = i < n_t ? state.lr_t : state.lr_offset;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        x[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
    params.unflatten(x);
    project_constraints(params, gamma, offset_radius);
}

FitResult fit(const FitConfig& config, const MeasurementSet& measurements) {
    measurements.validate();
    if (measurements.records.empty()) throw std::invalid_argument("fit: no measurements");
    if (config.beams.empty()) throw std::invalid_argument("fit: no beams");

    // seeded initialization: small diagonal T, zero offsets
    Scene scene = config.scene_template;
    FitParameters params = FitParameters::from_scene(scene);
    {
        std::mt19937_64 rng(mix_seed(config.seed, kStreamInit, 0));
        std::normal_distribution<double> gauss(0.0, config.t_init_std_factor * std::sqrt(config.gamma));
        if (params.diagonal) {
            for (auto& t : params.t_diag)
                for (Eigen::Index d = 0; d < t.size(); ++d) t[d] = cplx(gauss(rng), gauss(rng));
        } else {
            for (auto& t : params.t_full)
                for (Eigen::Index c = 0; c < t.cols(); ++c)
                    for (Eigen::Index r = 0; r < t.rows(); ++r) t(r, c) = cplx(gauss(rng), gauss(rng));
        }
        for (auto& o : params.offsets) o.setZero();
    }
    project_constraints(params, config.gamma, config.offset_radius);

    AdamState adam = AdamState::init(params.flat_size(), config.lr_t, config.lr_offset);
    FitResult result;
    result.best_params = params;

    const int Q = measurements.size();
    const int batch_size = std::max(1, static_cast<int>(std::lround(config.batch_fraction * Q)));
    std::vector<int> order(Q);
    std::iota(order.begin(), order.end(), 0);

    double best_val = std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::mt19937_64 batch_rng(mix_seed(config.seed, kStreamBatch, epoch));
        std::shuffle(order.begin(), order.end(), batch_rng);
        std::vector<Measurement> batch;
        batch.reserve(batch_size);
        for (int i = 0; i < batch_size; ++i) batch.push_back(measurements.records[order[i]]);
        if (config.noise_std > 0.0) {
            std::mt19937_64 noise_rng(mix_seed(config.seed, kStreamNoise, epoch));
            std::normal_distribution<double> gauss(0.0, 1.0);
            const double scale = config.noise_std / std::sqrt(2.0);
            for (auto& rec : batch) rec.value += rec.y_ref * scale * cplx(gauss(noise_rng), gauss(noise_rng));
        }

        const Eigen::VectorXcd y_batch =
            forward_predict(params, config.scene_template, config.beams, batch, config.solver);
        const double train = loss(y_batch, batch);

        const Eigen::VectorXcd y_full = forward_predict(params, config.scene_template, config.beams,
                                                        measurements.records, config.solver);
        const double val = loss(y_full, measurements.records);

        if (!std::isfinite(train) || !std::isfinite(val)) break;  // keep the last finite state
        result.train_loss.push_back(train);
        result.val_loss.push_back(val);
        if (val < best_val) {
            best_val = val;
            result.best_params = params;
            result.best_epoch = epoch;
        }

        Eigen::VectorXd g =
            gradient(params, config.scene_template, config.beams, batch, config.solver, GradientMode::Analytic);
        if (!config.optimize_offsets) g.tail(3 * static_cast<Eigen::Index>(params.offsets.size())).setZero();
        adam_step(adam, params, g, config.gamma, config.offset_radius);
    }
    result.final_params = params;
    if (result.best_epoch < 0) result.best_params = params;
    return result;
}

}  // namespace modalwave
