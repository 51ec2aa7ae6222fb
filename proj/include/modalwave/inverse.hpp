#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "modalwave/coupling.hpp"
#include "modalwave/scene.hpp"

namespace modalwave {

/// Optimization variables: per-scatterer T-matrix entries plus position
/// offsets, with a flattened real view (Re/Im of all T entries first, then
/// offset components).
struct FitParameters {
    std::vector<Eigen::VectorXcd> t_diag;     // used when diagonal
    std::vector<Eigen::MatrixXcd> t_full;     // used when !diagonal
    std::vector<Eigen::Vector3d> offsets;
    bool diagonal = true;
    int truncation = 0;

    static FitParameters from_scene(const Scene& scene);
    void apply_to(Scene& scene) const;

    int flat_size() const;
    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& x);
};

/// One (beam, receiver) record. y_ref is the positive reference magnitude
/// entering the loss denominator.
struct Measurement {
    int beam = 0;
    Eigen::Vector3d receiver = Eigen::Vector3d::Zero();
    cplx value{0.0, 0.0};
    double y_ref = 1.0;
};

struct MeasurementSet {
    std::vector<Measurement> records;

    /// Throws unless every y_ref > 0.
    void validate() const;
    int size() const { return static_cast<int>(records.size()); }
};

/// Builds a noise-free measurement set from a ground-truth scene: scattered
/// field only, per-record y_ref = |field| floored at 1e-12 * max |field|.
MeasurementSet synthesize_measurements(const Scene& truth, const std::vector<ModalVector>& beams,
                                       const std::vector<Eigen::Vector3d>& receivers,
                                       const SolverConfig& solver);

enum class GradientMode { Analytic, FiniteDifference };

struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    int step = 0;
    double lr_t = 1e-3;
    double lr_offset = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState init(int n, double lr_t, double lr_offset);
};

struct FitConfig {
    Scene scene_template;                 // anchors, wavelength, orders; T/offsets replaced by params
    std::vector<ModalVector> beams;
    SolverConfig solver;                  // fixed iteration count for determinism
    int epochs = 1000;
    double batch_fraction = 0.15;
    double noise_std = 0.0;               // relative to |y_ref| per record
    double gamma = 1.0;                   // T energy bound: sigma_max(T) <= sqrt(gamma)
    double offset_radius = 0.0;
    bool optimize_offsets = true;         // false = T-only mode
    double lr_t = 1e-3;
    double lr_offset = 5e-4;
    double t_init_std_factor = 0.1;       // init std = factor * sqrt(gamma)
    uint64_t seed = 0;
};

struct FitResult {
    FitParameters best_params;            // best validation loss
    FitParameters final_params;
    std::vector<double> train_loss;       // one entry per epoch
    std::vector<double> val_loss;
    int best_epoch = -1;
};

/// Scattered-field predictions at the given records (direct field excluded).
/// One coupled solve per beam with the fixed solver config.
Eigen::VectorXcd forward_predict(const FitParameters& params, const Scene& scene_template,
                                 const std::vector<ModalVector>& beams,
                                 const std::vector<Measurement>& records, const SolverConfig& solver);

/// (1/Q) sum |y_q - y_meas|^2 / |y_ref|^2 over the batch.
double loss(const Eigen::VectorXcd& y, const std::vector<Measurement>& batch);

/// Gradient of the loss over the flattened real parameterization.
Eigen::VectorXd gradient(const FitParameters& params, const Scene& scene_template,
                         const std::vector<ModalVector>& beams, const std::vector<Measurement>& batch,
                         const SolverConfig& solver, GradientMode mode, double fd_step = 1e-6);

/// Clips T magnitudes to sqrt(gamma) (largest singular value for full
/// matrices, per-entry magnitude for diagonal ones) and offsets to the given
/// radius. Idempotent.
void project_constraints(FitParameters& params, double gamma, double offset_radius);

/// One Adam update with per-group learning rates, then constraint projection.
void adam_step(AdamState& state, FitParameters& params, const Eigen::VectorXd& grad, double gamma,
               double offset_radius);

FitResult fit(const FitConfig& config, const MeasurementSet& measurements);

}  // namespace modalwave
