#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "modalwave/beams.hpp"
#include "modalwave/inverse.hpp"
#include "modalwave/scene.hpp"

namespace modalwave::io {

using json = nlohmann::ordered_json;

json load_json(const std::string& path);

/// Scene schema: wavelength, source {position, truncation}, scatterers
/// [{anchor, offset, t_diag|t_full, truncation}]. Complex numbers are
/// [re, im] pairs. Throws std::invalid_argument naming the offending field.
Scene parse_scene(const json& j);
json scene_to_json(const Scene& scene);

GridSpec parse_grid(const json& j);
SolverConfig parse_solver(const json& j);

/// Beam entry {A, k_theta, k_phi, sigma, theta0_deg, phi0_deg}; degrees are
/// converted to radians here, exactly once.
BeamPattern parse_beam(const json& j);

/// Source coefficients: either "source_coefficients" ([[re,im],...]) or
/// "source_mode" ({l, p} unit vector), at truncation N.
ModalVector parse_source(const json& j, int truncation);

/// Atomic write: temp file in the same directory, then rename.
void write_text_atomic(const std::string& path, const std::string& content);

std::string format_double(double v);  // 17 significant digits

std::string radiomap_csv(const Radiomap& map);
std::string convergence_csv(const std::vector<std::pair<std::string, std::vector<double>>>& histories);
std::string loss_csv(const std::vector<double>& train, const std::vector<double>& val);
std::string beam_coeffs_csv(const ModalVector& s);

uint64_t fnv1a(const std::string& data);

/// Writes manifest.json into out_dir: command, resolved config snapshot,
/// seed, and an FNV-1a checksum per artifact.
void write_manifest(const std::string& out_dir, const std::string& command, const json& config,
                    uint64_t seed, const std::vector<std::pair<std::string, std::string>>& artifacts);

}  // namespace modalwave::io
