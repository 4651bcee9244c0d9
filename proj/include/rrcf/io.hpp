#pragma once

// File formats: headerless row-major CSV matrices written with 17
// significant digits, 1-based permutation rows, and JSON documents for
// instances, fits, grids and benchmark specifications.

#include "rrcf/eval.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace rrcf::io {

using Json = nlohmann::json;

/// Throws IoError when unreadable, empty, ragged or non-numeric.
Matrix read_matrix_csv(const std::string& path);
Matrix parse_matrix_csv(std::istream& in, const std::string& name = "<stream>");
void write_matrix_csv(const std::string& path, const Matrix& m);
void write_matrix_csv(std::ostream& out, const Matrix& m);

/// One permutation per line, 1-based.
Permutation read_permutation_csv(const std::string& path);
void write_permutation_csv(const std::string& path, const Permutation& perm);
void write_permutations_csv(const std::string& path, const std::vector<Permutation>& perms);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json instance_to_json(const sem::SemInstance& inst, int s);
Json config_to_json(const RrcfConfig& cfg);
Json fit_to_json(const FitResult& fit, const RrcfConfig& cfg);

/// Keys: lambdas, gammas, mus, etas, gamma_bic, outer_k_max; missing keys
/// keep the defaults. Throws InvalidArgument on malformed values.
TuningGrid grid_from_json(const Json& j);
Json point_to_json(const TuningPoint& point);
void write_tuning_csv(std::ostream& out, const TuningResult& result);

/// Keys: settings ([[p, s], ...] or [{"p": .., "s": ..}, ...]), n, reps,
/// seed, grid, edge_threshold, record_runtime and an optional config object
/// with outer_k_max, outer_eps, solver_eps, solver_k_max, relax_k_max,
/// relax_eps, n_samples.
eval::BenchmarkSpec benchmark_spec_from_json(const Json& j);

/// Throws IoError when unreadable or not valid JSON.
Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

void write_text(const std::string& path, const std::string& text);

}  // namespace rrcf::io
