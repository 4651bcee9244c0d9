#pragma once

// Alternating estimation of an ordering and a sparse Cholesky factor, and
// eBIC-based selection of the tuning parameters.

#include "rrcf/birkhoff.hpp"
#include "rrcf/cholesky_solver.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace rrcf {

struct RrcfConfig {
    score::McpParams mcp;
    birkhoff::RelaxationConfig relax;
    /// When set, the P-step uses the centered variant with mu at its
    /// convexity threshold lambda_2(S) lambda_1(L^t L) if n >= p, and the
    /// plain variant with relax.mu if n < p. When unset relax is used as is.
    bool auto_relaxation = true;
    /// Start each relaxation from the vertex of the current ordering rather
    /// than from J / p.
    bool warm_start_relaxation = false;
    solver::SolverSettings solver;
    int outer_k_max = 20;
    double outer_eps = 1e-6;
    std::uint64_t seed = 0;
    int threads = 1;
    double gamma_bic = 0.5;

    void validate() const;
};

struct IterationRecord {
    Permutation perm;
    score::ScoreBreakdown before_l_step;  // (L^{(k-1)}, P^{(k)})
    score::ScoreBreakdown after_l_step;   // (L^{(k)}, P^{(k)})
    double objective_before = 0.0;        // decoupled objective, same points
    double objective_after = 0.0;
    // P-step diagnostics
    double mu = 0.0;
    birkhoff::Variant variant = birkhoff::Variant::centered;
    birkhoff::ConvexityThresholds thresholds;
    int relaxation_iterations = 0;
    bool relaxation_converged = false;
    double max_projection_gap = 0.0;
    int unconverged_projections = 0;
    bool snapped = false;
    int candidates = 0;
    // L-step diagnostics
    bool solver_converged = false;
    int max_sweeps = 0;
    long long total_sweeps = 0;
};

struct FitResult {
    sem::CholeskyFactor l_hat;          // in the frame of perm_hat
    Permutation perm_hat;
    sem::WeightedAdjacency b_hat;       // original variable labels
    sem::NoiseVariances omega_hat;      // original variable labels
    score::ScoreBreakdown score;        // of (l_hat, perm_hat)
    double objective = 0.0;             // decoupled objective of (l_hat, perm_hat)
    std::vector<IterationRecord> trace;
    int best_iteration = 0;             // 1-based index into trace
    double ebic_value = 0.0;
    bool converged = false;             // permutation fixed point reached and rows converged
    int n = 0;
    int p = 0;
};

/// Lowest-objective iterate over the outer loop. P^{(0)} = identity,
/// L^{(0)} = diag(1 / sqrt(S_ii)); each L-step starts its rows both from
/// L^{(k-1)} and cold. Stops early once the permutation repeats and the
/// objective improves by less than outer_eps.
FitResult fit(const sem::DataMatrix& x, const RrcfConfig& cfg);
FitResult fit_covariance(const sem::SampleCovariance& s, int n, const RrcfConfig& cfg);

struct TuningGrid {
    std::vector<double> lambdas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.85, 1.0};
    std::vector<double> gammas{2.0};
    std::vector<double> mus{0.0};    // only used when n < p
    std::vector<double> etas{};      // only used when n < p; empty means the default step
    double gamma_bic = 0.5;
    int outer_k_max = 1;

    void validate() const;
};

struct TuningPoint {
    double lambda = 0.0;
    double gamma = 0.0;
    std::optional<double> mu;
    std::optional<double> eta;
};

struct TuningRow {
    TuningPoint point;
    double ebic = 0.0;
    int support = 0;
    double nll = 0.0;
};

struct TuningResult {
    TuningPoint best;
    std::size_t best_index = 0;
    std::vector<TuningRow> table;  // lexicographic grid order: lambda, gamma, mu, eta
};

/// Fits every grid point with grid.outer_k_max outer iterations and returns
/// the eBIC minimiser (first in grid order on ties).
TuningResult tune(const sem::DataMatrix& x, const TuningGrid& grid, const RrcfConfig& cfg);
TuningResult tune_covariance(const sem::SampleCovariance& s, int n, const TuningGrid& grid, const RrcfConfig& cfg);

/// cfg with the selected point applied.
RrcfConfig apply_point(const RrcfConfig& cfg, const TuningPoint& point);

}  // namespace rrcf
