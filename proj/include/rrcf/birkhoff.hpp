#pragma once

// Permutation-side machinery: Euclidean projection onto the Birkhoff polytope
// by dual block coordinate ascent, gradient projection for the relaxed
// ordering objective, convexity thresholds, and rounding of doubly stochastic
// matrices to permutations (rank matching and linear assignment).

#include "rrcf/core.hpp"

#include <vector>

namespace rrcf::birkhoff {

/// Nonnegative square matrix with unit row and column sums
/// (entries >= -1e-10, sums within 1e-8 of one).
class DoublyStochastic {
public:
    DoublyStochastic() = default;
    /// Throws InvalidArgument when `m` violates the feasibility tolerances.
    explicit DoublyStochastic(Matrix m);
    /// Wraps without checking; used for flagged non-converged iterates.
    static DoublyStochastic unchecked(Matrix m);
    static DoublyStochastic center(int p);  // J / p
    static DoublyStochastic vertex(const Permutation& perm);

    static bool is_feasible(const Matrix& m, double entry_tol = 1e-10, double sum_tol = 1e-8);

    const Matrix& matrix() const { return m_; }
    int dim() const { return static_cast<int>(m_.rows()); }

private:
    Matrix m_;
};

struct DualVariables {
    Vector u;
    Vector v;
    Matrix bigu;  // entrywise >= 0
};

enum class Variant { plain, centered };

struct RelaxationConfig {
    double mu = 0.0;                  // weight of the -mu/2 ||P||^2 (or ||TP||^2) term
    Variant variant = Variant::centered;
    std::optional<double> eta;        // step scale; default 1 / (l_max(S) l_max(L^t L) + mu)
    double eps = 1e-8;                // gradient projection stops when ||P_{k+1} - P_k||_F <= eps
    int k_max = 500;                  // gradient projection iterations
    int n_samples = 100;              // rank-matching samples
    double projection_eps = 1e-12;    // duality gap target of each inner projection
    int projection_k_max = 20000;

    void validate() const;
};

struct ProjectionResult {
    DoublyStochastic p;
    DualVariables dual;
    double gap = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// 1/2 ||P - P0||_F^2 over the Birkhoff polytope, solved through its dual.
/// Per sweep: U <- max(0, u 1^t + 1 v^t - P0), then the exact u and v block
/// maximisers, then the primal P0 - u 1^t - 1 v^t + U. Stops once the
/// duality gap is below eps and the primal satisfies the feasibility
/// tolerances; otherwise returns the last iterate with converged = false.
ProjectionResult project_to_birkhoff(const Matrix& p0, double eps, int k_max);

/// -1/2 ||u 1^t + 1 v^t - U||^2 - tr(U^t P0) + u^t (P0 1 - 1) + v^t (P0^t 1 - 1).
double dual_objective(const DualVariables& dv, const Matrix& p0);

/// 1/2 tr(L P S P^t L^t) - mu/2 ||P||^2 (plain) or - mu/2 ||T P||^2 (centered),
/// T = I - 11^t / p.
double relaxed_objective(const Matrix& pm, const Matrix& l, const Matrix& s, const RelaxationConfig& cfg);

/// (L^t L) P S - mu P (plain) or (L^t L) P S - mu T P (centered).
Matrix relaxed_gradient(const Matrix& pm, const Matrix& l, const Matrix& s, const RelaxationConfig& cfg);

/// Unpenalised assignment cost 1/2 tr(L P S P^t L^t) of a permutation.
double permutation_cost(const Permutation& perm, const Matrix& l, const Matrix& s);

struct ConvexityThresholds {
    double plain_convex = 0.0;     // lambda_1(S) lambda_1(L^t L)
    double centered_convex = 0.0;  // lambda_2(S) lambda_1(L^t L)
    double concave = 0.0;          // lambda_max(S) lambda_max(L^t L)
};

/// Uses the raw (not distinct) ascending eigenvalues; lambda_2 of a 1x1
/// matrix is taken to be lambda_1.
ConvexityThresholds convexity_thresholds(const Matrix& l, const Matrix& s);

/// 1 / (lambda_max(S) lambda_max(L^t L) + mu).
double default_step(const Matrix& l, const Matrix& s, double mu);

struct GradientProjectionResult {
    DoublyStochastic p;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // value after each accepted step, first entry at p_init
    double max_projection_gap = 0.0;
    int unconverged_projections = 0;
};

/// P_hat <- proj(P - eta grad), P <- P + alpha (P_hat - P) with Armijo
/// backtracking on alpha (start 1, halve, sufficient decrease 1e-4).
GradientProjectionResult gradient_projection(const Matrix& l, const Matrix& s, const RelaxationConfig& cfg,
                                             const DoublyStochastic& p_init);

/// r(x)_i = k when x_i is the k-th smallest entry (1-based); ties broken by
/// ascending index.
std::vector<int> rank_vector(std::span<const double> x);

/// The permutation matching the k-th smallest entry of x to the k-th
/// smallest entry of ds x: position i (k-th smallest of ds x) takes the
/// variable holding the k-th smallest entry of x.
Permutation match_ranks(const Matrix& ds, const Vector& x);

/// Draws x ~ N(0, I) per sample from an independent stream derived from one
/// draw of `rng`, so results do not depend on `threads`.
std::vector<Permutation> sample_permutations(const Matrix& ds, int n_samples, Rng& rng, int threads = 1);

/// Exact linear assignment maximising tr(ds^t P). Among optimal assignments
/// (ties within 1e-10 of the reduced costs) the lexicographically smallest
/// is returned.
Permutation round_hungarian(const Matrix& ds);

struct PermutationEstimate {
    Permutation perm;
    bool snapped = false;         // gradient projection returned a vertex
    int candidates = 0;
    double cost = 0.0;            // 1/2 tr(L P S P^t L^t) of the chosen permutation
    GradientProjectionResult relaxation;
};

/// Solves the relaxation from `p_init` (center when absent). A vertex output
/// (entrywise within 1e-6) is returned directly; otherwise candidates are the
/// Hungarian rounding followed by `n_samples` rank-matching samples, and the
/// one with the lowest unpenalised cost wins (first index on ties).
PermutationEstimate estimate_permutation(const Matrix& l, const Matrix& s, const RelaxationConfig& cfg, Rng& rng,
                                         const std::optional<DoublyStochastic>& p_init = std::nullopt,
                                         int threads = 1);

}  // namespace rrcf::birkhoff
