#pragma once

// Sparse Cholesky factor estimation for a fixed ordering. The decoupled
// objective splits into one penalised regression per row,
//   h(x) = -2 log x_k + x^t A x + sum_{j<k} rho(|x_j|),
// with A the leading k x k block of P S P^t, and each row is minimised by
// cyclic coordinate descent with closed-form coordinate updates.

#include "rrcf/score.hpp"

#include <optional>
#include <vector>

namespace rrcf::solver {

struct RowSubproblem {
    Matrix a;  // k x k leading block of S^P
    score::McpParams params;

    int k() const { return static_cast<int>(a.rows()); }
};

struct SolverSettings {
    double eps = 1e-8;           // stop when ||x_cur - x_old||_2 < eps
    int k_max = 500;             // sweep cap
    bool single_branch = false;  // use S_lambda(z) / (2 A_jj - 1/gamma) everywhere
    bool record_trace = false;   // keep h after every sweep
    int threads = 1;             // rows are solved concurrently

    void validate() const;
};

/// h(x) for a row subproblem; +inf when x_k <= 0.
double row_objective(const RowSubproblem& sub, const Vector& x);

/// Exact minimiser of h over coordinate j < k - 1 (0-based) with the others
/// fixed. With z = -2 sum_{l != j} A_lj x_l: z / (2 A_jj) when
/// |z| / (2 A_jj) >= gamma lambda, else S_lambda(z) / (2 A_jj - 1/gamma).
/// Throws GuardViolation when 2 A_jj - 1/gamma <= 0.
double update_offdiagonal(const RowSubproblem& sub, const Vector& x, int j, bool single_branch = false);

/// Positive root of A_kk t^2 + (sum_{l != k} A_lk x_l) t - 1 = 0.
double update_diagonal(const RowSubproblem& sub, const Vector& x);

struct RowSolution {
    Vector x;
    bool converged = false;
    int sweeps = 0;
    std::vector<double> objective_trace;  // h before the first sweep, then after each (when recorded)
};

/// Full sweeps over j = 0..k-2 (ascending) then the diagonal.
RowSolution minimize_row(const RowSubproblem& sub, const Vector& x0, const SolverSettings& settings);

/// Refuses gamma <= max{1/(2 S^P_ii), 1} for any i: the coordinate
/// functions are only guaranteed strictly convex above that bound.
void check_convexity_guard(const Matrix& sp, const score::McpParams& params);

struct CholeskyEstimate {
    sem::CholeskyFactor l;
    bool converged = true;
    int max_sweeps = 0;
    long long total_sweeps = 0;
    std::vector<int> row_sweeps;
};

/// Row 0 in closed form 1 / sqrt(S^P_00); rows i >= 1 via minimize_row on the
/// leading (i+1) x (i+1) block of S^P. Rows start at off-diagonals 0 and
/// diagonal 1 / sqrt(A_kk); when `l0` is given each row also runs from the
/// corresponding row of l0 and keeps whichever start reaches the lower h
/// (the warm start on ties). Output does not depend on settings.threads.
CholeskyEstimate estimate_cholesky(const Permutation& perm, const sem::SampleCovariance& s, const score::McpParams& params,
                                   const SolverSettings& settings,
                                   const std::optional<sem::CholeskyFactor>& l0 = std::nullopt);

/// Per-row objectives h_i of L against S^P (row 0 included).
std::vector<double> row_objectives(const Matrix& l, const Matrix& sp, const score::McpParams& params);

/// True iff score_total >= -2p and every row objective h_i >= 2 - 2 L_ii
/// (from x^t A x >= 0, rho >= 0 and -log y >= 1 - y).
bool check_lower_bounds(const sem::CholeskyFactor& l, const Matrix& sp, const score::McpParams& params,
                        double score_total);

}  // namespace rrcf::solver
