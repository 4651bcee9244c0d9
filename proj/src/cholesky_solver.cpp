#include "rrcf/cholesky_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rrcf::solver {

namespace {

double soft_threshold(double z, double lambda) {
    const double a = std::abs(z) - lambda;
    if (a <= 0.0) return 0.0;
    return z > 0.0 ? a : -a;
}

// Coordinate updates read sum_{l != j} A_lj x_l from the running product
// r = A x, kept current as coordinates change.
double offdiag_from_cross(const RowSubproblem& sub, double cross, int j, bool single_branch) {
    const double ajj = sub.a(j, j);
    const double lambda = sub.params.lambda;
    const double gamma = sub.params.gamma;
    const double denom = 2.0 * ajj - 1.0 / gamma;
    if (!(denom > 0.0)) {
        std::ostringstream msg;
        msg << "coordinate update is not strictly convex: 2 A_jj - 1/gamma = " << denom
            << " <= 0; raise gamma above max{1/(2 A_jj), 1}";
        throw GuardViolation(msg.str());
    }
    const double z = -2.0 * cross;
    if (!single_branch && std::abs(z) / (2.0 * ajj) >= gamma * lambda) return z / (2.0 * ajj);
    return soft_threshold(z, lambda) / denom;
}

double diag_from_cross(double akk, double c) {
    const double disc = std::sqrt(c * c + 4.0 * akk);
    // Same root, two forms; pick the one without cancellation.
    return c > 0.0 ? 2.0 / (c + disc) : (disc - c) / (2.0 * akk);
}

}  // namespace

void SolverSettings::validate() const {
    if (!(eps > 0.0)) throw InvalidArgument("solver eps must be > 0");
    if (k_max < 1) throw InvalidArgument("solver k_max must be >= 1");
}

double row_objective(const RowSubproblem& sub, const Vector& x) {
    const int k = sub.k();
    if (!(x(k - 1) > 0.0)) return std::numeric_limits<double>::infinity();
    double pen = 0.0;
    for (int j = 0; j < k - 1; ++j) pen += score::mcp(x(j), sub.params);
    return -2.0 * std::log(x(k - 1)) + x.dot(sub.a * x) + pen;
}

double update_offdiagonal(const RowSubproblem& sub, const Vector& x, int j, bool single_branch) {
    if (j < 0 || j >= sub.k() - 1) throw InvalidArgument("off-diagonal index out of range");
    const double cross = sub.a.col(j).dot(x) - sub.a(j, j) * x(j);
    return offdiag_from_cross(sub, cross, j, single_branch);
}

double update_diagonal(const RowSubproblem& sub, const Vector& x) {
    const int kk = sub.k() - 1;
    const double akk = sub.a(kk, kk);
    if (!(akk > 0.0)) throw DegenerateInput("diagonal update needs A_kk > 0");
    const double c = sub.a.col(kk).dot(x) - akk * x(kk);
    return diag_from_cross(akk, c);
}

RowSolution minimize_row(const RowSubproblem& sub, const Vector& x0, const SolverSettings& settings) {
    settings.validate();
    const int k = sub.k();
    if (x0.size() != k) throw InvalidArgument("initial vector has the wrong length");
    if (!(x0(k - 1) > 0.0)) throw InvalidArgument("initial diagonal entry must be positive");
    const int kk = k - 1;
    const double akk = sub.a(kk, kk);
    if (!(akk > 0.0)) throw DegenerateInput("row subproblem needs A_kk > 0");

    RowSolution sol;
    sol.x = x0;
    Vector r = sub.a * sol.x;
    if (settings.record_trace) sol.objective_trace.push_back(row_objective(sub, sol.x));

    Vector old(k);
    for (int sweep = 1; sweep <= settings.k_max; ++sweep) {
        old = sol.x;
        for (int j = 0; j < kk; ++j) {
            const double cross = r(j) - sub.a(j, j) * sol.x(j);
            const double next = offdiag_from_cross(sub, cross, j, settings.single_branch);
            const double delta = next - sol.x(j);
            if (delta != 0.0) {
                r.noalias() += delta * sub.a.col(j);
                sol.x(j) = next;
            }
        }
        const double next = diag_from_cross(akk, r(kk) - akk * sol.x(kk));
        const double delta = next - sol.x(kk);
        if (delta != 0.0) {
            r.noalias() += delta * sub.a.col(kk);
            sol.x(kk) = next;
        }
        sol.sweeps = sweep;
        if (settings.record_trace) sol.objective_trace.push_back(row_objective(sub, sol.x));
        if ((sol.x - old).norm() < settings.eps) {
            sol.converged = true;
            break;
        }
        // Refresh the running product occasionally to bound drift.
        if (sweep % 64 == 0) r.noalias() = sub.a * sol.x;
    }
    return sol;
}

void check_convexity_guard(const Matrix& sp, const score::McpParams& params) {
    params.validate();
    for (Index i = 0; i < sp.rows(); ++i) {
        const double bound = std::max(1.0 / (2.0 * sp(i, i)), 1.0);
        if (!(params.gamma > bound)) {
            std::ostringstream msg;
            msg << "gamma = " << params.gamma << " violates the strict-convexity bound gamma > max{1/(2 A_ii), 1} = "
                << bound << " at index " << i + 1;
            throw GuardViolation(msg.str());
        }
    }
}

CholeskyEstimate estimate_cholesky(const Permutation& perm, const sem::SampleCovariance& s, const score::McpParams& params,
                                   const SolverSettings& settings, const std::optional<sem::CholeskyFactor>& l0) {
    settings.validate();
    params.validate();
    const int p = s.dim();
    if (perm.size() != p) throw InvalidArgument("permutation and covariance dimensions differ");
    if (l0 && l0->dim() != p) throw InvalidArgument("initial Cholesky factor has the wrong dimension");
    const Matrix sp = perm.conjugate(s.matrix());
    for (Index i = 0; i < p; ++i)
        if (!(sp(i, i) > 0.0)) throw DegenerateInput("permuted covariance has a non-positive diagonal entry");
    if (p > 1) check_convexity_guard(sp, params);

    Matrix l = Matrix::Zero(p, p);
    std::vector<int> sweeps(static_cast<std::size_t>(p), 0);
    std::vector<char> converged(static_cast<std::size_t>(p), 1);
    l(0, 0) = 1.0 / std::sqrt(sp(0, 0));

    parallel_for(static_cast<std::size_t>(std::max(p - 1, 0)), settings.threads, [&](std::size_t task) {
        const int i = static_cast<int>(task) + 1;
        const int k = i + 1;
        RowSubproblem sub{sp.topLeftCorner(k, k), params};
        Vector cold = Vector::Zero(k);
        cold(i) = 1.0 / std::sqrt(sub.a(i, i));
        RowSolution best = minimize_row(sub, cold, settings);
        if (l0) {
            const Vector warm = l0->matrix().row(i).head(k).transpose();
            RowSolution from_warm = minimize_row(sub, warm, settings);
            if (row_objective(sub, from_warm.x) <= row_objective(sub, best.x)) best = std::move(from_warm);
        }
        l.row(i).head(k) = best.x.transpose();
        sweeps[static_cast<std::size_t>(i)] = best.sweeps;
        converged[static_cast<std::size_t>(i)] = best.converged ? 1 : 0;
    });

    CholeskyEstimate est;
    est.l = sem::CholeskyFactor(std::move(l));
    est.row_sweeps = sweeps;
    for (std::size_t i = 0; i < sweeps.size(); ++i) {
        est.max_sweeps = std::max(est.max_sweeps, sweeps[i]);
        est.total_sweeps += sweeps[i];
        if (!converged[i]) est.converged = false;
    }
    return est;
}

std::vector<double> row_objectives(const Matrix& l, const Matrix& sp, const score::McpParams& params) {
    const Index p = l.rows();
    std::vector<double> out(static_cast<std::size_t>(p));
    for (Index i = 0; i < p; ++i) {
        const Index k = i + 1;
        RowSubproblem sub{sp.topLeftCorner(k, k), params};
        out[static_cast<std::size_t>(i)] = row_objective(sub, l.row(i).head(k).transpose());
    }
    return out;
}

bool check_lower_bounds(const sem::CholeskyFactor& l, const Matrix& sp, const score::McpParams& params,
                        double score_total) {
    const int p = l.dim();
    if (!(score_total >= -2.0 * p)) return false;
    const std::vector<double> rows = row_objectives(l.matrix(), sp, params);
    for (int i = 0; i < p; ++i)
        if (!(rows[static_cast<std::size_t>(i)] >= 2.0 - 2.0 * l(i, i))) return false;
    return true;
}

}  // namespace rrcf::solver
