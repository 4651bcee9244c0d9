#include "rrcf/birkhoff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace rrcf::birkhoff {

namespace {

constexpr double kArmijoC = 1e-4;
constexpr int kMaxBacktracks = 60;
constexpr double kSnapTol = 1e-6;
// Stricter than the type tolerances so that convex combinations built from
// projections stay inside them.
constexpr double kProjEntryTol = 1e-11;
constexpr double kProjSumTol = 1e-10;

double max_sum_residual(const Matrix& m) {
    const double rows = (m.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double cols = (m.colwise().sum().array() - 1.0).abs().maxCoeff();
    return std::max(rows, cols);
}

// 1/2 tr(G P S P^t) - mu/2 ||P||^2 or ||TP||^2, with gradient, sharing the
// product G P S.
struct RelaxedQuadratic {
    Matrix gram;  // L^t L
    const Matrix& s;
    double mu;
    Variant variant;

    RelaxedQuadratic(const Matrix& l, const Matrix& s_in, const RelaxationConfig& cfg)
        : gram(l.transpose() * l), s(s_in), mu(cfg.mu), variant(cfg.variant) {}

    double value(const Matrix& pm, Matrix* grad) const {
        const Matrix gps = gram * pm * s;
        const double quad = 0.5 * gps.cwiseProduct(pm).sum();
        double reg = pm.squaredNorm();
        Matrix col_sums;
        if (variant == Variant::centered) {
            col_sums = pm.colwise().sum();
            reg -= col_sums.squaredNorm() / static_cast<double>(pm.rows());
        }
        if (grad) {
            *grad = gps - mu * pm;
            if (variant == Variant::centered)
                grad->rowwise() += (mu / static_cast<double>(pm.rows())) * col_sums.row(0);
        }
        return quad - 0.5 * mu * reg;
    }
};

}  // namespace

DoublyStochastic::DoublyStochastic(Matrix m) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() == 0) throw InvalidArgument("doubly stochastic matrix must be square");
    if (!is_feasible(m_)) throw InvalidArgument("matrix is not doubly stochastic within tolerance");
}

DoublyStochastic DoublyStochastic::unchecked(Matrix m) {
    DoublyStochastic out;
    out.m_ = std::move(m);
    return out;
}

DoublyStochastic DoublyStochastic::center(int p) {
    return unchecked(Matrix::Constant(p, p, 1.0 / static_cast<double>(p)));
}

DoublyStochastic DoublyStochastic::vertex(const Permutation& perm) { return unchecked(perm.matrix()); }

bool DoublyStochastic::is_feasible(const Matrix& m, double entry_tol, double sum_tol) {
    if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) return false;
    if (m.minCoeff() < -entry_tol) return false;
    return max_sum_residual(m) <= sum_tol;
}

void RelaxationConfig::validate() const {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidArgument("relaxation mu must be >= 0");
    if (eta && !(*eta > 0.0)) throw InvalidArgument("relaxation eta must be > 0");
    if (!(eps > 0.0)) throw InvalidArgument("relaxation eps must be > 0");
    if (k_max < 1) throw InvalidArgument("relaxation k_max must be >= 1");
    if (n_samples < 1) throw InvalidArgument("relaxation n_samples must be >= 1");
    if (!(projection_eps > 0.0) || projection_k_max < 1) throw InvalidArgument("invalid projection tolerances");
}

double dual_objective(const DualVariables& dv, const Matrix& p0) {
    const Index p = p0.rows();
    const Matrix m = dv.u * Vector::Ones(p).transpose() + Vector::Ones(p) * dv.v.transpose() - dv.bigu;
    const Vector ones = Vector::Ones(p);
    return -0.5 * m.squaredNorm() - dv.bigu.cwiseProduct(p0).sum() + dv.u.dot(p0 * ones - ones) +
           dv.v.dot(p0.transpose() * ones - ones);
}

ProjectionResult project_to_birkhoff(const Matrix& p0, double eps, int k_max) {
    if (p0.rows() != p0.cols() || p0.rows() == 0) throw InvalidArgument("projection input must be square");
    if (!p0.allFinite()) throw InvalidArgument("projection input must be finite");
    if (!(eps > 0.0) || k_max < 1) throw InvalidArgument("projection needs eps > 0 and k_max >= 1");

    const Index p = p0.rows();
    const double inv_p = 1.0 / static_cast<double>(p);
    const Vector row0 = p0.rowwise().sum();
    const Vector col0 = p0.colwise().sum().transpose();

    ProjectionResult res;
    DualVariables& dv = res.dual;
    dv.u = Vector::Zero(p);
    dv.v = Vector::Zero(p);
    dv.bigu = Matrix::Zero(p, p);
    Matrix primal = p0;

    for (int k = 1; k <= k_max; ++k) {
        for (Index j = 0; j < p; ++j)
            for (Index i = 0; i < p; ++i) dv.bigu(i, j) = std::max(0.0, dv.u(i) + dv.v(j) - p0(i, j));
        dv.u = inv_p * (row0 - Vector::Constant(p, dv.v.sum() + 1.0) + dv.bigu.rowwise().sum());
        dv.v = inv_p * (col0 - Vector::Constant(p, dv.u.sum() + 1.0) + dv.bigu.colwise().sum().transpose());
        for (Index j = 0; j < p; ++j)
            for (Index i = 0; i < p; ++i) primal(i, j) = p0(i, j) - dv.u(i) - dv.v(j) + dv.bigu(i, j);

        // f(P) - f*(u, v, U) rewritten as the complementary-slackness
        // residual u^t (1 - P1) + v^t (1 - P^t 1) + <U, P>; algebraically
        // identical and free of cancellation between large terms.
        const Vector row_res = Vector::Ones(p) - primal.rowwise().sum();
        const Vector col_res = Vector::Ones(p) - primal.colwise().sum().transpose();
        res.gap = std::abs(dv.u.dot(row_res) + dv.v.dot(col_res) + dv.bigu.cwiseProduct(primal).sum());
        res.iterations = k;
        if (res.gap < eps && primal.minCoeff() >= -kProjEntryTol && max_sum_residual(primal) <= kProjSumTol) {
            res.converged = true;
            break;
        }
    }
    res.p = DoublyStochastic::unchecked(std::move(primal));
    return res;
}

double relaxed_objective(const Matrix& pm, const Matrix& l, const Matrix& s, const RelaxationConfig& cfg) {
    return RelaxedQuadratic(l, s, cfg).value(pm, nullptr);
}

Matrix relaxed_gradient(const Matrix& pm, const Matrix& l, const Matrix& s, const RelaxationConfig& cfg) {
    Matrix grad;
    RelaxedQuadratic(l, s, cfg).value(pm, &grad);
    return grad;
}

double permutation_cost(const Permutation& perm, const Matrix& l, const Matrix& s) {
    const Matrix sp = perm.conjugate(s);
    const Matrix ls = l * sp;
    return 0.5 * ls.cwiseProduct(l).sum();
}

ConvexityThresholds convexity_thresholds(const Matrix& l, const Matrix& s) {
    if (l.rows() != s.rows() || s.rows() != s.cols()) throw InvalidArgument("dimension mismatch in convexity_thresholds");
    Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Matrix> eg(l.transpose() * l, Eigen::EigenvaluesOnly);
    const Vector& sv = es.eigenvalues();
    const Vector& gv = eg.eigenvalues();
    const Index last = sv.size() - 1;
    ConvexityThresholds t;
    t.plain_convex = sv(0) * gv(0);
    t.centered_convex = sv(std::min<Index>(1, last)) * gv(0);
    t.concave = sv(last) * gv(last);
    return t;
}

double default_step(const Matrix& l, const Matrix& s, double mu) {
    return 1.0 / (convexity_thresholds(l, s).concave + mu);
}

GradientProjectionResult gradient_projection(const Matrix& l, const Matrix& s, const RelaxationConfig& cfg,
                                             const DoublyStochastic& p_init) {
    cfg.validate();
    const Index p = s.rows();
    if (l.rows() != p || l.cols() != p || p_init.dim() != p) throw InvalidArgument("dimension mismatch in gradient_projection");

    const RelaxedQuadratic q(l, s, cfg);
    const double eta = cfg.eta ? *cfg.eta : default_step(l, s, cfg.mu);

    GradientProjectionResult res;
    Matrix cur = p_init.matrix();
    Matrix grad;
    double f = q.value(cur, &grad);
    if (!std::isfinite(f)) throw InvalidArgument("relaxed objective is not finite at the initial point");
    res.objective_trace.push_back(f);

    for (int k = 0; k < cfg.k_max; ++k) {
        const ProjectionResult proj = project_to_birkhoff(cur - eta * grad, cfg.projection_eps, cfg.projection_k_max);
        res.max_projection_gap = std::max(res.max_projection_gap, proj.gap);
        if (!proj.converged) ++res.unconverged_projections;

        const Matrix dir = proj.p.matrix() - cur;
        const double slope = grad.cwiseProduct(dir).sum();
        res.iterations = k + 1;
        if (dir.norm() <= cfg.eps || !(slope < 0.0)) {
            res.converged = true;
            break;
        }

        double alpha = 1.0;
        Matrix next;
        Matrix next_grad;
        double f_next = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < kMaxBacktracks; ++bt) {
            next = cur + alpha * dir;
            f_next = q.value(next, &next_grad);
            if (!std::isfinite(f_next)) throw InvalidArgument("relaxed objective became non-finite");
            if (f_next <= f + kArmijoC * alpha * slope) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            res.converged = true;
            break;
        }
        const double step = alpha * dir.norm();
        cur = std::move(next);
        grad = std::move(next_grad);
        f = f_next;
        res.objective_trace.push_back(f);
        if (step <= cfg.eps) {
            res.converged = true;
            break;
        }
    }
    res.p = DoublyStochastic::unchecked(std::move(cur));
    return res;
}

std::vector<int> rank_vector(std::span<const double> x) {
    std::vector<int> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x[static_cast<std::size_t>(a)] < x[static_cast<std::size_t>(b)]; });
    std::vector<int> ranks(x.size());
    for (std::size_t k = 0; k < order.size(); ++k) ranks[static_cast<std::size_t>(order[k])] = static_cast<int>(k) + 1;
    return ranks;
}

Permutation match_ranks(const Matrix& ds, const Vector& x) {
    const Vector y = ds * x;
    const std::vector<int> rx = rank_vector(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    const std::vector<int> ry = rank_vector(std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
    std::vector<int> holder(rx.size());  // holder[k-1] = index of the k-th smallest x
    for (std::size_t j = 0; j < rx.size(); ++j) holder[static_cast<std::size_t>(rx[j] - 1)] = static_cast<int>(j);
    std::vector<int> map(ry.size());
    for (std::size_t i = 0; i < ry.size(); ++i) map[i] = holder[static_cast<std::size_t>(ry[i] - 1)];
    return Permutation(std::move(map));
}

std::vector<Permutation> sample_permutations(const Matrix& ds, int n_samples, Rng& rng, int threads) {
    if (n_samples < 1) throw InvalidArgument("sample_permutations needs n_samples >= 1");
    if (ds.rows() != ds.cols()) throw InvalidArgument("sample_permutations needs a square matrix");
    const std::uint64_t base = rng();
    std::vector<Permutation> out(static_cast<std::size_t>(n_samples));
    parallel_for(out.size(), threads, [&](std::size_t j) {
        Rng local(derive_seed(base, j));
        std::normal_distribution<double> normal(0.0, 1.0);
        Vector x(ds.rows());
        for (Index i = 0; i < x.size(); ++i) x(i) = normal(local);
        out[j] = match_ranks(ds, x);
    });
    return out;
}

Permutation round_hungarian(const Matrix& ds) {
    if (ds.rows() != ds.cols() || ds.rows() == 0) throw InvalidArgument("round_hungarian needs a square matrix");
    const int n = static_cast<int>(ds.rows());
    const double inf = std::numeric_limits<double>::infinity();
    auto cost = [&](int i, int j) { return -ds(i - 1, j - 1); };  // 1-based

    // Shortest augmenting path with potentials; row_of[j] is the row matched
    // to column j, column 0 is a sentinel.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> row_of(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        row_of[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = row_of[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (row_of[j0] != 0);
        do {
            const int j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
        } while (j0);
    }

    // Lexicographic refinement over the equality subgraph of the optimal
    // duals: every perfect matching of tight edges is optimal.
    const double tol = 1e-10 * std::max(1.0, ds.cwiseAbs().maxCoeff());
    auto tight = [&](int i, int j) { return std::abs(cost(i, j) - u[i] - v[j]) <= tol; };
    std::vector<int> col_of(n + 1, 0);
    for (int j = 1; j <= n; ++j) col_of[row_of[j]] = j;
    std::vector<char> fixed_col(n + 1, 0);
    std::vector<char> visited(n + 1, 0);

    // DFS from `row` for an alternating path to column `target` avoiding
    // fixed columns and `banned`; rematches along the path on success.
    std::function<bool(int, int, int)> reroute = [&](int row, int target, int banned) -> bool {
        for (int c = 1; c <= n; ++c) {
            if (c == banned || fixed_col[c] || visited[c] || !tight(row, c)) continue;
            visited[c] = 1;
            if (c == target || reroute(row_of[c], target, banned)) {
                row_of[c] = row;
                col_of[row] = c;
                return true;
            }
        }
        return false;
    };

    for (int i = 1; i <= n; ++i) {
        const int current = col_of[i];
        for (int j = 1; j < current; ++j) {
            if (fixed_col[j] || !tight(i, j)) continue;
            std::fill(visited.begin(), visited.end(), 0);
            const int displaced = row_of[j];
            visited[j] = 1;
            if (reroute(displaced, current, j)) {
                row_of[j] = i;
                col_of[i] = j;
                break;
            }
        }
        fixed_col[col_of[i]] = 1;
    }

    std::vector<int> map(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) map[static_cast<std::size_t>(i - 1)] = col_of[i] - 1;
    return Permutation(std::move(map));
}

PermutationEstimate estimate_permutation(const Matrix& l, const Matrix& s, const RelaxationConfig& cfg, Rng& rng,
                                         const std::optional<DoublyStochastic>& p_init, int threads) {
    const int p = static_cast<int>(s.rows());
    PermutationEstimate est;
    est.relaxation = gradient_projection(l, s, cfg, p_init ? *p_init : DoublyStochastic::center(p));
    const Matrix& relaxed = est.relaxation.p.matrix();

    if (auto vertex = Permutation::from_matrix(relaxed, kSnapTol)) {
        est.perm = *vertex;
        est.snapped = true;
        est.candidates = 1;
        est.cost = permutation_cost(est.perm, l, s);
        return est;
    }

    std::vector<Permutation> candidates;
    candidates.reserve(static_cast<std::size_t>(cfg.n_samples) + 1);
    candidates.push_back(round_hungarian(relaxed));
    for (auto& perm : sample_permutations(relaxed, cfg.n_samples, rng, threads)) candidates.push_back(std::move(perm));

    std::vector<double> costs(candidates.size());
    parallel_for(candidates.size(), threads, [&](std::size_t c) { costs[c] = permutation_cost(candidates[c], l, s); });

    std::size_t best = 0;
    for (std::size_t c = 1; c < costs.size(); ++c)
        if (costs[c] < costs[best]) best = c;
    est.perm = candidates[best];
    est.cost = costs[best];
    est.candidates = static_cast<int>(candidates.size());
    return est;
}

}  // namespace rrcf::birkhoff
