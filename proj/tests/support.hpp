#pragma once

// Random instance builders and independent reference implementations used
// by the unit and acceptance tests. The oracles deliberately avoid the
// library's own formulas: loops instead of matrix expressions, enumeration
// instead of assignment solvers, alternating projections instead of dual
// ascent, derivative-free search instead of coordinate descent.

#include "rrcf/birkhoff.hpp"
#include "rrcf/cholesky_solver.hpp"
#include "rrcf/score.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace rrcf::testing {

inline Matrix random_normal(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
    return m;
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Sample covariance of n draws from a random correlated Gaussian.
inline Matrix random_covariance(int p, int n, Rng& rng) {
    const Matrix mix = random_normal(p, p, rng) * 0.5 + Matrix::Identity(p, p);
    const Matrix x = random_normal(n, p, rng) * mix;
    Matrix s = x.transpose() * x / static_cast<double>(n);
    return 0.5 * (s + s.transpose());
}

/// Leading k x k block of P S P^t, with S the sample covariance of n draws
/// from a random SEM on p >= k variables (expected edges p) and P random.
/// These are the matrices estimate_cholesky hands to each row solve.
inline Matrix sem_row_block(int k, int p, int n, Rng& rng) {
    const sem::SemInstance inst = sem::generate_dag(p, p, rng);
    const sem::SampleCovariance s = sem::sample_covariance(sem::sample_data(inst, n, rng));
    std::vector<int> v(static_cast<std::size_t>(p));
    std::iota(v.begin(), v.end(), 0);
    std::shuffle(v.begin(), v.end(), rng);
    return Permutation(v).conjugate(s.matrix()).topLeftCorner(k, k);
}

/// Lower triangular with diagonal in [0.5, 2] and N(0, 0.25) below.
inline Matrix random_lower(int p, Rng& rng) {
    Matrix l = Matrix::Zero(p, p);
    for (int i = 0; i < p; ++i) {
        l(i, i) = uniform(rng, 0.5, 2.0);
        for (int j = 0; j < i; ++j) l(i, j) = 0.5 * std::normal_distribution<double>(0.0, 1.0)(rng);
    }
    return l;
}

inline Permutation random_permutation(int p, Rng& rng) {
    std::vector<int> v(static_cast<std::size_t>(p));
    std::iota(v.begin(), v.end(), 0);
    std::shuffle(v.begin(), v.end(), rng);
    return Permutation(v);
}

/// Convex combination of `terms` random permutation matrices with
/// Dirichlet(1) weights.
inline Matrix random_doubly_stochastic(int p, int terms, Rng& rng) {
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> w(static_cast<std::size_t>(terms));
    double total = 0.0;
    for (auto& x : w) total += (x = ex(rng));
    Matrix m = Matrix::Zero(p, p);
    for (int t = 0; t < terms; ++t) m += (w[static_cast<std::size_t>(t)] / total) * random_permutation(p, rng).matrix();
    return m;
}

inline std::vector<Permutation> all_permutations(int p) {
    std::vector<int> v(static_cast<std::size_t>(p));
    std::iota(v.begin(), v.end(), 0);
    std::vector<Permutation> out;
    do out.emplace_back(v);
    while (std::next_permutation(v.begin(), v.end()));
    return out;
}

/// 1/2 sum_{i,j,k} L_ij S^P_jk L_ik - sum log L_ii, by explicit loops.
inline double nll_loops(const Matrix& l, const Matrix& s, const Permutation& perm) {
    const int p = static_cast<int>(l.rows());
    double tr = 0.0;
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            for (int k = 0; k < p; ++k) tr += l(i, j) * s(perm.at(j), perm.at(k)) * l(i, k);
    double logdet = 0.0;
    for (int i = 0; i < p; ++i) logdet += std::log(l(i, i));
    return 0.5 * tr - logdet;
}

/// MCP by numerical integration of its derivative (lambda - t/gamma)_+.
inline double mcp_integral(double theta, double lambda, double gamma) {
    const double a = std::abs(theta);
    const int steps = 20000;
    const double h = a / steps;
    auto d = [&](double t) { return std::max(lambda - t / gamma, 0.0); };
    double acc = 0.0;
    for (int k = 0; k < steps; ++k) {
        const double t0 = k * h;
        acc += (d(t0) + 4.0 * d(t0 + 0.5 * h) + d(t0 + h)) * h / 6.0;
    }
    return acc;
}

/// Central finite-difference gradient.
inline Matrix finite_difference(const std::function<double(const Matrix&)>& f, const Matrix& x, double h,
                                bool lower_only = false) {
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    for (Index i = 0; i < x.rows(); ++i)
        for (Index j = 0; j < x.cols(); ++j) {
            if (lower_only && j > i) continue;
            Matrix xp = x, xm = x;
            xp(i, j) += h;
            xm(i, j) -= h;
            g(i, j) = (f(xp) - f(xm)) / (2.0 * h);
        }
    return g;
}

/// max |a - b| / max(1, max |b|).
inline double relative_error(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

/// Lexicographically first permutation maximising sum_i m(i, at(i)).
inline Permutation brute_force_assignment(const Matrix& m) {
    const int p = static_cast<int>(m.rows());
    double best = -std::numeric_limits<double>::infinity();
    Permutation arg = Permutation::identity(p);
    for (const auto& perm : all_permutations(p)) {
        double v = 0.0;
        for (int i = 0; i < p; ++i) v += m(i, perm.at(i));
        if (v > best + 1e-12) {
            best = v;
            arg = perm;
        }
    }
    return arg;
}

/// Euclidean projection onto the doubly stochastic matrices by Dykstra's
/// alternating projections between the affine set {A 1 = 1, A^t 1 = 1} and
/// the nonnegative orthant.
inline Matrix dykstra_projection(const Matrix& p0, int iterations = 200000, double tol = 1e-13) {
    const Index p = p0.rows();
    const double pd = static_cast<double>(p);
    auto affine = [&](const Matrix& y) {
        // Closed-form projection onto {A 1 = 1, A^t 1 = 1}.
        const Vector r = y.rowwise().sum();
        const Vector c = y.colwise().sum().transpose();
        const double total = y.sum();
        Matrix out = y;
        for (Index i = 0; i < p; ++i)
            for (Index j = 0; j < p; ++j)
                out(i, j) += (1.0 - r(i)) / pd + (1.0 - c(j)) / pd - (pd - total) / (pd * pd);
        return out;
    };
    Matrix x = p0, q = Matrix::Zero(p, p);
    for (int it = 0; it < iterations; ++it) {
        const Matrix y = affine(x);
        const Matrix next = (y + q).cwiseMax(0.0);
        q = y + q - next;
        const double move = (next - x).cwiseAbs().maxCoeff();
        x = next;
        if (move < tol) break;
    }
    return x;
}

/// Derivative-free minimum of the row objective for k <= 4: a coarse grid
/// over a box followed by compass-plus-diagonal pattern search from the best
/// grid points.
inline double row_minimum_oracle(const solver::RowSubproblem& sub, double box = 3.0, int grid = 17) {
    const int k = sub.k();
    auto h = [&](const Vector& x) { return solver::row_objective(sub, x); };
    const double dmax = 3.0 / std::sqrt(sub.a(k - 1, k - 1)) + 1.0;

    struct Seed {
        double value;
        Vector x;
    };
    std::vector<Seed> seeds;
    std::vector<int> idx(static_cast<std::size_t>(k), 0);
    Vector x(k);
    while (true) {
        for (int j = 0; j < k - 1; ++j) x(j) = -box + 2.0 * box * idx[static_cast<std::size_t>(j)] / (grid - 1);
        x(k - 1) = dmax * (idx[static_cast<std::size_t>(k - 1)] + 1) / grid;
        seeds.push_back({h(x), x});
        int d = 0;
        while (d < k && ++idx[static_cast<std::size_t>(d)] == grid) idx[static_cast<std::size_t>(d++)] = 0;
        if (d == k) break;
    }
    std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) { return a.value < b.value; });

    std::vector<Vector> dirs;
    for (int i = 0; i < k; ++i) {
        dirs.push_back(Vector::Unit(k, i));
        dirs.push_back(-Vector::Unit(k, i));
        for (int j = i + 1; j < k; ++j)
            for (double si : {1.0, -1.0})
                for (double sj : {1.0, -1.0}) {
                    Vector d = Vector::Zero(k);
                    d(i) = si;
                    d(j) = sj;
                    dirs.push_back(d);
                }
    }
    double best = std::numeric_limits<double>::infinity();
    const std::size_t starts = std::min<std::size_t>(8, seeds.size());
    for (std::size_t s = 0; s < starts; ++s) {
        Vector cur = seeds[s].x;
        double val = seeds[s].value;
        for (double step = 2.0 * box / (grid - 1); step > 1e-11;) {
            bool moved = false;
            for (const auto& d : dirs) {
                const Vector trial = cur + step * d;
                const double tv = h(trial);
                if (tv < val) {
                    cur = trial;
                    val = tv;
                    moved = true;
                }
            }
            if (!moved) step *= 0.5;
        }
        best = std::min(best, val);
    }
    return best;
}

}  // namespace rrcf::testing
