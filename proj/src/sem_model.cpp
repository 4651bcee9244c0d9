#include "rrcf/sem_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rrcf::sem {

bool WeightedAdjacency::is_acyclic_under(const Permutation& order) const {
    if (order.size() != dim()) return false;
    const Matrix bp = order.conjugate(b);
    for (Index j = 0; j < bp.cols(); ++j)
        for (Index i = 0; i <= j; ++i)
            if (bp(i, j) != 0.0) return false;
    return true;
}

CholeskyFactor::CholeskyFactor(Matrix l) : l_(std::move(l)) {
    if (l_.rows() != l_.cols() || l_.rows() == 0) throw InvalidArgument("Cholesky factor must be a non-empty square matrix");
    for (Index j = 0; j < l_.cols(); ++j) {
        for (Index i = 0; i < j; ++i)
            if (l_(i, j) != 0.0) throw InvalidArgument("Cholesky factor has a nonzero entry above the diagonal");
        if (!(l_(j, j) > 0.0) || !std::isfinite(l_(j, j)))
            throw InvalidArgument("Cholesky factor diagonal must be strictly positive");
    }
}

CholeskyFactor CholeskyFactor::identity(int p) { return CholeskyFactor(Matrix::Identity(p, p)); }

CholeskyFactor CholeskyFactor::diagonal(const Vector& d) { return CholeskyFactor(Matrix(d.asDiagonal())); }

DataMatrix::DataMatrix(Matrix values) : x(std::move(values)) {
    if (x.rows() < 1 || x.cols() < 1) throw InvalidArgument("data matrix must have n >= 1 and p >= 1");
    if (!x.allFinite()) throw InvalidArgument("data matrix contains non-finite entries");
}

SampleCovariance::SampleCovariance(Matrix s) : s_(std::move(s)) {
    if (s_.rows() != s_.cols() || s_.rows() == 0) throw InvalidArgument("covariance must be a non-empty square matrix");
    if (!s_.allFinite()) throw InvalidArgument("covariance contains non-finite entries");
    const double scale = std::max(1.0, s_.cwiseAbs().maxCoeff());
    if ((s_ - s_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw InvalidArgument("covariance is not symmetric");
    for (Index i = 0; i < s_.rows(); ++i) {
        if (!(s_(i, i) > 0.0)) {
            std::ostringstream msg;
            msg << "degenerate input: variable " << i + 1 << " has zero variance";
            throw DegenerateInput(msg.str());
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s_, Eigen::EigenvaluesOnly);
    const Vector& ev = eig.eigenvalues();
    if (ev(0) < -1e-10 * std::max(ev(ev.size() - 1), 0.0)) throw InvalidArgument("covariance is not positive semi-definite");
}

SemInstance generate_dag(int p, int s, Rng& rng) {
    if (p < 2) throw InvalidArgument("generate_dag requires p >= 2");
    const long long slots = static_cast<long long>(p) * (p - 1) / 2;
    if (s < 0 || s > slots) throw InvalidArgument("expected edge count s must lie in [0, p(p-1)/2]");

    const double q = static_cast<double>(s) / static_cast<double>(slots);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> magnitude(0.1, 1.0);
    std::bernoulli_distribution coin(0.5);

    Matrix lower = Matrix::Zero(p, p);
    for (int i = 1; i < p; ++i) {
        for (int j = 0; j < i; ++j) {
            // q == 1 must fill every slot regardless of the uniform draw.
            if (unit(rng) < q) {
                const double w = magnitude(rng);
                lower(i, j) = coin(rng) ? w : -w;
            }
        }
    }

    std::vector<int> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    SemInstance inst;
    inst.ordering = Permutation(std::move(order));
    inst.adjacency.b = inst.ordering.unconjugate(lower);
    inst.noise.omega2 = Vector::Ones(p);
    inst.expected_edges = s;
    return inst;
}

WeightedAdjacency permuted_adjacency(const SemInstance& inst) {
    return WeightedAdjacency{inst.ordering.conjugate(inst.adjacency.b)};
}

NoiseVariances permuted_noise(const SemInstance& inst) {
    return NoiseVariances{inst.ordering.apply(inst.noise.omega2)};
}

CholeskyFactor adjacency_to_cholesky(const SemInstance& inst) {
    const Matrix bp = permuted_adjacency(inst).b;
    const Vector w2 = permuted_noise(inst).omega2;
    const Index p = bp.rows();
    Matrix l = Matrix::Identity(p, p) - bp;
    for (Index i = 0; i < p; ++i) {
        if (!(w2(i) > 0.0)) throw InvalidArgument("noise variances must be strictly positive");
        l.row(i) /= std::sqrt(w2(i));
    }
    // Exact zeros above the diagonal even if B_pi carried round-off there.
    l.triangularView<Eigen::StrictlyUpper>().setZero();
    return CholeskyFactor(std::move(l));
}

SemParameters cholesky_to_adjacency(const CholeskyFactor& l) {
    const Matrix& m = l.matrix();
    const Index p = m.rows();
    SemParameters out;
    out.adjacency.b = Matrix::Zero(p, p);
    out.noise.omega2 = Vector(p);
    for (Index i = 0; i < p; ++i) {
        const double d = m(i, i);
        out.noise.omega2(i) = 1.0 / (d * d);
        for (Index j = 0; j < i; ++j)
            if (m(i, j) != 0.0) out.adjacency.b(i, j) = -m(i, j) / d;
    }
    return out;
}

DataMatrix sample_data(const SemInstance& inst, int n, Rng& rng) {
    if (n < 1) throw InvalidArgument("sample_data requires n >= 1");
    const Matrix l = adjacency_to_cholesky(inst).matrix();
    const Index p = l.rows();
    std::normal_distribution<double> normal(0.0, 1.0);

    Matrix z(p, n);
    for (Index r = 0; r < n; ++r)
        for (Index i = 0; i < p; ++i) z(i, r) = normal(rng);
    const Matrix y = l.triangularView<Eigen::Lower>().solve(z);

    Matrix x(n, p);
    for (Index i = 0; i < p; ++i) x.col(inst.ordering.at(static_cast<int>(i))) = y.row(i).transpose();
    return DataMatrix(std::move(x));
}

SampleCovariance sample_covariance(const DataMatrix& x) {
    Matrix s = (x.x.transpose() * x.x) / static_cast<double>(x.n());
    s = 0.5 * (s + s.transpose());
    return SampleCovariance(std::move(s));
}

}  // namespace rrcf::sem
