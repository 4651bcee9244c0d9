#pragma once

// Gaussian linear structural equation models X = B X + e, e ~ N(0, Omega),
// and their Cholesky parameterisation L = Omega_pi^{-1/2} (I - B_pi) in a
// topological frame pi, where Sigma_pi^{-1} = L^t L.

#include "rrcf/core.hpp"

#include <cstdint>

namespace rrcf::sem {

/// b(j, k) is the coefficient of edge k -> j. Diagonal must be zero.
struct WeightedAdjacency {
    Matrix b;

    int dim() const { return static_cast<int>(b.rows()); }
    /// True when P_order B P_order^t is strictly lower triangular.
    bool is_acyclic_under(const Permutation& order) const;
};

struct NoiseVariances {
    Vector omega2;
};

/// Lower-triangular factor with strictly positive diagonal.
class CholeskyFactor {
public:
    CholeskyFactor() = default;
    /// Throws InvalidArgument if `l` is not square, has a nonzero entry above
    /// the diagonal, or a non-positive diagonal entry.
    explicit CholeskyFactor(Matrix l);

    static CholeskyFactor identity(int p);
    static CholeskyFactor diagonal(const Vector& d);

    const Matrix& matrix() const { return l_; }
    int dim() const { return static_cast<int>(l_.rows()); }
    double operator()(Index i, Index j) const { return l_(i, j); }

private:
    Matrix l_;
};

struct SemInstance {
    WeightedAdjacency adjacency;  // original (scrambled) variable labels
    NoiseVariances noise;         // original labels
    Permutation ordering;         // topological ordering: position i holds variable ordering.at(i)
    int expected_edges = 0;
    std::uint64_t seed = 0;
};

struct DataMatrix {
    Matrix x;

    DataMatrix() = default;
    /// Throws InvalidArgument on empty or non-finite input.
    explicit DataMatrix(Matrix values);
    int n() const { return static_cast<int>(x.rows()); }
    int p() const { return static_cast<int>(x.cols()); }
};

/// Symmetric PSD matrix with positive diagonal.
class SampleCovariance {
public:
    SampleCovariance() = default;
    /// Validates symmetry (1e-12), PSD (lambda_min >= -1e-10 lambda_max) and
    /// a positive diagonal. Zero diagonal raises DegenerateInput.
    explicit SampleCovariance(Matrix s);

    const Matrix& matrix() const { return s_; }
    int dim() const { return static_cast<int>(s_.rows()); }

private:
    Matrix s_;
};

/// Strictly lower-triangular B in generation order with each slot present
/// independently with probability 2s / (p (p - 1)); weights uniform on
/// [-1, -0.1] U [0.1, 1]; Omega = I; labels scrambled by a uniform ordering.
SemInstance generate_dag(int p, int s, Rng& rng);

/// B_pi and Omega_pi in the topological frame of `inst.ordering`.
WeightedAdjacency permuted_adjacency(const SemInstance& inst);
NoiseVariances permuted_noise(const SemInstance& inst);

CholeskyFactor adjacency_to_cholesky(const SemInstance& inst);

struct SemParameters {
    WeightedAdjacency adjacency;
    NoiseVariances noise;
};

/// Inverts the row scaling: omega2_i = 1 / L_ii^2, B_ij = -L_ij / L_ii.
/// Output is in the same (permuted) frame as `l`.
SemParameters cholesky_to_adjacency(const CholeskyFactor& l);

/// Draws n rows of N(0, Sigma) with Sigma^{-1} = L^t L in the permuted frame,
/// via L y = z, then returns columns in the original variable labels.
DataMatrix sample_data(const SemInstance& inst, int n, Rng& rng);

/// S = X^t X / n, symmetrised.
SampleCovariance sample_covariance(const DataMatrix& x);

}  // namespace rrcf::sem
