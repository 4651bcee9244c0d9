#pragma once

// Shared vocabulary: matrix aliases, error types, permutations, seeded
// random streams and a small deterministic parallel_for.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rrcf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Precondition or configuration violation on caller-supplied values.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Data that cannot be fitted as-is (zero-variance column, non-finite entry).
class DegenerateInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A mathematical guard of the solver refused the configuration, e.g. the
/// MCP concavity parameter is too small for the coordinate updates to be
/// strictly convex.
class GuardViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be read, parsed or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Ordering of p variables. Position i of the permuted frame holds original
/// variable at(i); the induced matrix P has P(i, at(i)) = 1 so that
/// (P x)_i = x_{at(i)} and (P S P^t)_{ij} = S_{at(i), at(j)}.
class Permutation {
public:
    Permutation() = default;
    /// Throws InvalidArgument unless `map` is a bijection on {0, ..., p-1}.
    explicit Permutation(std::vector<int> map);

    static Permutation identity(int p);
    /// Accepts a 1..p encoded permutation as written in CSV files.
    static Permutation from_one_based(const std::vector<int>& map);
    /// Returns the permutation when `m` is within `tol` entrywise of a 0/1
    /// permutation pattern.
    static std::optional<Permutation> from_matrix(const Matrix& m, double tol);

    int size() const { return static_cast<int>(map_.size()); }
    int at(int i) const { return map_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& values() const { return map_; }
    std::vector<int> one_based() const;

    Permutation inverse() const;
    Matrix matrix() const;

    /// P S P^t.
    Matrix conjugate(const Matrix& s) const;
    /// P^t M P, the inverse of conjugate().
    Matrix unconjugate(const Matrix& m) const;
    /// P x.
    Vector apply(const Vector& x) const;

    friend bool operator==(const Permutation&, const Permutation&) = default;

private:
    std::vector<int> map_;
};

using Rng = std::mt19937_64;

/// Splitmix64-style mixing so per-task streams are independent of the
/// order in which tasks are scheduled.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Runs fn(0..count-1) on at most `threads` workers. Exceptions are collected
/// and the one from the lowest index is rethrown after all workers join.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

/// Normalises a user thread count (<= 0 means hardware concurrency).
int resolve_threads(int requested);

}  // namespace rrcf
