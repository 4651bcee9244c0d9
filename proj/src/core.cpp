#include "rrcf/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace rrcf {

Permutation::Permutation(std::vector<int> map) : map_(std::move(map)) {
    std::vector<char> seen(map_.size(), 0);
    for (int v : map_) {
        if (v < 0 || static_cast<std::size_t>(v) >= map_.size() || seen[static_cast<std::size_t>(v)]) {
            throw InvalidArgument("permutation is not a bijection on {0, ..., p-1}");
        }
        seen[static_cast<std::size_t>(v)] = 1;
    }
}

Permutation Permutation::identity(int p) {
    std::vector<int> map(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) map[static_cast<std::size_t>(i)] = i;
    return Permutation(std::move(map));
}

Permutation Permutation::from_one_based(const std::vector<int>& map) {
    std::vector<int> zero(map.size());
    std::transform(map.begin(), map.end(), zero.begin(), [](int v) { return v - 1; });
    return Permutation(std::move(zero));
}

std::optional<Permutation> Permutation::from_matrix(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return std::nullopt;
    const Index p = m.rows();
    std::vector<int> map(static_cast<std::size_t>(p), -1);
    std::vector<char> used(static_cast<std::size_t>(p), 0);
    for (Index i = 0; i < p; ++i) {
        for (Index j = 0; j < p; ++j) {
            const double v = m(i, j);
            if (std::abs(v - 1.0) < tol) {
                if (map[static_cast<std::size_t>(i)] != -1 || used[static_cast<std::size_t>(j)]) return std::nullopt;
                map[static_cast<std::size_t>(i)] = static_cast<int>(j);
                used[static_cast<std::size_t>(j)] = 1;
            } else if (!(std::abs(v) < tol)) {
                return std::nullopt;
            }
        }
        if (map[static_cast<std::size_t>(i)] == -1) return std::nullopt;
    }
    return Permutation(std::move(map));
}

std::vector<int> Permutation::one_based() const {
    std::vector<int> out(map_.size());
    std::transform(map_.begin(), map_.end(), out.begin(), [](int v) { return v + 1; });
    return out;
}

Permutation Permutation::inverse() const {
    std::vector<int> inv(map_.size());
    for (std::size_t i = 0; i < map_.size(); ++i) inv[static_cast<std::size_t>(map_[i])] = static_cast<int>(i);
    return Permutation(std::move(inv));
}

Matrix Permutation::matrix() const {
    const Index p = size();
    Matrix m = Matrix::Zero(p, p);
    for (Index i = 0; i < p; ++i) m(i, at(static_cast<int>(i))) = 1.0;
    return m;
}

Matrix Permutation::conjugate(const Matrix& s) const {
    const Index p = size();
    Matrix out(p, p);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < p; ++i) out(i, j) = s(at(static_cast<int>(i)), at(static_cast<int>(j)));
    return out;
}

Matrix Permutation::unconjugate(const Matrix& m) const {
    const Index p = size();
    Matrix out(p, p);
    for (Index j = 0; j < p; ++j)
        for (Index i = 0; i < p; ++i) out(at(static_cast<int>(i)), at(static_cast<int>(j))) = m(i, j);
    return out;
}

Vector Permutation::apply(const Vector& x) const {
    Vector out(size());
    for (int i = 0; i < size(); ++i) out(i) = x(at(i));
    return out;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::size_t error_index = count;
    std::exception_ptr error;
    auto work = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index) {
                    error_index = i;
                    error = std::current_exception();
                }
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace rrcf
