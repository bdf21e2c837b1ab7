#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sfwg {

using Point = Eigen::Vector2d;
using Vector2 = Eigen::Vector2d;
using Matrix2 = Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Invalid topology or geometry in a mesh (construction, file input, generators).
class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Breakdown in a numerical kernel: singular Gram matrix, failed factorization,
/// non-converged iteration.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline double cross(const Vector2& a, const Vector2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Number of worker threads for per-cell loops: `SFWG_THREADS` if set
/// (at most 64), otherwise the hardware concurrency.
inline unsigned thread_count()
{
    if (const char* env = std::getenv("SFWG_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<unsigned>(std::min(v, 64L));
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n). Each index is handled by exactly one thread,
/// so writes into per-index slots give identical results for any thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body)
{
    const std::size_t workers = std::min<std::size_t>(thread_count(), n / 16 + 1);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace sfwg
