#pragma once

// Shared domain types for geodepth: vectors, datasets, moments, seeded
// randomness and a small parallel-for helper.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <initializer_list>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace geodepth {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand dimensions disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An operation was called outside its domain (n too small, ‖u‖ ≥ 1, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A requested moment does not exist for the distribution.
class MomentError : public Error {
public:
    using Error::Error;
};

/// An iterative method stopped at its iteration cap.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

inline void require_dim(Eigen::Index expected, Eigen::Index got, const char* what) {
    if (expected != got) {
        throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(expected) +
                             ", got " + std::to_string(got));
    }
}

inline bool all_finite(const Vector& v) {
    return v.allFinite();
}

inline void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) throw PreconditionError(std::string(what) + ": non-finite coordinate");
}

// ---------------------------------------------------------------------------
// UnitDirection
// ---------------------------------------------------------------------------

/// A vector on the unit sphere S^{d-1}.
class UnitDirection {
public:
    static constexpr double kNormTolerance = 1e-12;

    /// Checked construction; `v` must already have unit norm.
    explicit UnitDirection(Vector v) : coords_(std::move(v)) {
        require_finite(coords_, "UnitDirection");
        if (coords_.size() < 1 || std::abs(coords_.norm() - 1.0) > kNormTolerance) {
            throw PreconditionError("UnitDirection: vector does not have unit norm");
        }
    }

    /// Rescale a non-zero vector onto the sphere.
    static UnitDirection normalize(const Vector& v) {
        require_finite(v, "UnitDirection::normalize");
        const double len = v.norm();
        if (v.size() < 1 || !(len > 0.0)) throw PreconditionError("UnitDirection: cannot normalize a zero vector");
        Vector w = v / len;
        // one extra pass absorbs the rounding of the first division
        w /= w.norm();
        return UnitDirection(std::move(w));
    }

    static UnitDirection basis(Eigen::Index dim, Eigen::Index axis) {
        Vector e = Vector::Zero(dim);
        e(axis) = 1.0;
        return UnitDirection(std::move(e));
    }

    const Vector& coords() const noexcept { return coords_; }
    Eigen::Index dim() const noexcept { return coords_.size(); }
    double operator()(Eigen::Index i) const { return coords_(i); }
    UnitDirection operator-() const { return UnitDirection(Vector(-coords_)); }

private:
    Vector coords_;
};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// Immutable sample of n points in R^d, stored column-wise (d × n).
class Dataset {
public:
    Dataset() = default;

    explicit Dataset(Matrix points) : points_(std::move(points)) {
        if (points_.rows() < 1) throw DimensionError("Dataset: dimension must be at least 1");
        if (!points_.allFinite()) throw PreconditionError("Dataset: non-finite coordinate");
    }

    static Dataset from_rows(const std::vector<std::vector<double>>& rows, Eigen::Index dim = -1) {
        if (rows.empty()) {
            if (dim < 1) throw DimensionError("Dataset: empty row list needs an explicit dimension");
            return Dataset(Matrix(dim, 0));
        }
        const auto d = static_cast<Eigen::Index>(rows.front().size());
        if (dim >= 1) require_dim(dim, d, "Dataset::from_rows");
        Matrix m(d, static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            require_dim(d, static_cast<Eigen::Index>(rows[i].size()), "Dataset::from_rows");
            for (Eigen::Index j = 0; j < d; ++j) m(j, static_cast<Eigen::Index>(i)) = rows[i][static_cast<std::size_t>(j)];
        }
        return Dataset(std::move(m));
    }

    Eigen::Index size() const noexcept { return points_.cols(); }
    Eigen::Index dim() const noexcept { return points_.rows(); }
    bool empty() const noexcept { return points_.cols() == 0; }

    auto point(Eigen::Index i) const { return points_.col(i); }
    const Matrix& matrix() const noexcept { return points_; }

    /// First `count` points, as used by nested growing-sample experiments.
    Dataset prefix(Eigen::Index count) const {
        if (count < 0 || count > size()) throw PreconditionError("Dataset::prefix: count out of range");
        return Dataset(Matrix(points_.leftCols(count)));
    }

    Dataset translated(const Vector& c) const {
        require_dim(dim(), c.size(), "Dataset::translated");
        return Dataset(Matrix(points_.colwise() + c));
    }

    Dataset scaled(double c) const { return Dataset(Matrix(points_ * c)); }

    Dataset transformed(const Matrix& a) const {
        require_dim(dim(), a.cols(), "Dataset::transformed");
        return Dataset(Matrix(a * points_));
    }

    /// Diagonal of the axis-aligned bounding box; within a factor √d of the
    /// true diameter and computable in one pass.
    double extent() const {
        if (empty()) return 0.0;
        const Vector lo = points_.rowwise().minCoeff();
        const Vector hi = points_.rowwise().maxCoeff();
        return (hi - lo).norm();
    }

    /// Tolerance under which a location is treated as coinciding with a data point.
    double coincidence_tolerance() const { return 1e-9 * extent(); }

    Vector coordinatewise_median() const {
        if (empty()) throw PreconditionError("Dataset: median of an empty sample");
        Vector med(dim());
        std::vector<double> col(static_cast<std::size_t>(size()));
        for (Eigen::Index j = 0; j < dim(); ++j) {
            for (Eigen::Index i = 0; i < size(); ++i) col[static_cast<std::size_t>(i)] = points_(j, i);
            const auto mid = col.size() / 2;
            std::nth_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(mid), col.end());
            double m = col[mid];
            if (col.size() % 2 == 0) {
                const double lower = *std::max_element(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(mid));
                m = 0.5 * (m + lower);
            }
            med(j) = m;
        }
        return med;
    }

private:
    Matrix points_;
};

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

struct Moments {
    Vector mean;
    Matrix covariance;
    double trace = 0.0;
    bool third_moment_available = false;

    /// ½(trΣ − uᵀΣu): the limit of ‖q(αu)‖²(1−α) as α → 1.
    double orthogonal_half_trace(const UnitDirection& u) const {
        require_dim(covariance.rows(), u.dim(), "Moments::orthogonal_half_trace");
        return 0.5 * (trace - u.coords().dot(covariance * u.coords()));
    }
};

/// Mean and covariance with divisor n.
inline Moments sample_moments(const Dataset& data) {
    if (data.size() < 2) throw PreconditionError("sample_moments: need at least 2 points");
    const auto n = static_cast<double>(data.size());
    Moments m;
    m.mean = data.matrix().rowwise().sum() / n;
    const Matrix centered = data.matrix().colwise() - m.mean;
    m.covariance = (centered * centered.transpose()) / n;
    m.covariance = 0.5 * (m.covariance + m.covariance.transpose());
    m.trace = m.covariance.trace();
    m.third_moment_available = true;
    return m;
}

/// ⟨h, X_i⟩ for each point, in sample order.
inline std::vector<double> project(const Dataset& data, const UnitDirection& h) {
    require_dim(data.dim(), h.dim(), "project");
    std::vector<double> out(static_cast<std::size_t>(data.size()));
    for (Eigen::Index i = 0; i < data.size(); ++i) out[static_cast<std::size_t>(i)] = h.coords().dot(data.point(i));
    return out;
}

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

/// Reproducibility key: identical (seed, stream_id) gives identical draws.
struct RngSpec {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-sensitive hash used to derive per-job stream ids.
inline std::uint64_t hash_combine(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

/// PCG-XSL-RR 128/64 with selectable stream (O'Neill's pcg64).
class Pcg64 {
public:
    using result_type = std::uint64_t;

    explicit Pcg64(const RngSpec& spec) : Pcg64(spec.seed, spec.stream_id) {}

    Pcg64(std::uint64_t seed, std::uint64_t stream) {
        inc_ = ((static_cast<u128>(splitmix64(stream ^ 0xda3e39cb94b95bdbULL)) << 64) | stream) << 1 | 1u;
        state_ = 0;
        step();
        state_ += (static_cast<u128>(splitmix64(seed)) << 64) | seed;
        step();
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        step();
        const auto rot = static_cast<unsigned>(state_ >> 122);
        const auto xored = static_cast<std::uint64_t>(state_ >> 64) ^ static_cast<std::uint64_t>(state_);
        return (xored >> rot) | (xored << ((64u - rot) & 63u));
    }

    /// Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform_open() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal by Box–Muller; always consumes exactly two uniforms.
    double normal() noexcept {
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    /// Uniform direction on S^{d-1} via a normalized Gaussian vector.
    Vector unit_vector(Eigen::Index dim) noexcept {
        Vector v(dim);
        for (;;) {
            for (Eigen::Index j = 0; j < dim; ++j) v(j) = normal();
            const double len = v.norm();
            if (len > 1e-300) return v / len;
        }
    }

private:
    using u128 = unsigned __int128;
    static constexpr u128 kMultiplier =
        (static_cast<u128>(2549297995355413924ULL) << 64) | 4865540595714422341ULL;

    void step() noexcept { state_ = state_ * kMultiplier + inc_; }

    u128 state_{};
    u128 inc_{};
};

// ---------------------------------------------------------------------------
// Parallelism
// ---------------------------------------------------------------------------

/// Worker count: GEODEPTH_THREADS when set and positive, otherwise all cores.
inline unsigned worker_count() {
    if (const char* env = std::getenv("GEODEPTH_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

/// Runs fn(i) for i in [0, count). Jobs must be independent; the first
/// exception thrown by any job is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace geodepth
