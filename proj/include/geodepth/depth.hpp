#pragma once

// Halfspace (Tukey) depth: an exact O(n log n) angular sweep in the plane,
// a random-direction approximation for any dimension, and population depth
// for diagonal Gaussians (closed form) and planar product measures
// (quadrature over projected laws).

#include "geodepth/core.hpp"
#include "geodepth/samplers.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace geodepth {

struct DepthValue {
    enum class Kind { empirical, population };

    double value = 0.0;
    Kind kind = Kind::empirical;
    Eigen::Index k = 0;  // empirical: value == k / n exactly
    Eigen::Index n = 0;
    std::size_t directions_used = 0;
    double stderr_estimate = 0.0;  // population numeric path only

    static DepthValue empirical(Eigen::Index k, Eigen::Index n, std::size_t directions = 0) {
        DepthValue v;
        v.kind = Kind::empirical;
        v.k = k;
        v.n = n;
        v.value = n > 0 ? static_cast<double>(k) / static_cast<double>(n) : 0.0;
        v.directions_used = directions;
        return v;
    }

    static DepthValue population(double value, double stderr_estimate = 0.0, std::size_t directions = 0) {
        DepthValue v;
        v.kind = Kind::population;
        v.value = value;
        v.stderr_estimate = stderr_estimate;
        v.directions_used = directions;
        return v;
    }

    std::string fraction() const { return std::to_string(k) + "/" + std::to_string(n); }

    std::string reduced_fraction() const {
        if (n == 0) return "0/0";
        const auto g = std::gcd(k, n);
        return std::to_string(k / (g == 0 ? 1 : g)) + "/" + std::to_string(n / (g == 0 ? 1 : g));
    }
};

// ---------------------------------------------------------------------------
// Exact planar depth
// ---------------------------------------------------------------------------

namespace detail {

/// a·d − b·c with Kahan's fma correction; the sign is reliable far beyond a
/// plain product difference.
inline double diff_of_products(double a, double b, double c, double d) noexcept {
    const double w = b * c;
    const double e = std::fma(-b, c, w);
    const double f = std::fma(a, d, -w);
    return f + e;
}

struct PlanarDir {
    double key;  // pseudo-angle, only used to presort
    double x, y;
    Eigen::Index count;
};

/// Monotone in the polar angle on [0, 2π) up to rounding; range [0, 4).
inline double diamond_angle(double x, double y) noexcept {
    if (y >= 0.0) return x >= 0.0 ? y / (x + y) : 1.0 - x / (y - x);
    return x < 0.0 ? 2.0 - y / (-x - y) : 3.0 + x / (x - y);
}

inline double cross(const PlanarDir& a, const PlanarDir& b) noexcept {
    return diff_of_products(a.x, a.y, b.x, b.y);
}

inline int half_plane(const PlanarDir& a) noexcept {
    return (a.y < 0.0 || (a.y == 0.0 && a.x < 0.0)) ? 1 : 0;
}

inline bool angle_less(const PlanarDir& a, const PlanarDir& b) noexcept {
    const int ha = half_plane(a), hb = half_plane(b);
    if (ha != hb) return ha < hb;
    return cross(a, b) > 0.0;
}

}  // namespace detail

/// Exact depth of x among planar data: the minimum number of sample points in
/// a closed halfplane whose boundary passes through x, divided by n. Points
/// coinciding with x lie in every such halfplane.
inline DepthValue depth_exact_2d(const Dataset& data, const Vector& x) {
    if (data.dim() != 2) throw DimensionError("depth_exact_2d: data must be two-dimensional");
    require_dim(2, x.size(), "depth_exact_2d");
    require_finite(x, "depth_exact_2d");
    const Eigen::Index n = data.size();
    const double coincide = data.coincidence_tolerance();
    const double coincide2 = coincide * coincide;

    std::vector<detail::PlanarDir> dirs;
    dirs.reserve(static_cast<std::size_t>(n));
    Eigen::Index coincident = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double vx = data.matrix()(0, i) - x(0);
        const double vy = data.matrix()(1, i) - x(1);
        if (vx * vx + vy * vy <= coincide2) {
            ++coincident;
            continue;
        }
        dirs.push_back({detail::diamond_angle(vx, vy), vx, vy, 1});
    }
    if (dirs.empty()) return DepthValue::empirical(coincident, n);

    // presort on the rounded key, then repair the few near-tie inversions
    // with the exact predicate
    std::sort(dirs.begin(), dirs.end(), [](const detail::PlanarDir& a, const detail::PlanarDir& b) { return a.key < b.key; });
    for (std::size_t i = 1; i < dirs.size(); ++i) {
        if (!detail::angle_less(dirs[i], dirs[i - 1])) continue;
        const detail::PlanarDir moving = dirs[i];
        std::size_t j = i;
        while (j > 0 && detail::angle_less(moving, dirs[j - 1])) {
            dirs[j] = dirs[j - 1];
            --j;
        }
        dirs[j] = moving;
    }

    // merge rays pointing in the same direction
    std::vector<detail::PlanarDir> groups;
    for (const auto& d : dirs) {
        if (!groups.empty() && detail::half_plane(groups.back()) == detail::half_plane(d) &&
            detail::cross(groups.back(), d) == 0.0) {
            groups.back().count += d.count;
        } else {
            groups.push_back(d);
        }
    }

    const auto g = groups.size();
    const auto m = static_cast<Eigen::Index>(dirs.size());
    // prefix sums over the doubled circular sequence
    std::vector<Eigen::Index> prefix(2 * g + 1, 0);
    for (std::size_t i = 0; i < 2 * g; ++i) prefix[i + 1] = prefix[i] + groups[i % g].count;

    // For each ray direction w, A = #points in the half-open arc (w, −w]; the
    // complementary arc (−w, w] holds m − A. Every critical closed halfplane
    // is one of these two.
    Eigen::Index best = m;
    std::size_t j = 1;
    for (std::size_t i = 0; i < g; ++i) {
        if (j < i + 1) j = i + 1;
        while (j < i + g && detail::cross(groups[i], groups[j % g]) > 0.0) ++j;
        Eigen::Index arc = prefix[j] - prefix[i + 1];
        if (j < i + g) {
            const auto& other = groups[j % g];
            const auto& self = groups[i];
            if (detail::cross(self, other) == 0.0 && self.x * other.x + self.y * other.y < 0.0) arc += other.count;
        }
        best = std::min({best, arc, m - arc});
    }
    return DepthValue::empirical(coincident + best, n);
}

// ---------------------------------------------------------------------------
// Random-direction approximation
// ---------------------------------------------------------------------------

/// min over the columns h of `directions` of #{i : ⟨h, X_i − x⟩ ≥ 0}/n.
inline DepthValue depth_over_directions(const Dataset& data, const Vector& x, const Matrix& directions) {
    require_dim(data.dim(), x.size(), "depth_over_directions");
    require_dim(data.dim(), directions.rows(), "depth_over_directions");
    const Eigen::Index n = data.size();
    const double coincide = data.coincidence_tolerance();
    const Matrix centered = data.matrix().colwise() - x;
    std::vector<char> coincident(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) coincident[static_cast<std::size_t>(i)] = centered.col(i).norm() <= coincide;

    Eigen::Index best = n;
    for (Eigen::Index k = 0; k < directions.cols(); ++k) {
        const Eigen::RowVectorXd proj = directions.col(k).transpose() * centered;
        Eigen::Index count = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (coincident[static_cast<std::size_t>(i)] || proj(i) >= 0.0) ++count;
        best = std::min(best, count);
    }
    return DepthValue::empirical(best, n, static_cast<std::size_t>(directions.cols()));
}

/// The first `count` directions drawn from `rng`. In d = 1 the sphere is
/// {+1, −1} and the sequence alternates deterministically.
inline Matrix random_directions(Eigen::Index dim, std::size_t count, const RngSpec& rng) {
    Matrix dirs(dim, static_cast<Eigen::Index>(count));
    if (dim == 1) {
        for (std::size_t k = 0; k < count; ++k) dirs(0, static_cast<Eigen::Index>(k)) = (k % 2 == 0) ? 1.0 : -1.0;
        return dirs;
    }
    Pcg64 gen(rng);
    for (std::size_t k = 0; k < count; ++k) dirs.col(static_cast<Eigen::Index>(k)) = gen.unit_vector(dim);
    return dirs;
}

/// Upper approximation of the depth from K random directions.
inline DepthValue depth_approx(const Dataset& data, const Vector& x, std::size_t directions, const RngSpec& rng) {
    if (directions < 1) throw PreconditionError("depth_approx: need at least one direction");
    return depth_over_directions(data, x, random_directions(data.dim(), directions, rng));
}

/// Default direction budget: 5000 in the plane, 10·d·√n otherwise.
inline std::size_t default_direction_count(Eigen::Index dim, Eigen::Index n) {
    if (dim == 2) return 5000;
    return static_cast<std::size_t>(std::ceil(10.0 * static_cast<double>(dim) * std::sqrt(static_cast<double>(std::max<Eigen::Index>(n, 1)))));
}

// ---------------------------------------------------------------------------
// Marginal laws
// ---------------------------------------------------------------------------

inline double normal_survival(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw PreconditionError("normal_quantile: p must lie in (0,1)");
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

/// One-dimensional law of a coordinate of a product measure.
struct Marginal {
    enum class Family { gaussian, pareto };

    Family family = Family::gaussian;
    double variance = 1.0;  // gaussian (centered)
    double delta = 1.0;     // pareto: survival ((y − offset)/scale)^{−δ} above offset + scale
    double scale = 1.0;
    double offset = 0.0;

    static Marginal gaussian(double variance) {
        Marginal m;
        m.family = Family::gaussian;
        m.variance = variance;
        return m;
    }

    static Marginal pareto(double delta, double scale = 1.0, double offset = 0.0) {
        Marginal m;
        m.family = Family::pareto;
        m.delta = delta;
        m.scale = scale;
        m.offset = offset;
        return m;
    }

    double survival(double y) const {
        switch (family) {
            case Family::gaussian:
                if (variance == 0.0) return y <= 0.0 ? 1.0 : 0.0;
                return normal_survival(y / std::sqrt(variance));
            case Family::pareto: {
                const double z = (y - offset) / scale;
                return z <= 1.0 ? 1.0 : std::pow(z, -delta);
            }
        }
        return 0.0;
    }

    double cdf(double y) const {
        switch (family) {
            case Family::gaussian:
                if (variance == 0.0) return y >= 0.0 ? 1.0 : 0.0;
                return normal_survival(-y / std::sqrt(variance));
            case Family::pareto: {
                const double z = (y - offset) / scale;
                return z <= 1.0 ? 0.0 : -std::expm1(-delta * std::log(z));
            }
        }
        return 0.0;
    }

    double quantile(double p) const {
        switch (family) {
            case Family::gaussian: return std::sqrt(variance) * normal_quantile(p);
            case Family::pareto: return scale * std::pow(1.0 - p, -1.0 / delta) + offset;
        }
        return 0.0;
    }

    /// Quantile parametrized by the upper-tail probability, accurate near 0.
    double upper_quantile(double tail) const {
        switch (family) {
            case Family::gaussian: return -std::sqrt(variance) * normal_quantile(tail);
            case Family::pareto: return scale * std::pow(tail, -1.0 / delta) + offset;
        }
        return 0.0;
    }
};

/// Coordinate marginals of a product-measure spec.
inline std::vector<Marginal> marginals_of(const DistributionSpec& spec) {
    spec.validate();
    std::vector<Marginal> out;
    switch (spec.kind) {
        case DistributionKind::gaussian_diag:
            for (double v : spec.variances) out.push_back(Marginal::gaussian(v));
            return out;
        case DistributionKind::pareto_indep:
            for (int j = 0; j < spec.dims; ++j) out.push_back(Marginal::pareto(spec.delta, spec.scale, spec.offset));
            return out;
        case DistributionKind::spherical_exponential:
            break;
    }
    throw PreconditionError("unsupported marginal family: spherical_exponential is not a product measure");
}

/// min_i (1 − F_i(t·x_i)), an upper bound for HD(t·x, P).
inline double marginal_survival_bound(const std::vector<Marginal>& marginals, const Vector& x, double t) {
    require_dim(static_cast<Eigen::Index>(marginals.size()), x.size(), "marginal_survival_bound");
    if (!(t > 0.0)) throw PreconditionError("marginal_survival_bound: t must be > 0");
    double best = 1.0;
    for (std::size_t i = 0; i < marginals.size(); ++i)
        best = std::min(best, marginals[i].survival(t * x(static_cast<Eigen::Index>(i))));
    return best;
}

/// Empirical counterpart: min_i #{j : X_{j,i} ≥ y_i}. Each set is a closed
/// halfspace containing y, so the result bounds the empirical depth count.
inline Eigen::Index empirical_marginal_survival_count(const Dataset& data, const Vector& y) {
    require_dim(data.dim(), y.size(), "empirical_marginal_survival_count");
    Eigen::Index best = data.size();
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
        Eigen::Index count = 0;
        for (Eigen::Index i = 0; i < data.size(); ++i)
            if (data.matrix()(j, i) >= y(j)) ++count;
        best = std::min(best, count);
    }
    return best;
}

// ---------------------------------------------------------------------------
// Population depth
// ---------------------------------------------------------------------------

/// Φ̄(√(xᵀΣ⁻¹x)) for a centered Gaussian with diagonal covariance.
inline DepthValue population_depth_gaussian(const std::vector<double>& variances, const Vector& x) {
    require_dim(static_cast<Eigen::Index>(variances.size()), x.size(), "population_depth_gaussian");
    double quad = 0.0;
    for (std::size_t j = 0; j < variances.size(); ++j) {
        if (!(variances[j] > 0.0)) throw PreconditionError("population_depth_gaussian: variances must be > 0");
        const double xj = x(static_cast<Eigen::Index>(j));
        quad += xj * xj / variances[j];
    }
    return DepthValue::population(normal_survival(std::sqrt(quad)));
}

enum class ProjectionMethod { quadrature, monte_carlo };

struct ProductDepthOptions {
    std::size_t grid = 256;
    ProjectionMethod method = ProjectionMethod::quadrature;
    std::size_t quadrature_nodes = std::size_t{1} << 14;
    std::size_t monte_carlo_draws = 1000000;
    RngSpec monte_carlo_stream{0x6765646570746800ULL, 7};
};

namespace detail {

/// P(⟨h, X⟩ ≥ level) for a planar product measure with marginals
/// (m0, m1), by conditioning on the coordinate with the smaller |h_j| and
/// integrating over its quantile scale with the midpoint rule.
class ProjectedSurvival {
public:
    ProjectedSurvival(const Marginal& m0, const Marginal& m1, std::size_t nodes) : m_{m0, m1} {
        for (int j = 0; j < 2; ++j) {
            auto& q = nodes_[j];
            q.resize(nodes);
            for (std::size_t k = 0; k < nodes; ++k) {
                const double p = (static_cast<double>(k) + 0.5) / static_cast<double>(nodes);
                q[k] = p < 0.5 ? m_[j].quantile(p) : m_[j].upper_quantile(1.0 - p);
            }
            auto& coarse = coarse_[j];
            coarse.resize(nodes / 2);
            for (std::size_t k = 0; k < nodes / 2; ++k) {
                const double p = (static_cast<double>(k) + 0.5) / static_cast<double>(nodes / 2);
                coarse[k] = p < 0.5 ? m_[j].quantile(p) : m_[j].upper_quantile(1.0 - p);
            }
        }
    }

    double operator()(double h0, double h1, double level, bool coarse = false) const {
        // condition on coordinate c, integrate the survival of the other one
        const int c = std::abs(h0) <= std::abs(h1) ? 0 : 1;
        const int o = 1 - c;
        const double hc = c == 0 ? h0 : h1;
        const double ho = c == 0 ? h1 : h0;
        const auto& q = coarse ? coarse_[c] : nodes_[c];
        double acc = 0.0;
        for (double xc : q) {
            const double y = (level - hc * xc) / ho;
            acc += ho > 0.0 ? m_[o].survival(y) : m_[o].cdf(y);
        }
        return acc / static_cast<double>(q.size());
    }

private:
    Marginal m_[2];
    std::vector<double> nodes_[2];
    std::vector<double> coarse_[2];
};

template <class Fn>
double golden_section_min(Fn&& fn, double lo, double hi, int iterations, double* arg_out) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = fn(c), fd = fn(d);
    for (int i = 0; i < iterations; ++i) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = fn(d);
        }
    }
    if (fc <= fd) {
        *arg_out = c;
        return fc;
    }
    *arg_out = d;
    return fd;
}

}  // namespace detail

/// HD(x, P) = min_h P(⟨h, X⟩ ≥ ⟨h, x⟩) for a planar product measure:
/// uniform angular grid, then golden-section refinement around the best
/// grid angle. The attached stderr is the quadrature error estimate
/// (difference against half the nodes) or the binomial Monte Carlo error.
inline DepthValue population_depth_product(const std::vector<Marginal>& marginals, const Vector& x,
                                           const ProductDepthOptions& opt = {}) {
    if (marginals.size() != 2) throw DimensionError("population_depth_product: only the planar case is supported");
    require_dim(2, x.size(), "population_depth_product");
    require_finite(x, "population_depth_product");
    if (opt.grid < 64) throw PreconditionError("population_depth_product: grid must be >= 64");
    const double two_pi = 2.0 * 3.14159265358979323846;
    const double step = two_pi / static_cast<double>(opt.grid);

    if (opt.method == ProjectionMethod::quadrature) {
        if (opt.quadrature_nodes < 64) throw PreconditionError("population_depth_product: too few quadrature nodes");
        const detail::ProjectedSurvival surv(marginals[0], marginals[1], opt.quadrature_nodes);
        auto value_at = [&](double phi) {
            const double h0 = std::cos(phi), h1 = std::sin(phi);
            return surv(h0, h1, h0 * x(0) + h1 * x(1));
        };
        double best = 2.0, best_phi = 0.0;
        for (std::size_t k = 0; k < opt.grid; ++k) {
            const double phi = step * static_cast<double>(k);
            const double v = value_at(phi);
            if (v < best) {
                best = v;
                best_phi = phi;
            }
        }
        double phi_star = best_phi;
        const double refined = detail::golden_section_min(value_at, best_phi - step, best_phi + step, 60, &phi_star);
        if (refined < best) best = refined;
        else phi_star = best_phi;
        const double h0 = std::cos(phi_star), h1 = std::sin(phi_star);
        const double coarse = surv(h0, h1, h0 * x(0) + h1 * x(1), true);
        return DepthValue::population(best, std::abs(best - coarse), opt.grid);
    }

    // Monte Carlo: one pinned sample shared by every direction
    Pcg64 gen(opt.monte_carlo_stream);
    const auto draws = opt.monte_carlo_draws;
    std::vector<double> xs(draws), ys(draws);
    for (std::size_t i = 0; i < draws; ++i) {
        xs[i] = marginals[0].quantile(gen.uniform_open());
        ys[i] = marginals[1].quantile(gen.uniform_open());
    }
    auto value_at = [&](double phi) {
        const double h0 = std::cos(phi), h1 = std::sin(phi);
        const double level = h0 * x(0) + h1 * x(1);
        std::size_t count = 0;
        for (std::size_t i = 0; i < draws; ++i)
            if (h0 * xs[i] + h1 * ys[i] >= level) ++count;
        return static_cast<double>(count) / static_cast<double>(draws);
    };
    double best = 2.0, best_phi = 0.0;
    for (std::size_t k = 0; k < opt.grid; ++k) {
        const double phi = step * static_cast<double>(k);
        const double v = value_at(phi);
        if (v < best) {
            best = v;
            best_phi = phi;
        }
    }
    double phi_star = best_phi;
    const double refined = detail::golden_section_min(value_at, best_phi - step, best_phi + step, 30, &phi_star);
    best = std::min(best, refined);
    const double se = std::sqrt(std::max(best * (1.0 - best), 1.0 / static_cast<double>(draws)) / static_cast<double>(draws));
    return DepthValue::population(best, se, opt.grid);
}

inline DepthValue population_depth_product(const DistributionSpec& spec, const Vector& x, const ProductDepthOptions& opt = {}) {
    return population_depth_product(marginals_of(spec), x, opt);
}

}  // namespace geodepth
