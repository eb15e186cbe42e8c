#pragma once

// Brute-force references for the planar quantile and depth computations.
// Nothing here calls into quantile.hpp or depth.hpp: distances, medians,
// angles and counts are recomputed from scratch.

#include "geodepth/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace geodepth::oracle {

struct OracleReport {
    Vector point;                 // brute_quantile: best lattice node
    double objective = 0.0;       // brute_quantile: objective at `point`
    Eigen::Index count = 0;       // brute_depth_2d: minimal closed-halfplane count
    Eigen::Index n = 0;
    double value = 0.0;           // count/n for depth
    std::size_t evaluations = 0;
    std::string grid_spec;
};

namespace detail {

inline double planar_distance(double ax, double ay, double bx, double by) {
    const double dx = ax - bx, dy = ay - by;
    return std::sqrt(dx * dx + dy * dy);
}

inline double lower_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Objective with long double accumulation over plain loops.
inline double objective(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<double>& norms,
                        double ux, double uy, double qx, double qy) {
    long double acc = 0.0L;
    for (std::size_t i = 0; i < xs.size(); ++i) acc += planar_distance(xs[i], ys[i], qx, qy) - norms[i];
    return static_cast<double>(acc / static_cast<long double>(xs.size())) - (ux * qx + uy * qy);
}

}  // namespace detail

/// Nested lattice search for the planar geometric quantile: a 101×101 grid
/// over a box of side 4·diameter around the coordinate-wise median, shrunk
/// tenfold around the best node `levels` times in total. A best node on the
/// box boundary doubles the box instead (at most 10 times).
inline OracleReport brute_quantile(const Dataset& data, const Vector& u_index, int levels = 6) {
    if (data.dim() != 2) throw DimensionError("brute_quantile: data must be two-dimensional");
    require_dim(2, u_index.size(), "brute_quantile");
    const double ux = u_index(0), uy = u_index(1);
    if (!(std::sqrt(ux * ux + uy * uy) < 1.0)) throw PreconditionError("index vector must satisfy ‖u‖<1");
    if (data.size() < 1) throw PreconditionError("brute_quantile: empty dataset");
    if (levels < 1) throw PreconditionError("brute_quantile: levels must be >= 1");

    const auto n = static_cast<std::size_t>(data.size());
    std::vector<double> xs(n), ys(n), norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = data.matrix()(0, static_cast<Eigen::Index>(i));
        ys[i] = data.matrix()(1, static_cast<Eigen::Index>(i));
        norms[i] = std::sqrt(xs[i] * xs[i] + ys[i] * ys[i]);
    }
    double diameter = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) diameter = std::max(diameter, detail::planar_distance(xs[i], ys[i], xs[j], ys[j]));
    if (!(diameter > 0.0)) diameter = 1.0;

    constexpr int kNodes = 101;
    double cx = detail::lower_median(xs), cy = detail::lower_median(ys);
    double side = 4.0 * diameter;
    int expansions = 0;
    OracleReport rep;
    rep.n = data.size();
    double best_f = 0.0, best_x = cx, best_y = cy;
    for (int level = 0; level < levels;) {
        best_f = std::numeric_limits<double>::infinity();
        int best_i = 0, best_j = 0;
        const double step = side / (kNodes - 1);
        for (int i = 0; i < kNodes; ++i) {
            const double qx = cx - 0.5 * side + step * i;
            for (int j = 0; j < kNodes; ++j) {
                const double qy = cy - 0.5 * side + step * j;
                const double f = detail::objective(xs, ys, norms, ux, uy, qx, qy);
                ++rep.evaluations;
                // strict comparison keeps the lexicographically smallest node on ties
                if (f < best_f) {
                    best_f = f;
                    best_i = i;
                    best_j = j;
                    best_x = qx;
                    best_y = qy;
                }
            }
        }
        const bool on_boundary = best_i == 0 || best_j == 0 || best_i == kNodes - 1 || best_j == kNodes - 1;
        if (on_boundary) {
            if (++expansions > 10) throw ConvergenceError("brute_quantile: minimizer escaped after 10 box expansions");
            cx = best_x;
            cy = best_y;
            side *= 2.0;
            continue;
        }
        cx = best_x;
        cy = best_y;
        if (++level < levels) side /= 10.0;
    }
    rep.point = Vector(2);
    rep.point << best_x, best_y;
    rep.objective = best_f;
    rep.grid_spec = "lattice 101x101, levels=" + std::to_string(levels) + ", final side=" + std::to_string(side) +
                    ", expansions=" + std::to_string(expansions);
    return rep;
}

/// Minimum closed-halfplane count through x, evaluated at every normal
/// direction adjacent (±1e−7 rad) to a critical direction: the two normals
/// orthogonal to X_i − x and the two along ±(X_i − x). The count is constant
/// on the open arcs between critical normals and can only grow at them, so
/// the critical normals themselves are skipped.
inline OracleReport brute_depth_2d(const Dataset& data, const Vector& x) {
    if (data.dim() != 2) throw DimensionError("brute_depth_2d: data must be two-dimensional");
    require_dim(2, x.size(), "brute_depth_2d");
    constexpr double kEps = 1e-7;
    constexpr double kPi = 3.14159265358979323846;
    const auto n = static_cast<std::size_t>(data.size());

    double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x, lo_y = lo_x, hi_y = -lo_x;
    for (std::size_t i = 0; i < n; ++i) {
        const double px = data.matrix()(0, static_cast<Eigen::Index>(i)), py = data.matrix()(1, static_cast<Eigen::Index>(i));
        lo_x = std::min(lo_x, px);
        hi_x = std::max(hi_x, px);
        lo_y = std::min(lo_y, py);
        hi_y = std::max(hi_y, py);
    }
    const double same = n > 0 ? 1e-9 * std::sqrt((hi_x - lo_x) * (hi_x - lo_x) + (hi_y - lo_y) * (hi_y - lo_y)) : 0.0;

    std::vector<double> vx, vy;
    Eigen::Index coincident = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = data.matrix()(0, static_cast<Eigen::Index>(i)) - x(0);
        const double dy = data.matrix()(1, static_cast<Eigen::Index>(i)) - x(1);
        if (std::sqrt(dx * dx + dy * dy) <= same) {
            ++coincident;
        } else {
            vx.push_back(dx);
            vy.push_back(dy);
        }
    }

    OracleReport rep;
    rep.n = data.size();
    Eigen::Index best = static_cast<Eigen::Index>(vx.size());
    for (std::size_t i = 0; i < vx.size(); ++i) {
        const double base = std::atan2(vy[i], vx[i]);
        for (double offset : {0.0, 0.5 * kPi, kPi, 1.5 * kPi}) {
            for (double wiggle : {-kEps, kEps}) {
                const double phi = base + offset + wiggle;
                const double hx = std::cos(phi), hy = std::sin(phi);
                Eigen::Index count = 0;
                for (std::size_t j = 0; j < vx.size(); ++j)
                    if (hx * vx[j] + hy * vy[j] >= 0.0) ++count;
                ++rep.evaluations;
                best = std::min(best, count);
            }
        }
    }
    if (rep.evaluations == 0) rep.evaluations = 1;
    rep.count = best + coincident;
    rep.value = n > 0 ? static_cast<double>(rep.count) / static_cast<double>(n) : 0.0;
    rep.grid_spec = "critical normals ±1e-7 rad over " + std::to_string(vx.size()) + " points";
    return rep;
}

}  // namespace geodepth::oracle
