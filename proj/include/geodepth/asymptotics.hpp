#pragma once

// Level schedules (α_n, t_n, γ_n), the diagnostic curves built on them and
// a least-squares light/heavy tail classifier for depth-decay curves.

#include "geodepth/core.hpp"
#include "geodepth/depth.hpp"
#include "geodepth/quantile.hpp"
#include "geodepth/samplers.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geodepth {

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

struct SchedulePoint {
    Eigen::Index n = 0;
    double value = 0.0;           // α_n or t_n
    std::optional<double> gamma;  // γ_n, t-schedules only
};

enum class AlphaKind { power_of_ten, sqrt_log, custom };
enum class TKind { linear, gaussian_log, heavy_power, custom };

inline std::string_view to_string(AlphaKind k) {
    switch (k) {
        case AlphaKind::power_of_ten: return "power_of_ten";
        case AlphaKind::sqrt_log: return "sqrt_log";
        case AlphaKind::custom: return "custom";
    }
    return "unknown";
}

inline std::string_view to_string(TKind k) {
    switch (k) {
        case TKind::linear: return "linear";
        case TKind::gaussian_log: return "gaussian_log";
        case TKind::heavy_power: return "heavy_power";
        case TKind::custom: return "custom";
    }
    return "unknown";
}

inline AlphaKind alpha_kind_from_string(std::string_view s) {
    if (s == "power_of_ten") return AlphaKind::power_of_ten;
    if (s == "sqrt_log") return AlphaKind::sqrt_log;
    if (s == "custom") return AlphaKind::custom;
    throw PreconditionError("unknown alpha schedule kind '" + std::string(s) + "'");
}

inline TKind t_kind_from_string(std::string_view s) {
    if (s == "linear") return TKind::linear;
    if (s == "gaussian_log") return TKind::gaussian_log;
    if (s == "heavy_power") return TKind::heavy_power;
    if (s == "custom") return TKind::custom;
    throw PreconditionError("unknown t schedule kind '" + std::string(s) + "'");
}

struct AlphaSchedule {
    AlphaKind kind = AlphaKind::custom;
    std::vector<double> params;
    std::vector<SchedulePoint> values;
    bool summable = false;        // Σ exp(−n(1−α_n)²) < ∞ for the analytic form
    bool cube_condition = false;  // n(1−α_n)³ → ∞ for the analytic form
};

struct TSchedule {
    TKind kind = TKind::custom;
    std::vector<double> params;
    std::vector<SchedulePoint> values;
};

namespace detail {

inline void check_n_range(const std::vector<Eigen::Index>& n_range, Eigen::Index min_n) {
    if (n_range.empty()) throw PreconditionError("schedule: n range is empty");
    for (std::size_t i = 0; i < n_range.size(); ++i) {
        if (n_range[i] < min_n)
            throw PreconditionError("schedule: n values must be >= " + std::to_string(min_n));
        if (i > 0 && n_range[i] <= n_range[i - 1]) throw PreconditionError("schedule: n values must be strictly increasing");
    }
}

inline void check_param_count(const std::vector<double>& params, std::size_t expected, const char* what) {
    if (params.size() != expected)
        throw PreconditionError(std::string(what) + ": expected " + std::to_string(expected) + " parameter(s)");
    for (double p : params)
        if (!std::isfinite(p)) throw PreconditionError(std::string(what) + ": non-finite parameter");
}

}  // namespace detail

/// power_of_ten: α_n = 1 − 10^{−c·n} (params [c]); sqrt_log: α_n = 1 − √(2 log n / n);
/// custom: params are the α values, one per n.
inline AlphaSchedule make_alpha_schedule(AlphaKind kind, std::vector<double> params,
                                         const std::vector<Eigen::Index>& n_range) {
    AlphaSchedule s;
    s.kind = kind;
    switch (kind) {
        case AlphaKind::power_of_ten: {
            detail::check_n_range(n_range, 1);
            detail::check_param_count(params, 1, "power_of_ten");
            if (!(params[0] > 0.0)) throw PreconditionError("power_of_ten: c must be > 0");
            for (auto n : n_range) s.values.push_back({n, 1.0 - std::pow(10.0, -params[0] * static_cast<double>(n)), {}});
            // n(1−α_n)² → 0 geometrically: the summands tend to 1
            s.summable = false;
            s.cube_condition = false;
            break;
        }
        case AlphaKind::sqrt_log: {
            detail::check_n_range(n_range, 2);
            detail::check_param_count(params, 0, "sqrt_log");
            for (auto n : n_range) {
                const double nd = static_cast<double>(n);
                s.values.push_back({n, 1.0 - std::sqrt(2.0 * std::log(nd) / nd), {}});
            }
            // exp(−n·2 log n/n) = n^{−2}; n(1−α_n)³ = 2^{3/2}(log n)^{3/2}/√n → 0
            s.summable = true;
            s.cube_condition = false;
            break;
        }
        case AlphaKind::custom: {
            detail::check_n_range(n_range, 1);
            if (params.size() != n_range.size()) throw PreconditionError("custom alpha schedule: need one alpha per n");
            for (std::size_t i = 0; i < n_range.size(); ++i) s.values.push_back({n_range[i], params[i], {}});
            break;
        }
    }
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        const double a = s.values[i].value;
        if (!(a > 0.0 && a < 1.0)) throw PreconditionError("alpha schedule: values must lie in (0,1)");
        if (i > 0 && !(a > s.values[i - 1].value)) throw PreconditionError("alpha schedule: values must be strictly increasing");
    }
    s.params = std::move(params);
    return s;
}

/// Σ exp(−n(1−α_n)²) over the configured range.
inline double summability_partial_sum(const AlphaSchedule& s) {
    double acc = 0.0;
    for (const auto& p : s.values) {
        const double gap = 1.0 - p.value;
        acc += std::exp(-static_cast<double>(p.n) * gap * gap);
    }
    return acc;
}

/// linear: t = a + b·n (params [a, b]); gaussian_log: t = √(2β log n), γ = n^{−β}
/// (params [β]); heavy_power: t = n^{β/δ}, γ = n^{−β} (params [β, δ]);
/// custom: params are the t values.
inline TSchedule make_t_schedule(TKind kind, std::vector<double> params, const std::vector<Eigen::Index>& n_range) {
    TSchedule s;
    s.kind = kind;
    switch (kind) {
        case TKind::linear:
            detail::check_n_range(n_range, 1);
            detail::check_param_count(params, 2, "linear");
            for (auto n : n_range) s.values.push_back({n, params[0] + params[1] * static_cast<double>(n), {}});
            break;
        case TKind::gaussian_log: {
            detail::check_n_range(n_range, 2);
            detail::check_param_count(params, 1, "gaussian_log");
            const double beta = params[0];
            if (!(beta > 0.0)) throw PreconditionError("gaussian_log: beta must be > 0");
            for (auto n : n_range) {
                const double nd = static_cast<double>(n);
                s.values.push_back({n, std::sqrt(2.0 * beta * std::log(nd)), std::pow(nd, -beta)});
            }
            break;
        }
        case TKind::heavy_power: {
            detail::check_n_range(n_range, 2);
            detail::check_param_count(params, 2, "heavy_power");
            const double beta = params[0], delta = params[1];
            if (!(beta > 0.0 && beta < 1.0)) throw PreconditionError("heavy_power: beta must lie in (0,1)");
            if (!(delta > 0.0)) throw PreconditionError("heavy_power: delta must be > 0");
            for (auto n : n_range) {
                const double nd = static_cast<double>(n);
                s.values.push_back({n, std::pow(nd, beta / delta), std::pow(nd, -beta)});
            }
            break;
        }
        case TKind::custom:
            detail::check_n_range(n_range, 1);
            if (params.size() != n_range.size()) throw PreconditionError("custom t schedule: need one t per n");
            for (std::size_t i = 0; i < n_range.size(); ++i) s.values.push_back({n_range[i], params[i], {}});
            break;
    }
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        const double t = s.values[i].value;
        if (!(t > 0.0) || !std::isfinite(t)) throw PreconditionError("t schedule: values must be finite and > 0");
        if (i > 0 && !(t > s.values[i - 1].value)) throw PreconditionError("t schedule: values must be strictly increasing");
    }
    s.params = std::move(params);
    return s;
}

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

/// fixed: one sample of size n per seed, reused at every schedule point;
/// growing: the schedule's n at each point, taken as nested prefixes of one
/// sample per seed.
struct NPolicy {
    enum class Kind { fixed, growing };
    Kind kind = Kind::growing;
    Eigen::Index fixed_n = 0;

    static NPolicy fixed(Eigen::Index n) {
        if (n < 1) throw PreconditionError("n_policy: fixed n must be >= 1");
        return {Kind::fixed, n};
    }
    static NPolicy growing() { return {Kind::growing, 0}; }

    Eigen::Index sample_size(Eigen::Index schedule_n) const { return kind == Kind::fixed ? fixed_n : schedule_n; }
};

enum class Aggregation { median, mean };
enum class DepthMethod { exact2d, approx };
enum class MomentSource { population, sample };

struct CurveOptions {
    Aggregation aggregation = Aggregation::median;
    SolverOptions solver{};
    /// Tighten the solver tolerance to max(1e−13, min(tol, 1e−3(1−α))) so
    /// that ‖q̂‖²(1−α) keeps its accuracy as α → 1.
    bool adaptive_tol = true;
    /// Covariance used in the y limit term ½(trΣ − uᵀΣu).
    MomentSource moments = MomentSource::population;
    DepthMethod depth_method = DepthMethod::exact2d;
    std::size_t directions = 5000;
    ProductDepthOptions population{};
};

struct CurvePoint {
    double param = 0.0;
    double stat = 0.0;
    std::optional<double> stderr_estimate;
    Eigen::Index n = 0;
    std::size_t seeds = 0;
    std::optional<double> reference;  // marginal survival bound or population depth
    std::optional<double> gamma;
    bool flagged = false;             // premise HD(t_n x, P) > γ_n violated
};

struct CurveMeta {
    std::string curve;
    DistributionSpec spec;
    Vector direction;
    std::vector<std::uint64_t> seeds;
    NPolicy policy;
    Aggregation aggregation = Aggregation::median;
    std::string schedule;
    std::string moments_source;
    std::optional<double> limit_term;
    std::size_t solves = 0;
    std::size_t characterization_violations = 0;
    std::size_t growth_violations = 0;
    std::size_t marginal_violations = 0;
    std::vector<std::size_t> premise_violations;
};

struct DiagnosticCurve {
    std::vector<CurvePoint> points;
    CurveMeta meta;
};

namespace detail {

struct Aggregate {
    double center = 0.0;
    std::optional<double> stderr_estimate;
};

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Median with 1.4826·MAD/√k, or mean with the standard error of the mean.
inline Aggregate aggregate(const std::vector<double>& v, Aggregation how) {
    Aggregate a;
    const auto k = static_cast<double>(v.size());
    if (how == Aggregation::median) {
        a.center = median_of(v);
        if (v.size() > 1) {
            std::vector<double> dev;
            dev.reserve(v.size());
            for (double x : v) dev.push_back(std::abs(x - a.center));
            a.stderr_estimate = 1.4826 * median_of(dev) / std::sqrt(k);
        }
    } else {
        double s = 0.0;
        for (double x : v) s += x;
        a.center = s / k;
        if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - a.center) * (x - a.center);
            a.stderr_estimate = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
        }
    }
    return a;
}

/// Sample stream of one seed; shared by all schedule points so that growing
/// samples are nested.
inline RngSpec sample_stream(std::uint64_t seed) { return RngSpec{seed, 0}; }

/// Runs job(point, seed_index) -> statistic for every pair and aggregates.
template <class Job>
std::vector<CurvePoint> run_curve(const std::vector<SchedulePoint>& schedule, const NPolicy& policy,
                                  const std::vector<std::uint64_t>& seeds, Aggregation how, Job&& job) {
    if (seeds.empty()) throw PreconditionError("curve: at least one seed is required");
    const std::size_t s_count = seeds.size();
    std::vector<double> stats(schedule.size() * s_count);
    parallel_for(stats.size(), [&](std::size_t idx) {
        const std::size_t j = idx / s_count, s = idx % s_count;
        stats[idx] = job(j, s);
    });
    std::vector<CurvePoint> out;
    for (std::size_t j = 0; j < schedule.size(); ++j) {
        std::vector<double> per_seed(stats.begin() + static_cast<std::ptrdiff_t>(j * s_count),
                                     stats.begin() + static_cast<std::ptrdiff_t>((j + 1) * s_count));
        for (double v : per_seed)
            if (!std::isfinite(v)) throw Error("curve: non-finite statistic");
        const Aggregate a = aggregate(per_seed, how);
        CurvePoint p;
        p.param = schedule[j].value;
        p.stat = a.center;
        p.stderr_estimate = a.stderr_estimate;
        p.n = policy.sample_size(schedule[j].n);
        p.seeds = s_count;
        p.gamma = schedule[j].gamma;
        out.push_back(p);
    }
    return out;
}

inline std::vector<Dataset> draw_samples(const DistributionSpec& spec, const std::vector<SchedulePoint>& schedule,
                                         const NPolicy& policy, const std::vector<std::uint64_t>& seeds) {
    Eigen::Index n_draw = policy.fixed_n;
    if (policy.kind == NPolicy::Kind::growing)
        for (const auto& p : schedule) n_draw = std::max(n_draw, p.n);
    std::vector<Dataset> out(seeds.size());
    parallel_for(seeds.size(), [&](std::size_t s) { out[s] = sample(spec, n_draw, sample_stream(seeds[s])); });
    return out;
}

inline Dataset sample_at(const std::vector<Dataset>& samples, std::size_t s, const NPolicy& policy, Eigen::Index n) {
    const Eigen::Index size = policy.sample_size(n);
    if (size == samples[s].size()) return samples[s];
    return samples[s].prefix(size);
}

inline double effective_tol(const CurveOptions& opt, double alpha) {
    if (!opt.adaptive_tol) return opt.solver.tol;
    return std::max(1e-13, std::min(opt.solver.tol, 1e-3 * (1.0 - alpha)));
}

/// Solves at level α along u and checks the characterization residual and
/// the growth bound independently of the solver's own bookkeeping.
inline QuantileSolution checked_solve(const Dataset& data, const UnitDirection& u, double alpha, const CurveOptions& opt,
                                      std::atomic<std::size_t>& char_violations,
                                      std::atomic<std::size_t>& growth_violations) {
    SolverOptions so = opt.solver;
    so.tol = effective_tol(opt, alpha);
    so.objective_trace = nullptr;
    const Vector index = alpha * u.coords();
    QuantileSolution sol = solve(data, index, so);
    if (!sol.converged)
        throw ConvergenceError("solver reached max_iter=" + std::to_string(so.max_iter) + " at alpha=" + std::to_string(alpha) +
                               " (n=" + std::to_string(data.size()) + ")");
    const ResidualResult rr = residual(data, sol.q);
    const double slack = so.tol + static_cast<double>(rr.atoms) / static_cast<double>(data.size());
    if ((rr.r - index).norm() > slack) ++char_violations;
    if (sol.q.norm() > growth_bound(data, alpha).bound) ++growth_violations;
    return sol;
}

inline void check_direction(const DistributionSpec& spec, const UnitDirection& u) {
    spec.validate();
    require_dim(spec.dims, u.dim(), "curve direction");
}

}  // namespace detail

/// y(α) = ‖q̂_n(αu)‖²(1−α) − ½(trΣ − uᵀΣu) along an α-schedule, with Σ the
/// population covariance of `spec`.
inline DiagnosticCurve y_curve(const DistributionSpec& spec, const UnitDirection& u, const AlphaSchedule& schedule,
                               const NPolicy& policy, const std::vector<std::uint64_t>& seeds, const CurveOptions& opt = {}) {
    detail::check_direction(spec, u);
    const Moments m = population_moments(spec);
    const double limit = m.orthogonal_half_trace(u);
    if (!(limit > 0.0)) throw PreconditionError("y_curve: requires trΣ − uᵀΣu > 0");
    const bool sample_limit = opt.moments == MomentSource::sample;

    const auto samples = detail::draw_samples(spec, schedule.values, policy, seeds);
    std::atomic<std::size_t> char_v{0}, growth_v{0};
    DiagnosticCurve c;
    c.points = detail::run_curve(schedule.values, policy, seeds, opt.aggregation, [&](std::size_t j, std::size_t s) {
        const Dataset data = detail::sample_at(samples, s, policy, schedule.values[j].n);
        const double alpha = schedule.values[j].value;
        const QuantileSolution sol = detail::checked_solve(data, u, alpha, opt, char_v, growth_v);
        const double term = sample_limit ? sample_moments(data).orthogonal_half_trace(u) : limit;
        return sol.q.squaredNorm() * (1.0 - alpha) - term;
    });
    c.meta.curve = "y";
    c.meta.spec = spec;
    c.meta.direction = u.coords();
    c.meta.seeds = seeds;
    c.meta.policy = policy;
    c.meta.aggregation = opt.aggregation;
    c.meta.schedule = std::string(to_string(schedule.kind));
    c.meta.moments_source = sample_limit ? "sample" : "population";
    if (!sample_limit) c.meta.limit_term = limit;
    c.meta.solves = schedule.values.size() * seeds.size();
    c.meta.characterization_violations = char_v.load();
    c.meta.growth_violations = growth_v.load();
    return c;
}

/// ‖q̂(αu) − ‖q̂(αu)‖u − (1/n)Σ(X_i − ⟨X_i,u⟩u)‖ along an α-schedule.
inline DiagnosticCurve first_order_curve(const DistributionSpec& spec, const UnitDirection& u, const AlphaSchedule& schedule,
                                         const NPolicy& policy, const std::vector<std::uint64_t>& seeds,
                                         const CurveOptions& opt = {}) {
    detail::check_direction(spec, u);
    if (spec.kind == DistributionKind::pareto_indep && !(spec.delta > 1.0))
        throw MomentError("first-order expansion requires E‖X₁‖ < ∞ (pareto delta > 1)");

    const auto samples = detail::draw_samples(spec, schedule.values, policy, seeds);
    std::atomic<std::size_t> char_v{0}, growth_v{0};
    DiagnosticCurve c;
    c.points = detail::run_curve(schedule.values, policy, seeds, opt.aggregation, [&](std::size_t j, std::size_t s) {
        const Dataset data = detail::sample_at(samples, s, policy, schedule.values[j].n);
        const double alpha = schedule.values[j].value;
        const QuantileSolution sol = detail::checked_solve(data, u, alpha, opt, char_v, growth_v);
        const Vector mean = data.matrix().rowwise().mean();
        const Vector mean_orth = mean - mean.dot(u.coords()) * u.coords();
        return (sol.q - sol.q.norm() * u.coords() - mean_orth).norm();
    });
    c.meta.curve = "first_order";
    c.meta.spec = spec;
    c.meta.direction = u.coords();
    c.meta.seeds = seeds;
    c.meta.policy = policy;
    c.meta.aggregation = opt.aggregation;
    c.meta.schedule = std::string(to_string(schedule.kind));
    c.meta.moments_source = "sample";
    c.meta.solves = schedule.values.size() * seeds.size();
    c.meta.characterization_violations = char_v.load();
    c.meta.growth_violations = growth_v.load();
    return c;
}

namespace detail {

inline DepthValue empirical_depth(const Dataset& data, const Vector& y, const CurveOptions& opt, std::uint64_t seed,
                                  std::size_t point_index) {
    if (opt.depth_method == DepthMethod::exact2d) return depth_exact_2d(data, y);
    const RngSpec dirs{seed, hash_combine({static_cast<std::uint64_t>(data.size()), seed, point_index})};
    return depth_approx(data, y, opt.directions, dirs);
}

inline void check_depth_method(const DistributionSpec& spec, const CurveOptions& opt) {
    if (opt.depth_method == DepthMethod::exact2d && spec.dims != 2)
        throw DimensionError("exact2d depth requires d = 2 (use approx)");
    if (opt.depth_method == DepthMethod::approx && opt.directions < 1)
        throw PreconditionError("approx depth requires at least one direction");
}

inline std::optional<std::vector<Marginal>> product_marginals(const DistributionSpec& spec) {
    if (spec.kind == DistributionKind::spherical_exponential) return std::nullopt;
    return marginals_of(spec);
}

}  // namespace detail

/// Empirical depth HD(t_n x, P_n) along a t-schedule. Every evaluation is
/// checked against the empirical min-marginal survival count at t_n x.
inline DiagnosticCurve hd_decay_curve(const DistributionSpec& spec, const UnitDirection& x, const TSchedule& schedule,
                                      const NPolicy& policy, const std::vector<std::uint64_t>& seeds,
                                      const CurveOptions& opt = {}) {
    detail::check_direction(spec, x);
    detail::check_depth_method(spec, opt);
    const auto samples = detail::draw_samples(spec, schedule.values, policy, seeds);
    std::atomic<std::size_t> marginal_v{0};
    DiagnosticCurve c;
    c.points = detail::run_curve(schedule.values, policy, seeds, opt.aggregation, [&](std::size_t j, std::size_t s) {
        const Dataset data = detail::sample_at(samples, s, policy, schedule.values[j].n);
        const Vector y = schedule.values[j].value * x.coords();
        const DepthValue dv = detail::empirical_depth(data, y, opt, seeds[s], j);
        if (dv.k > empirical_marginal_survival_count(data, y)) ++marginal_v;
        return dv.value;
    });
    if (const auto marg = detail::product_marginals(spec)) {
        for (auto& p : c.points) p.reference = marginal_survival_bound(*marg, x.coords(), p.param);
    }
    c.meta.curve = "hd_decay";
    c.meta.spec = spec;
    c.meta.direction = x.coords();
    c.meta.seeds = seeds;
    c.meta.policy = policy;
    c.meta.aggregation = opt.aggregation;
    c.meta.schedule = std::string(to_string(schedule.kind));
    c.meta.marginal_violations = marginal_v.load();
    return c;
}

/// Population depth HD(y, P) for the specs with an oracle.
inline double population_depth(const DistributionSpec& spec, const Vector& y, const ProductDepthOptions& opt = {}) {
    spec.validate();
    switch (spec.kind) {
        case DistributionKind::gaussian_diag: return population_depth_gaussian(spec.variances, y).value;
        case DistributionKind::pareto_indep:
            if (spec.dims != 2) break;
            return population_depth_product(spec, y, opt).value;
        case DistributionKind::spherical_exponential: break;
    }
    throw PreconditionError("population depth oracle unavailable for " + std::string(to_string(spec.kind)) + " in d = " +
                            std::to_string(spec.dims));
}

/// HD(t_n x, P_n)/HD(t_n x, P) along a t-schedule; points where the premise
/// HD(t_n x, P) > γ_n fails are flagged and listed in the metadata.
inline DiagnosticCurve hd_ratio_curve(const DistributionSpec& spec, const UnitDirection& x, const TSchedule& schedule,
                                      const NPolicy& policy, const std::vector<std::uint64_t>& seeds,
                                      const CurveOptions& opt = {}) {
    detail::check_direction(spec, x);
    detail::check_depth_method(spec, opt);
    std::vector<double> pop(schedule.values.size());
    for (std::size_t j = 0; j < pop.size(); ++j) {
        pop[j] = population_depth(spec, Vector(schedule.values[j].value * x.coords()), opt.population);
        if (!(pop[j] > 0.0)) throw PreconditionError("hd_ratio_curve: population depth vanishes at t = " +
                                                     std::to_string(schedule.values[j].value));
    }
    const auto samples = detail::draw_samples(spec, schedule.values, policy, seeds);
    std::atomic<std::size_t> marginal_v{0};
    DiagnosticCurve c;
    c.points = detail::run_curve(schedule.values, policy, seeds, opt.aggregation, [&](std::size_t j, std::size_t s) {
        const Dataset data = detail::sample_at(samples, s, policy, schedule.values[j].n);
        const Vector y = schedule.values[j].value * x.coords();
        const DepthValue dv = detail::empirical_depth(data, y, opt, seeds[s], j);
        if (dv.k > empirical_marginal_survival_count(data, y)) ++marginal_v;
        return dv.value / pop[j];
    });
    for (std::size_t j = 0; j < c.points.size(); ++j) {
        auto& p = c.points[j];
        p.reference = pop[j];
        if (p.gamma && !(pop[j] > *p.gamma)) {
            p.flagged = true;
            c.meta.premise_violations.push_back(j);
        }
    }
    c.meta.curve = "hd_ratio";
    c.meta.spec = spec;
    c.meta.direction = x.coords();
    c.meta.seeds = seeds;
    c.meta.policy = policy;
    c.meta.aggregation = opt.aggregation;
    c.meta.schedule = std::string(to_string(schedule.kind));
    c.meta.marginal_violations = marginal_v.load();
    return c;
}

// ---------------------------------------------------------------------------
// Tail classifier
// ---------------------------------------------------------------------------

struct TailClassification {
    enum class Verdict { light, heavy };
    Verdict verdict = Verdict::light;
    std::optional<double> index_estimate;
    double light_r2 = 0.0;  // log HD = a − b·t²
    double heavy_r2 = 0.0;  // log HD = a − δ·log t
    std::size_t points_used = 0;
};

inline std::string_view to_string(TailClassification::Verdict v) {
    return v == TailClassification::Verdict::light ? "light" : "heavy";
}

namespace detail {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const auto k = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LineFit f;
    if (!(sxx > 0.0)) throw PreconditionError("classify_tail: curve parameters must not all coincide");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        sse += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return f;
}

}  // namespace detail

/// Fits log HD against t² (light) and log t (heavy) on the points with
/// HD ≥ 5/n and keeps the better R². With n = 0 the count filter is skipped.
inline TailClassification classify_tail(const std::vector<double>& t, const std::vector<double>& hd,
                                        const std::vector<Eigen::Index>& n) {
    if (t.size() != hd.size() || t.size() != n.size()) throw DimensionError("classify_tail: column lengths differ");
    std::vector<double> t2, logt, loghd;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(hd[i] > 0.0) || !(t[i] > 0.0)) continue;
        if (n[i] > 0 && hd[i] < 5.0 / static_cast<double>(n[i])) continue;
        t2.push_back(t[i] * t[i]);
        logt.push_back(std::log(t[i]));
        loghd.push_back(std::log(hd[i]));
    }
    if (loghd.size() < 6) throw PreconditionError("classify_tail: need at least 6 points with positive depth, got " +
                                                  std::to_string(loghd.size()));
    const auto light = detail::least_squares(t2, loghd);
    const auto heavy = detail::least_squares(logt, loghd);
    TailClassification out;
    out.light_r2 = light.r2;
    out.heavy_r2 = heavy.r2;
    out.points_used = loghd.size();
    if (heavy.r2 > light.r2) {
        out.verdict = TailClassification::Verdict::heavy;
        out.index_estimate = -heavy.slope;
    } else {
        out.verdict = TailClassification::Verdict::light;
    }
    return out;
}

inline TailClassification classify_tail(const DiagnosticCurve& curve) {
    std::vector<double> t, hd;
    std::vector<Eigen::Index> n;
    for (const auto& p : curve.points) {
        t.push_back(p.param);
        hd.push_back(p.stat);
        n.push_back(p.n);
    }
    return classify_tail(t, hd, n);
}

}  // namespace geodepth
