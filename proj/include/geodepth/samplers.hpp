#pragma once

// Seeded generators for the three families used in the experiments:
// diagonal Gaussian, independent Pareto coordinates, and the spherical
// exponential law with density ∝ exp(−‖y‖).

#include "geodepth/core.hpp"

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace geodepth {

enum class DistributionKind { gaussian_diag, pareto_indep, spherical_exponential };

inline std::string_view to_string(DistributionKind k) {
    switch (k) {
        case DistributionKind::gaussian_diag: return "gaussian_diag";
        case DistributionKind::pareto_indep: return "pareto_indep";
        case DistributionKind::spherical_exponential: return "spherical_exponential";
    }
    return "unknown";
}

inline DistributionKind distribution_kind_from_string(std::string_view s) {
    if (s == "gaussian_diag") return DistributionKind::gaussian_diag;
    if (s == "pareto_indep") return DistributionKind::pareto_indep;
    if (s == "spherical_exponential") return DistributionKind::spherical_exponential;
    throw PreconditionError("unknown distribution kind '" + std::string(s) + "'");
}

/// Parameters of a sampling family. Pareto specs may carry a per-coordinate
/// affine map x ↦ scale·x + offset (see matched_variance_pareto).
struct DistributionSpec {
    DistributionKind kind = DistributionKind::gaussian_diag;
    int dims = 2;
    std::vector<double> variances;  // gaussian_diag
    double delta = 0.0;             // pareto_indep tail index
    double scale = 1.0;             // pareto_indep affine map
    double offset = 0.0;

    static DistributionSpec gaussian(std::vector<double> variances) {
        DistributionSpec s;
        s.kind = DistributionKind::gaussian_diag;
        s.dims = static_cast<int>(variances.size());
        s.variances = std::move(variances);
        return s;
    }

    static DistributionSpec pareto(int dims, double delta) {
        DistributionSpec s;
        s.kind = DistributionKind::pareto_indep;
        s.dims = dims;
        s.delta = delta;
        return s;
    }

    static DistributionSpec spherical_exponential(int dims) {
        DistributionSpec s;
        s.kind = DistributionKind::spherical_exponential;
        s.dims = dims;
        return s;
    }

    void validate() const {
        if (dims < 1) throw PreconditionError("distribution: dims must be >= 1");
        switch (kind) {
            case DistributionKind::gaussian_diag:
                if (static_cast<int>(variances.size()) != dims)
                    throw PreconditionError("gaussian_diag: need one variance per dimension");
                for (double v : variances)
                    if (!(v >= 0.0) || !std::isfinite(v)) throw PreconditionError("gaussian_diag: variances must be finite and >= 0");
                break;
            case DistributionKind::pareto_indep:
                if (!(delta > 0.0) || !std::isfinite(delta)) throw PreconditionError("pareto_indep: tail index must be > 0");
                if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(offset))
                    throw PreconditionError("pareto_indep: scale must be > 0 and offset finite");
                break;
            case DistributionKind::spherical_exponential:
                break;
        }
    }

    bool is_affine() const { return scale != 1.0 || offset != 0.0; }
};

// ---------------------------------------------------------------------------
// Pareto helpers (unit-scale Pareto(δ): survival x^{-δ} on x > 1)
// ---------------------------------------------------------------------------

inline double pareto_mean(double delta) {
    if (!(delta > 1.0)) throw MomentError("Pareto mean requires E‖X₁‖ < ∞ (delta > 1)");
    return delta / (delta - 1.0);
}

inline double pareto_variance(double delta) {
    if (!(delta > 2.0)) throw MomentError("Pareto variance requires E‖X₁‖² < ∞ (delta > 2)");
    return delta / ((delta - 2.0) * (delta - 1.0) * (delta - 1.0));
}

/// E[X^k] for unit-scale Pareto(δ); finite only when k < δ.
inline double pareto_raw_moment(double delta, int k) {
    if (k == 0) return 1.0;
    if (!(delta > k)) throw MomentError("Pareto raw moment of order " + std::to_string(k) + " requires delta > " + std::to_string(k));
    return delta / (delta - k);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

namespace detail {

inline void draw_point(const DistributionSpec& spec, Pcg64& gen, Eigen::Ref<Vector> out) {
    const auto d = static_cast<Eigen::Index>(spec.dims);
    switch (spec.kind) {
        case DistributionKind::gaussian_diag:
            for (Eigen::Index j = 0; j < d; ++j) out(j) = std::sqrt(spec.variances[static_cast<std::size_t>(j)]) * gen.normal();
            break;
        case DistributionKind::pareto_indep:
            for (Eigen::Index j = 0; j < d; ++j)
                out(j) = spec.scale * std::pow(gen.uniform_open(), -1.0 / spec.delta) + spec.offset;
            break;
        case DistributionKind::spherical_exponential: {
            Vector dir(d);
            for (Eigen::Index j = 0; j < d; ++j) dir(j) = gen.normal();
            const double len = dir.norm();
            // Gamma(d, 1) radius as a sum of d unit exponentials
            double radius = 0.0;
            for (Eigen::Index j = 0; j < d; ++j) radius -= std::log(gen.uniform_open());
            out = (len > 0.0) ? Vector(dir * (radius / len)) : Vector::Zero(d);
            break;
        }
    }
}

}  // namespace detail

/// n i.i.d. draws. Each point consumes a fixed number of uniforms, so the
/// first m points of sample(spec, n, rng) equal sample(spec, m, rng).
inline Dataset sample(const DistributionSpec& spec, Eigen::Index n, const RngSpec& rng) {
    spec.validate();
    if (n < 0) throw PreconditionError("sample: n must be >= 0");
    Pcg64 gen(rng);
    Matrix pts(spec.dims, n);
    for (Eigen::Index i = 0; i < n; ++i) detail::draw_point(spec, gen, pts.col(i));
    return Dataset(std::move(pts));
}

// ---------------------------------------------------------------------------
// Population moments
// ---------------------------------------------------------------------------

inline Moments population_moments(const DistributionSpec& spec) {
    spec.validate();
    const auto d = static_cast<Eigen::Index>(spec.dims);
    Moments m;
    switch (spec.kind) {
        case DistributionKind::gaussian_diag: {
            m.mean = Vector::Zero(d);
            m.covariance = Matrix::Zero(d, d);
            for (Eigen::Index j = 0; j < d; ++j) m.covariance(j, j) = spec.variances[static_cast<std::size_t>(j)];
            m.third_moment_available = true;
            break;
        }
        case DistributionKind::pareto_indep: {
            const double mu = pareto_mean(spec.delta);
            const double var = pareto_variance(spec.delta);
            m.mean = Vector::Constant(d, spec.scale * mu + spec.offset);
            m.covariance = Matrix::Identity(d, d) * (spec.scale * spec.scale * var);
            m.third_moment_available = spec.delta > 3.0;
            break;
        }
        case DistributionKind::spherical_exponential: {
            // radius R ~ Gamma(d, 1): E[R²] = d(d+1), shared equally by d coordinates
            m.mean = Vector::Zero(d);
            m.covariance = Matrix::Identity(d, d) * static_cast<double>(d + 1);
            m.third_moment_available = true;
            break;
        }
    }
    m.trace = m.covariance.trace();
    return m;
}

/// Raw third-moment tensor E[X_a X_b X_c], flattened as index (a·d + b)·d + c.
inline std::vector<double> population_third_raw_moments(const DistributionSpec& spec) {
    spec.validate();
    const auto d = static_cast<std::size_t>(spec.dims);
    std::vector<double> t(d * d * d, 0.0);
    switch (spec.kind) {
        case DistributionKind::gaussian_diag:
        case DistributionKind::spherical_exponential:
            // centered and symmetric under x ↦ −x: all odd moments vanish
            return t;
        case DistributionKind::pareto_indep: {
            if (!(spec.delta > 3.0)) throw MomentError("third moments require E‖X₁‖³ < ∞ (pareto delta > 3)");
            // raw moments of scale·X + offset by the binomial expansion
            std::array<double, 4> raw{};
            const double c = spec.scale, o = spec.offset;
            std::array<double, 4> base{};
            for (int k = 0; k < 4; ++k) base[static_cast<std::size_t>(k)] = pareto_raw_moment(spec.delta, k);
            raw[0] = 1.0;
            raw[1] = c * base[1] + o;
            raw[2] = c * c * base[2] + 2 * c * o * base[1] + o * o;
            raw[3] = c * c * c * base[3] + 3 * c * c * o * base[2] + 3 * c * o * o * base[1] + o * o * o;
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b)
                    for (std::size_t e = 0; e < d; ++e) {
                        double v;
                        if (a == b && b == e) v = raw[3];
                        else if (a == b || a == e || b == e) v = raw[2] * raw[1];
                        else v = raw[1] * raw[1] * raw[1];
                        t[(a * d + b) * d + e] = v;
                    }
            return t;
        }
    }
    return t;
}

/// Centered, rescaled Pareto(δ) whose per-coordinate variance equals
/// `target_variance`.
inline DistributionSpec matched_variance_pareto(double target_variance, double delta, int dims = 2) {
    if (!(delta > 2.0)) throw MomentError("matched_variance_pareto: requires E‖X₁‖² < ∞ (delta > 2)");
    if (!(target_variance > 0.0)) throw PreconditionError("matched_variance_pareto: target variance must be > 0");
    DistributionSpec s = DistributionSpec::pareto(dims, delta);
    s.scale = std::sqrt(target_variance / pareto_variance(delta));
    s.offset = -s.scale * pareto_mean(delta);
    return s;
}

}  // namespace geodepth
