#pragma once

// Empirical geometric quantiles: the minimizer over q of
//   (1/n) Σ (‖X_i − q‖ − ‖X_i‖) − ⟨u, q⟩,   ‖u‖ < 1,
// its gradient characterization, the growth bound for extreme levels and the
// moment-based expansion limits of ‖q(αu)‖ as α → 1.

#include "geodepth/core.hpp"
#include "geodepth/samplers.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace geodepth {

namespace detail {

/// Neumaier-compensated running sum.
struct CompensatedSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double x) noexcept {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) carry += (sum - t) + x;
        else carry += (x - t) + sum;
        sum = t;
    }
    double value() const noexcept { return sum + carry; }
};

inline void check_index_vector(const Vector& u_index, Eigen::Index dim, const char* what) {
    require_dim(dim, u_index.size(), what);
    require_finite(u_index, what);
    if (!(u_index.norm() < 1.0)) throw PreconditionError("index vector must satisfy ‖u‖<1");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Objective and characterization residual
// ---------------------------------------------------------------------------

inline double objective(const Dataset& data, const Vector& u_index, const Vector& q) {
    detail::check_index_vector(u_index, data.dim(), "objective");
    require_dim(data.dim(), q.size(), "objective");
    if (data.empty()) throw PreconditionError("objective: empty dataset");
    detail::CompensatedSum acc;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const auto x = data.point(i);
        acc.add((x - q).norm() - x.norm());
    }
    return acc.value() / static_cast<double>(data.size()) - u_index.dot(q);
}

struct ResidualResult {
    Vector r;                 // −(1/n) Σ_{X_i ≠ q} (X_i − q)/‖X_i − q‖
    Eigen::Index atoms = 0;   // points within the coincidence tolerance of q
};

/// q solves the αu-problem iff ‖r(q) − αu‖ ≤ atoms/n.
inline ResidualResult residual(const Dataset& data, const Vector& q) {
    require_dim(data.dim(), q.size(), "residual");
    if (data.empty()) throw PreconditionError("residual: empty dataset");
    const double coincide = data.coincidence_tolerance();
    ResidualResult out{Vector::Zero(data.dim()), 0};
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const double dist = (data.point(i) - q).norm();
        if (dist <= coincide) {
            ++out.atoms;
            continue;
        }
        out.r -= (data.point(i) - q) / dist;
    }
    out.r /= static_cast<double>(data.size());
    return out;
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

struct QuantileSolution {
    Vector q;
    Vector u_index;
    std::size_t iterations = 0;
    double residual_norm = 0.0;  // ‖r(q) − u_index‖
    Eigen::Index atom_hits = 0;
    Eigen::Index n = 0;
    double objective_value = 0.0;
    bool converged = false;
    bool non_unique = false;  // sample on a single line with d ≥ 2

    /// ‖r(q̂) − u‖ ≤ tol + atoms/n.
    bool satisfies_characterization(double tol) const {
        return residual_norm <= tol + static_cast<double>(atom_hits) / static_cast<double>(n);
    }
};

struct SolverOptions {
    double tol = 1e-8;
    std::size_t max_iter = 10000;
    /// Try a damped Newton step alongside each Weiszfeld step and keep the
    /// candidate with the lower objective.
    bool newton = true;
    /// When set, receives the objective value of every accepted iterate.
    std::vector<double>* objective_trace = nullptr;
};

namespace detail {

inline bool lies_on_line(const Dataset& data) {
    if (data.dim() < 2 || data.size() < 2) return false;
    const Vector mean = data.matrix().rowwise().mean();
    const Matrix centered = data.matrix().colwise() - mean;
    const Matrix cov = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
    const Vector ev = eig.eigenvalues();  // ascending
    const double top = ev(ev.size() - 1);
    return top <= 0.0 || ev(ev.size() - 2) <= 1e-20 * top;
}

inline Vector initial_iterate(const Dataset& data, const Vector& u_index) {
    const Vector med = data.coordinatewise_median();
    const double spread = std::sqrt((data.matrix().colwise() - med).colwise().squaredNorm().mean());
    const double level = u_index.norm();
    return med + u_index * (spread / std::sqrt(2.0 * (1.0 - level)));
}

}  // namespace detail

/// Modified Weiszfeld iteration for the sample geometric quantile with the
/// Vardi–Zhang correction at data atoms. Each step evaluates the Weiszfeld
/// map, a damped Newton step on the smooth part and the nearest data point,
/// and accepts the candidate with the lowest objective, so the objective is
/// non-increasing along the iterates up to its rounding floor.
inline QuantileSolution solve(const Dataset& data, const Vector& u_index, const SolverOptions& opt = {}) {
    detail::check_index_vector(u_index, data.dim(), "solve");
    if (!(opt.tol > 0.0)) throw PreconditionError("solve: tol must be > 0");
    if (data.size() < 1) throw PreconditionError("solve: empty dataset");
    const double extent = data.extent();
    if (!(extent > 0.0)) throw PreconditionError("solve: all data points are identical");

    const Eigen::Index d = data.dim();
    const Eigen::Index n = data.size();
    const double nd = static_cast<double>(n);
    const double coincide = data.coincidence_tolerance();
    const Matrix& pts = data.matrix();

    QuantileSolution sol;
    sol.u_index = u_index;
    sol.n = n;
    sol.non_unique = detail::lies_on_line(data);

    Vector q = detail::initial_iterate(data, u_index);
    double f = objective(data, u_index, q);
    if (opt.objective_trace) opt.objective_trace->push_back(f);

    Vector grad_sum(d), weighted_pts(d);
    Matrix hess(d, d);
    std::size_t stalls = 0, floor_steps = 0;

    double mean_norm = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) mean_norm += pts.col(i).norm();
    mean_norm /= nd;
    // rounding floor of the objective evaluation near q
    auto objective_noise = [&](const Vector& at) {
        return 8.0 * std::numeric_limits<double>::epsilon() * (2.0 * mean_norm + 2.0 * at.norm() + 1.0);
    };
    // ‖R̃(q)‖/n − atoms/n, the distance from satisfying the characterization
    auto excess_at = [&](const Vector& at) {
        std::vector<detail::CompensatedSum> acc(static_cast<std::size_t>(d));
        Eigen::Index at_atoms = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Vector diff = pts.col(i) - at;
            const double dist = diff.norm();
            if (dist <= coincide) {
                ++at_atoms;
                continue;
            }
            for (Eigen::Index j = 0; j < d; ++j) acc[static_cast<std::size_t>(j)].add(diff(j) / dist);
        }
        Vector r(d);
        for (Eigen::Index j = 0; j < d; ++j) r(j) = acc[static_cast<std::size_t>(j)].value() + nd * u_index(j);
        return r.norm() / nd - static_cast<double>(at_atoms) / nd;
    };

    for (std::size_t it = 0;; ++it) {
        // one pass: atom count, Weiszfeld sums, R̃ = Σ e_i + n·u and Σ (I − e eᵀ)/d_i
        Eigen::Index atoms = 0;
        Eigen::Index nearest = 0;
        double nearest_dist = std::numeric_limits<double>::infinity();
        double weight_sum = 0.0;
        grad_sum.setZero();
        weighted_pts.setZero();
        hess.setZero();
        std::vector<detail::CompensatedSum> grad_acc(static_cast<std::size_t>(d));
        Vector e(d);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double* x = pts.col(i).data();
            double dist2 = 0.0;
            for (Eigen::Index j = 0; j < d; ++j) {
                e(j) = x[j] - q(j);
                dist2 += e(j) * e(j);
            }
            const double dist = std::sqrt(dist2);
            if (dist < nearest_dist) {
                nearest_dist = dist;
                nearest = i;
            }
            if (dist <= coincide) {
                ++atoms;
                continue;
            }
            const double w = 1.0 / dist;
            weight_sum += w;
            for (Eigen::Index j = 0; j < d; ++j) {
                weighted_pts(j) += w * x[j];
                e(j) *= w;
                grad_acc[static_cast<std::size_t>(j)].add(e(j));
            }
            if (opt.newton) {
                for (Eigen::Index a = 0; a < d; ++a)
                    for (Eigen::Index b = 0; b <= a; ++b) hess(a, b) -= w * e(a) * e(b);
            }
        }
        if (opt.newton) {
            for (Eigen::Index a = 0; a < d; ++a)
                for (Eigen::Index b = a + 1; b < d; ++b) hess(a, b) = hess(b, a);
        }
        for (Eigen::Index j = 0; j < d; ++j) grad_sum(j) = grad_acc[static_cast<std::size_t>(j)].value();
        if (opt.newton) hess.diagonal().array() += weight_sum;
        const Vector pull = grad_sum + nd * u_index;  // R̃(q); gradient of the smooth part is −R̃/n
        const double pull_norm = pull.norm();

        sol.iterations = it;
        sol.atom_hits = atoms;
        sol.residual_norm = pull_norm / nd;
        if (sol.residual_norm <= opt.tol + static_cast<double>(atoms) / nd) {
            sol.converged = true;
            // one Newton polish: the residual bound alone leaves q off by
            // about tol / λ_min(H) when the objective is flat
            if (opt.newton && atoms == 0 && pull_norm > 0.0) {
                Eigen::LDLT<Matrix> ldlt(hess);
                if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
                    const Vector cand = q + ldlt.solve(pull);
                    const bool clear = cand.allFinite() && ((pts.colwise() - cand).colwise().norm().array() > coincide).all();
                    if (clear && objective(data, u_index, cand) <= f + objective_noise(q)) {
                        const double ex = excess_at(cand);
                        if (ex < sol.residual_norm) {
                            q = cand;
                            f = objective(data, u_index, q);
                            sol.residual_norm = ex;
                            if (opt.objective_trace) opt.objective_trace->push_back(f);
                        }
                    }
                }
            }
            break;
        }
        if (it >= opt.max_iter) break;

        Vector best_q = q;
        double best_f = std::numeric_limits<double>::infinity();
        auto consider = [&](const Vector& cand) {
            if (!cand.allFinite()) return;
            const double fc = objective(data, u_index, cand);
            if (fc < best_f) {
                best_f = fc;
                best_q = cand;
            }
        };

        // Weiszfeld map T(q), pulled towards q at an atom (Vardi–Zhang)
        Vector weiszfeld_q = q;
        std::optional<Vector> newton_q;
        if (weight_sum > 0.0) {
            const Vector t = (weighted_pts + nd * u_index) / weight_sum;
            if (atoms > 0) {
                const double lambda = std::min(1.0, static_cast<double>(atoms) / pull_norm);
                weiszfeld_q = (1.0 - lambda) * t + lambda * q;
            } else {
                weiszfeld_q = t;
            }
            consider(weiszfeld_q);
        }

        if (opt.newton && atoms == 0) {
            Eigen::LDLT<Matrix> ldlt(hess);
            if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
                const Vector step = ldlt.solve(pull);
                if (step.allFinite()) {
                    newton_q = q + step;
                    double scale = 1.0;
                    for (int halving = 0; halving < 40; ++halving, scale *= 0.5) {
                        const Vector cand = q + scale * step;
                        const double fc = objective(data, u_index, cand);
                        if (fc <= f) {
                            if (fc < best_f) {
                                best_f = fc;
                                best_q = cand;
                            }
                            break;
                        }
                    }
                }
            }
        }

        consider(Vector(pts.col(nearest)));

        if (best_f > f && weight_sum > 0.0) {
            // damping: halve the Weiszfeld step once
            consider(Vector(0.5 * (q + weiszfeld_q)));
        }
        if (!(best_f < f) && floor_steps < 50) {
            // at the objective's rounding floor a further gradient reduction no
            // longer shows in f: accept a candidate that keeps f within the floor
            // and strictly reduces the characterization residual
            const double current = sol.residual_norm - static_cast<double>(atoms) / nd;
            const double noise = objective_noise(q);
            std::optional<Vector> pick;
            double pick_excess = current;
            for (const auto* cand : {newton_q ? &*newton_q : nullptr, weight_sum > 0.0 ? &weiszfeld_q : nullptr}) {
                if (!cand || !cand->allFinite() || *cand == q) continue;
                if (!(objective(data, u_index, *cand) <= f + noise)) continue;
                const double ex = excess_at(*cand);
                if (ex < pick_excess) {
                    pick_excess = ex;
                    pick = *cand;
                }
            }
            if (pick) {
                ++floor_steps;
                q = *pick;
                f = objective(data, u_index, q);
                if (opt.objective_trace) opt.objective_trace->push_back(f);
                continue;
            }
        }
        if (!(best_f <= f)) break;  // no candidate descends: numerical stagnation
        if (best_f == f) {
            if (++stalls > 8 || best_q == q) break;
        } else {
            stalls = 0;
        }
        q = best_q;
        f = best_f;
        if (opt.objective_trace) opt.objective_trace->push_back(f);
    }

    sol.q = q;
    sol.objective_value = f;
    return sol;
}

/// Convenience overload matching the (tol, max_iter) call shape.
inline QuantileSolution solve(const Dataset& data, const Vector& u_index, double tol, std::size_t max_iter) {
    SolverOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    return solve(data, u_index, opt);
}

/// q̂(αu) − ‖q̂(αu)‖u − (1/n)Σ(X_i − ⟨X_i,u⟩u); tends to 0 along valid α_n.
inline Vector first_order_residual(const Dataset& data, const UnitDirection& u, double alpha, const SolverOptions& opt = {}) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("first_order_residual: alpha must lie in (0,1)");
    require_dim(data.dim(), u.dim(), "first_order_residual");
    const QuantileSolution sol = solve(data, Vector(alpha * u.coords()), opt);
    if (!sol.converged) throw ConvergenceError("first_order_residual: solver did not converge");
    const Vector mean = data.matrix().rowwise().mean();
    const Vector mean_orth = mean - mean.dot(u.coords()) * u.coords();
    return sol.q - sol.q.norm() * u.coords() - mean_orth;
}

// ---------------------------------------------------------------------------
// Growth bound for extreme levels
// ---------------------------------------------------------------------------

struct GrowthBound {
    double delta = 0.0;   // (1 − α)/5
    double radius = 0.0;  // k_n: at most a δ-fraction of ‖X_i‖ exceed it
    double m = 0.0;       // M_n = (α + 2δ)/(1 − 4δ − α) + 1
    double bound = 0.0;   // (M_n + 2)·k_n
};

/// With δ = (1−α)/5 and k the empirical (1−δ)-quantile of the norms, the
/// sample quantile satisfies ‖q̂(αu)‖ ≤ (M + 2)·k.
inline GrowthBound growth_bound(const Dataset& data, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("growth_bound: alpha must lie in (0,1)");
    if (data.empty()) throw PreconditionError("growth_bound: empty dataset");
    GrowthBound g;
    g.delta = (1.0 - alpha) / 5.0;
    std::vector<double> norms(static_cast<std::size_t>(data.size()));
    for (Eigen::Index i = 0; i < data.size(); ++i) norms[static_cast<std::size_t>(i)] = data.point(i).norm();
    const auto n = norms.size();
    auto keep = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * (1.0 - g.delta)));
    keep = std::clamp<std::size_t>(keep, 1, n);
    std::nth_element(norms.begin(), norms.begin() + static_cast<std::ptrdiff_t>(keep - 1), norms.end());
    g.radius = norms[keep - 1];
    g.m = (alpha + 2.0 * g.delta) / (1.0 - 4.0 * g.delta - alpha) + 1.0;
    g.bound = (g.m + 2.0) * g.radius;
    return g;
}

// ---------------------------------------------------------------------------
// Expansion limits
// ---------------------------------------------------------------------------

/// Orthonormal completion {w_k} of u: Gram–Schmidt over the canonical basis in
/// index order, skipping the basis vector most parallel to u. Columns of the
/// returned d × (d−1) matrix.
inline Matrix orthonormal_completion(const UnitDirection& u) {
    const Eigen::Index d = u.dim();
    Eigen::Index skip = 0;
    u.coords().cwiseAbs().maxCoeff(&skip);
    Matrix basis(d, d - 1);
    Eigen::Index col = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (j == skip) continue;
        Vector v = Vector::Unit(d, j);
        for (int pass = 0; pass < 2; ++pass) {
            v -= v.dot(u.coords()) * u.coords();
            for (Eigen::Index k = 0; k < col; ++k) v -= v.dot(basis.col(k)) * basis.col(k);
        }
        basis.col(col++) = v / v.norm();
    }
    return basis;
}

struct ExpansionLimits {
    Vector first_order_shift;            // E(X − ⟨X,u⟩u)
    Vector second_order_vector;          // −½‖E(X−⟨X,u⟩u)‖²u + Σ_k cov(⟨X,u⟩,⟨X,w_k⟩) w_k
    double magnitude_limit = 0.0;        // ½(trΣ − uᵀΣu)
    std::optional<double> third_order_limit;
};

namespace detail {

inline ExpansionLimits assemble_limits(const Vector& mean, const Matrix& cov, const UnitDirection& u,
                                       const std::optional<std::pair<double, double>>& third_terms) {
    const Vector& uc = u.coords();
    const Matrix w = orthonormal_completion(u);
    ExpansionLimits out;
    out.first_order_shift = mean - mean.dot(uc) * uc;
    const Vector cov_u = cov * uc;
    out.second_order_vector = -0.5 * out.first_order_shift.squaredNorm() * uc;
    double cross = 0.0;
    for (Eigen::Index k = 0; k < w.cols(); ++k) {
        const double c = cov_u.dot(w.col(k));
        out.second_order_vector += c * w.col(k);
        cross += c * mean.dot(w.col(k));
    }
    out.magnitude_limit = 0.5 * (cov.trace() - uc.dot(cov_u));
    if (third_terms) {
        // E(⟨X,u⟩[‖X_⊥‖² − ⟨X, m_⊥⟩]) − Σ_k cov(⟨X,u⟩,⟨X,w_k⟩) E⟨X,w_k⟩
        out.third_order_limit = third_terms->first - third_terms->second - cross;
    }
    return out;
}

}  // namespace detail

/// Limits with expectations replaced by sample means (covariance divisor n).
inline ExpansionLimits expansion_limits(const Dataset& data, const UnitDirection& u) {
    require_dim(data.dim(), u.dim(), "expansion_limits");
    const Moments m = sample_moments(data);
    const Vector& uc = u.coords();
    const Vector mean_orth = m.mean - m.mean.dot(uc) * uc;
    detail::CompensatedSum a, b;
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const auto x = data.point(i);
        const double s = x.dot(uc);
        a.add(s * (x.squaredNorm() - s * s));
        b.add(s * x.dot(mean_orth));
    }
    const double nd = static_cast<double>(data.size());
    return detail::assemble_limits(m.mean, m.covariance, u, std::make_pair(a.value() / nd, b.value() / nd));
}

/// Population limits; the third-order term is present only when E‖X‖³ < ∞.
inline ExpansionLimits expansion_limits(const DistributionSpec& spec, const UnitDirection& u) {
    require_dim(spec.dims, u.dim(), "expansion_limits");
    const Moments m = population_moments(spec);
    std::optional<std::pair<double, double>> third;
    if (m.third_moment_available) {
        const auto d = static_cast<std::size_t>(spec.dims);
        const std::vector<double> t3 = population_third_raw_moments(spec);
        const Vector& uc = u.coords();
        const Vector mean_orth = m.mean - m.mean.dot(uc) * uc;
        const Matrix raw2 = m.covariance + m.mean * m.mean.transpose();
        // E[s‖X‖²] − E[s³] with s = ⟨X,u⟩
        double a = 0.0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) {
                a += uc(static_cast<Eigen::Index>(i)) * t3[(i * d + j) * d + j];
                for (std::size_t k = 0; k < d; ++k)
                    a -= uc(static_cast<Eigen::Index>(i)) * uc(static_cast<Eigen::Index>(j)) *
                         uc(static_cast<Eigen::Index>(k)) * t3[(i * d + j) * d + k];
            }
        const double b = uc.dot(raw2 * mean_orth);
        third = std::make_pair(a, b);
    }
    return detail::assemble_limits(m.mean, m.covariance, u, third);
}

}  // namespace geodepth
