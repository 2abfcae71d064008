#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "dkwm/kl.hpp"
#include "dkwm/types.hpp"

namespace dkwm {

// Per-sample budget log(1/delta)/n: the exponential rate a deviation must
// beat to have probability below delta.
inline RateBudget rate_budget(std::int64_t n, double delta) {
    if (n < 1) throw validation_error("rate_budget requires n >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw validation_error("delta must lie in (0,1)");
    return RateBudget(std::log(1.0 / delta) / static_cast<double>(n));
}

// Budget paying the peeling union-bound price: log(2 ceil(log_beta n) / delta)/n.
// The ceiling is the smallest k with beta^k >= n, found by multiply-and-compare
// so exact powers of beta cannot fall off by one through a floating log ratio.
inline RateBudget peeled_rate_budget(std::int64_t n, double delta, double beta) {
    if (n < 2) throw validation_error("peeled_rate_budget requires n >= 2");
    if (!(delta > 0.0 && delta < 1.0)) throw validation_error("delta must lie in (0,1)");
    if (!(beta > 1.0)) throw validation_error("beta must exceed 1");
    std::int64_t shells = 0;
    double acc = 1.0;
    while (acc < static_cast<double>(n)) {
        acc *= beta;
        if (++shells > 100'000'000) {
            throw numeric_error("peeled_rate_budget: beta is too close to 1");
        }
    }
    const double num = 2.0 * static_cast<double>(shells) / delta;
    return RateBudget(std::log(num) / static_cast<double>(n));
}

// Standard deviation of Bernoulli(p).
inline double bernoulli_sd(Probability p) {
    return std::sqrt(p.value() * (1.0 - p.value()));
}

// Damping ratio 9/(9+2 eps) in (0,1]; tends to 1 as the budget vanishes.
inline Probability rate_damping(RateBudget eps) {
    return Probability(9.0 / (9.0 + 2.0 * eps.value()));
}

// Variance-adaptive radius factor: the one-sided band radius at level p is
// radius_factor(p, eps) * sqrt(eps/2). Concave in p, at most 1, and tending
// to 2*bernoulli_sd(p) as eps -> 0. Requires eps > 0; callers wanting the
// limit use 2*bernoulli_sd(p) directly.
inline double radius_factor(Probability p, RateBudget eps) {
    const double e = eps.value();
    if (!(e > 0.0)) {
        throw validation_error("radius_factor requires eps > 0");
    }
    const double pv = p.value();
    const double rho = 9.0 / (9.0 + 2.0 * e);
    const double var_rho = rho * (1.0 - rho);
    const double v = std::sqrt(4.0 * pv * (1.0 - pv) * rho * rho + var_rho) +
                     std::sqrt(var_rho) * (1.0 - 2.0 * pv);
    return std::min(v, 1.0);
}

namespace detail {

// Stationary level of the radius factor, the solution of
// 1 - 2p = sd(rho)/rho. Negative once sd(rho)/rho exceeds 1 (eps > 4.5),
// where the factor is decreasing on all of [0,1].
inline double radius_factor_stationary(double eps) {
    const double rho = 9.0 / (9.0 + 2.0 * eps);
    return 0.5 * (1.0 - std::sqrt((1.0 - rho) / rho));
}

}  // namespace detail

// The level maximizing the radius factor over [0,1]. For eps <= 4.5 the
// stationary level is interior and the factor there is exactly 1; beyond
// that the maximum sits at level 0 with factor below 1.
inline Probability radius_factor_peak(RateBudget eps) {
    return Probability(std::max(detail::radius_factor_stationary(eps.value()), 0.0));
}

// Supremum of the radius factor over a range of levels. Exact by
// unimodality: 1 if the range straddles the stationary level, otherwise the
// factor at the endpoint nearest it. Ties on either side of the middle case
// resolve to the middle case, which agrees at equality.
inline double radius_factor_sup(IntervalRange range, RateBudget eps) {
    const double two_star = 2.0 * detail::radius_factor_stationary(eps.value());
    if (2.0 * range.p_max().value() < two_star) return radius_factor(range.p_max(), eps);
    if (2.0 * range.p_min().value() > two_star) return radius_factor(range.p_min(), eps);
    return 1.0;
}

// One-sided deviation allowance at level r granted by the tilt-lambda
// supermartingale: (log(1+lambda) + eps)/log(1 + lambda/r) - r. Nonnegative
// because (1 + lambda/r)^r <= 1 + lambda on [0,1].
inline double chernoff_deviation(double r, double lambda, double eps) {
    if (!(r > 0.0 && r <= 1.0)) throw validation_error("chernoff_deviation requires r in (0,1]");
    if (!(lambda > 0.0)) throw validation_error("lambda must be positive");
    if (!(eps >= 0.0)) throw validation_error("eps must be nonnegative");
    const double v = (std::log1p(lambda) + eps) / std::log1p(lambda / r) - r;
    return std::max(v, 0.0);
}

// Sign function for the lambda-derivative of chernoff_deviation(p, ., eps):
// negative below the optimal tilt, positive above it. Tends to -eps as
// lambda -> 0 and to +infinity as lambda -> infinity when p < e^{-eps}.
inline double tilt_gradient(Probability p, double lambda, double eps) {
    const double pv = p.value();
    if (!(pv > 0.0 && pv < 1.0)) throw validation_error("tilt_gradient requires p in (0,1)");
    if (!(lambda > 0.0)) throw validation_error("lambda must be positive");
    if (!(eps >= 0.0)) throw validation_error("eps must be nonnegative");
    return (pv + lambda) * std::log1p(lambda / pv) -
           (1.0 + lambda) * (eps + std::log1p(lambda));
}

// The tilt minimizing chernoff_deviation(p, ., eps): the unique root of
// tilt_gradient in (0, infinity). At the root,
//   chernoff_deviation(p, optimal_tilt(p, eps), eps) = deviation_modulus(p, eps),
// which the tests exploit as an independent route to the modulus.
//
// The bracket starts at [tilt_lo, 1] and doubles its upper end until the
// gradient turns positive; exceeding the doubling cap (p too close to
// e^{-eps} for the configured precision) is an explicit error, not a clamp.
inline double optimal_tilt(Probability p, double eps, const Tolerances& tol = {}) {
    const double pv = p.value();
    if (!(eps > 0.0)) throw validation_error("optimal_tilt requires eps > 0");
    if (!(pv > 0.0 && pv < std::exp(-eps))) {
        throw validation_error("optimal_tilt requires p in (0, e^{-eps})");
    }
    double lo = tol.tilt_lo;
    double hi = 1.0;
    if (!(tilt_gradient(p, lo, eps) < 0.0)) {
        throw numeric_error("optimal_tilt: gradient not negative at the bracket floor");
    }
    int doublings = 0;
    while (tilt_gradient(p, hi, eps) <= 0.0) {
        if (++doublings > tol.tilt_max_doublings) {
            throw numeric_error("optimal_tilt: bracket expansion cap hit (p too close to e^{-eps})");
        }
        hi *= 2.0;
    }
    for (int i = 0; i < tol.root_max_iter && (hi - lo) > tol.tilt_abs + tol.tilt_rel * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (tilt_gradient(p, mid, eps) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace detail {

// r-derivative of chernoff_deviation; strictly decreasing in r since the
// allowance is strictly concave in r.
inline double chernoff_deviation_dr(double r, double lambda, double eps) {
    const double lg = std::log1p(lambda / r);
    return lambda * (eps + std::log1p(lambda)) / (r * (lambda + r) * lg * lg) - 1.0;
}

}  // namespace detail

// The common optimum of the allowance surface over a range of levels.
struct SaddlePoint {
    Probability p_star;
    double lambda_star;
    double value;  // = chernoff_deviation(p_star, lambda_star, eps) = modulus at p_star
};

// Locates (p*, lambda*) with
//   value = inf over lambda of Delta(p*, lambda)
//         = sup over p in range of Delta(p, lambda*)
//         = deviation_modulus(p*, eps),
// writing Delta for chernoff_deviation. p* is the fixed point of
// p -> argmax_r Delta(r, optimal_tilt(p)); the argmax is located by
// bisection on the sign of the r-derivative (clamped to the endpoints when
// the derivative does not change sign), and the fixed-point gap changes sign
// across the range by construction, so plain bisection applies.
inline SaddlePoint saddle_point(IntervalRange range, double eps, const Tolerances& tol = {}) {
    if (!(eps > 0.0)) throw validation_error("saddle_point requires eps > 0");
    const double pmin = range.p_min().value();
    const double pmax = range.p_max().value();
    if (!(pmin > 0.0 && pmax < std::exp(-eps))) {
        throw validation_error("saddle_point requires the range inside (0, e^{-eps})");
    }

    auto arg_max_level = [&](double lambda) {
        if (detail::chernoff_deviation_dr(pmin, lambda, eps) <= 0.0) return pmin;
        if (detail::chernoff_deviation_dr(pmax, lambda, eps) >= 0.0) return pmax;
        double lo = pmin;
        double hi = pmax;
        for (int i = 0; i < tol.root_max_iter && (hi - lo) > tol.saddle_p; ++i) {
            const double mid = 0.5 * (lo + hi);
            (detail::chernoff_deviation_dr(mid, lambda, eps) > 0.0 ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    auto fixed_point_gap = [&](double level) {
        return arg_max_level(optimal_tilt(Probability(level), eps, tol)) - level;
    };

    double p_star = pmin;
    if (pmin != pmax) {
        // gap(pmin) >= 0 and gap(pmax) <= 0 exactly, because the argmax is
        // clamped into [pmin, pmax]; the bisection invariant never breaks.
        double lo = pmin;
        double hi = pmax;
        for (int i = 0; i < tol.root_max_iter && (hi - lo) > tol.saddle_p; ++i) {
            const double mid = 0.5 * (lo + hi);
            (fixed_point_gap(mid) >= 0.0 ? lo : hi) = mid;
        }
        p_star = 0.5 * (lo + hi);
    }
    const double lambda_star = optimal_tilt(Probability(p_star), eps, tol);
    return SaddlePoint{Probability(p_star), lambda_star,
                       chernoff_deviation(p_star, lambda_star, eps)};
}

// Parameter pair for the refined global tail bound; zeta is derived from xi,
// never free.
struct GlobalTailParams {
    double xi;
    double zeta;
    explicit GlobalTailParams(double xi_in) : xi(xi_in), zeta(2.0 * xi_in * xi_in / 3.0) {
        if (!(xi_in >= 0.0)) throw validation_error("xi must be nonnegative");
    }
};

// Refined bound on P{sup sqrt(n)(Fhat - F) > xi}:
//   exp(-2 xi^2 - (zeta^2/n)(1 + 4 zeta/(5n) + 425 zeta^2/(525 n^2))),
// with zeta = 2 xi^2/3. Strictly below exp(-2 xi^2) for xi > 0. The 425/525
// coefficient is kept unreduced, matching the source expression digit for
// digit.
inline double global_tail_bound(double xi, std::int64_t n) {
    if (n < 1) throw validation_error("global_tail_bound requires n >= 1");
    const GlobalTailParams ps(xi);
    const double nd = static_cast<double>(n);
    const double bracket =
        1.0 + 4.0 * ps.zeta / (5.0 * nd) + 425.0 * ps.zeta * ps.zeta / (525.0 * nd * nd);
    return std::exp(-(2.0 * ps.xi * ps.xi + ps.zeta * ps.zeta / nd * bracket));
}

// Inverse of the global tail bound in xi: the unique xi >= 0 with
// bound(xi, n) = delta, by bisection on the strictly decreasing bound.
// xi/sqrt(n) is the corresponding uniform band margin.
inline double global_tail_inverse(std::int64_t n, double delta, const Tolerances& tol = {}) {
    if (!(delta > 0.0 && delta < 1.0)) throw validation_error("delta must lie in (0,1)");
    double lo = 0.0;
    double hi = 1.0;
    while (global_tail_bound(hi, n) > delta) hi *= 2.0;
    for (int i = 0; i < tol.root_max_iter && (hi - lo) > tol.threshold_xi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (global_tail_bound(mid, n) > delta ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Pointwise adaptive band radius at level p:
//   (beta * radius_factor(p, eps_beta) * sqrt(eps_beta/2)) or 1/n,
// whichever is larger, with eps_beta the peeled budget.
inline double adaptive_threshold(Probability p, std::int64_t n, double delta, double beta) {
    const RateBudget eb = peeled_rate_budget(n, delta, beta);
    const double radius = beta * radius_factor(p, eb) * std::sqrt(eb.value() / 2.0);
    return std::max(radius, 1.0 / static_cast<double>(n));
}

// Margin U(q, eps) of the simultaneous lower confidence band: subtracted
// from the empirical level q it undoes the adaptive threshold at the true
// level. Nonnegative: the square-root term dominates the signed linear term.
inline double lower_confidence_margin(Probability q, RateBudget eps, double beta) {
    if (!(beta > 1.0)) throw validation_error("beta must exceed 1");
    const double e = eps.value();
    if (e == 0.0) return 0.0;
    const double qv = q.value();
    const double b = 3.0 * beta - 1.0;
    const double num =
        3.0 * beta *
        ((2.0 * qv - 1.0) * b * e + std::sqrt(e * (18.0 * qv * (1.0 - qv) + e * b * b)));
    return std::max(num / (9.0 + 2.0 * e * b * b), 0.0);
}

}  // namespace dkwm
