#pragma once

#include <algorithm>
#include <cmath>

#include "dkwm/types.hpp"

namespace dkwm {

// Kullback-Leibler divergence between Bernoulli(a) and Bernoulli(b), under
// the conventions 0 log 0 = 0 log(0/0) = 0 and z log(z/0) = +infinity for
// z > 0, which make the function total on [0,1]^2.
//
// Both terms are evaluated through log1p of an exactly computed difference,
// so there is no cancellation near a = b or near either endpoint.
inline KlValue kl_bernoulli(Probability a, Probability b) {
    const double av = a.value();
    const double bv = b.value();
    if (av == bv) return KlValue(0.0);
    double total = 0.0;
    if (av > 0.0) {
        if (bv == 0.0) return KlValue::infinity();
        total += av * std::log1p((av - bv) / bv);
    }
    if (av < 1.0) {
        if (bv == 1.0) return KlValue::infinity();
        total += (1.0 - av) * std::log1p((bv - av) / (1.0 - bv));
    }
    // The divergence is nonnegative; rounding may leave a stray -1e-17.
    return KlValue(std::max(total, 0.0));
}

// Largest deviation eta with kl(p+eta||p) <= eps.
//
// For p in (0, e^{-eps}] the map eta -> kl(p+eta||p) is a strictly
// increasing bijection from [0, 1-p] onto [0, log(1/p)], so the value is the
// unique root of kl(p+eta||p) = eps, found by bracketed bisection (robust
// against the infinite eta-derivative at eta = 1-p). For p > e^{-eps} every
// eta in [0, 1-p] satisfies the inequality and the value is 1-p. At p = 0
// the value is 0. The resulting map p -> modulus is continuous.
inline double deviation_modulus(Probability p, RateBudget eps, const Tolerances& tol = {}) {
    const double pv = p.value();
    const double e = eps.value();
    if (pv == 0.0) return 0.0;
    if (e == 0.0) return 0.0;  // kl(p+eta||p) = 0 only at eta = 0
    if (pv > std::exp(-e)) return 1.0 - pv;
    double lo = 0.0;
    double hi = 1.0 - pv;
    for (int i = 0; i < tol.modulus_max_iter && (hi - lo) > tol.modulus_eta; ++i) {
        const double mid = 0.5 * (lo + hi);
        const KlValue k = kl_bernoulli(Probability(std::min(pv + mid, 1.0)), p);
        (k.value() < e ? lo : hi) = mid;
    }
    return std::clamp(0.5 * (lo + hi), 0.0, 1.0 - pv);
}

// Bernstein-style closed-form lower bound on kl(p+eta||p):
//   eta^2 / (2 (p + eta/3)(1 - p - eta/3)).
inline double kl_lower_bernstein(Probability p, double eta) {
    const double pv = p.value();
    if (!(pv > 0.0 && pv < 1.0)) {
        throw validation_error("kl_lower_bernstein requires p in (0,1)");
    }
    if (!(eta >= 0.0 && eta <= 1.0 - pv)) {
        throw validation_error("kl_lower_bernstein requires eta in [0, 1-p]");
    }
    return eta * eta / (2.0 * (pv + eta / 3.0) * (1.0 - pv - eta / 3.0));
}

// Four-term even-series lower bound on kl(p+eta||p), valid for every p with
// p + eta <= 1:
//   2 eta^2 + 4 eta^4/9 + 32 eta^6/135 + 7072 eta^8/42525.
inline double kl_lower_series(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw validation_error("kl_lower_series requires eta in [0,1]");
    }
    const double e2 = eta * eta;
    return e2 * (2.0 + e2 * (4.0 / 9.0 + e2 * (32.0 / 135.0 + e2 * (7072.0 / 42525.0))));
}

}  // namespace dkwm
