#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "dkwm/bounds.hpp"
#include "dkwm/kl.hpp"
#include "dkwm/types.hpp"

namespace dkwm {

// Empirical distribution function of a sample multiset: the fraction of
// samples at or below t, a right-continuous step function. Immutable after
// construction.
class EmpiricalCdf {
public:
    explicit EmpiricalCdf(std::vector<double> samples) : samples_(std::move(samples)) {
        if (samples_.empty()) throw validation_error("empirical cdf needs at least one sample");
        for (double x : samples_) {
            if (std::isnan(x)) throw validation_error("samples must not contain NaN");
        }
        std::sort(samples_.begin(), samples_.end());
    }

    std::int64_t size() const { return static_cast<std::int64_t>(samples_.size()); }
    const std::vector<double>& samples() const { return samples_; }

    // Count of samples <= t over n; ties all count.
    Probability eval(double t) const {
        const auto it = std::upper_bound(samples_.begin(), samples_.end(), t);
        return Probability(static_cast<double>(it - samples_.begin()) /
                           static_cast<double>(samples_.size()));
    }

private:
    std::vector<double> samples_;
};

// A reference distribution function for oracle checks and simulation:
// uniform on [0,1], piecewise linear through given (x, F(x)) knots, or
// purely atomic with given (location, weight) atoms.
class OracleCdf {
public:
    static OracleCdf uniform01() { return OracleCdf(Kind::uniform, {}); }

    // Knots must have strictly increasing x and nondecreasing F, starting at
    // F = 0 and ending at F = 1. F is 0 before the first knot and 1 after
    // the last.
    static OracleCdf piecewise_linear(std::vector<std::pair<double, double>> knots) {
        if (knots.size() < 2) throw validation_error("piecewise-linear cdf needs >= 2 knots");
        for (std::size_t i = 0; i < knots.size(); ++i) {
            if (std::isnan(knots[i].first) || std::isnan(knots[i].second)) {
                throw validation_error("cdf knots must not contain NaN");
            }
            if (i > 0 && !(knots[i].first > knots[i - 1].first)) {
                throw validation_error("cdf knot locations must be strictly increasing");
            }
            if (i > 0 && knots[i].second < knots[i - 1].second) {
                throw validation_error("cdf knot values must be nondecreasing");
            }
        }
        if (knots.front().second != 0.0 || knots.back().second != 1.0) {
            throw validation_error("cdf knots must run from F=0 to F=1");
        }
        return OracleCdf(Kind::linear, std::move(knots));
    }

    // Atoms must have strictly increasing locations and positive weights
    // summing to 1 (within 1e-12; the stored cumulative ends at exactly 1).
    static OracleCdf discrete(std::vector<std::pair<double, double>> atoms) {
        if (atoms.empty()) throw validation_error("discrete cdf needs >= 1 atom");
        double cum = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (i > 0 && !(atoms[i].first > atoms[i - 1].first)) {
                throw validation_error("atom locations must be strictly increasing");
            }
            if (!(atoms[i].second > 0.0)) throw validation_error("atom weights must be positive");
            cum += atoms[i].second;
            atoms[i].second = cum;
        }
        if (std::abs(cum - 1.0) > 1e-12) throw validation_error("atom weights must sum to 1");
        atoms.back().second = 1.0;
        return OracleCdf(Kind::atoms, std::move(atoms));
    }

    double eval(double t) const {
        switch (kind_) {
            case Kind::uniform:
                return std::clamp(t, 0.0, 1.0);
            case Kind::linear: {
                if (t <= pts_.front().first) return t < pts_.front().first ? 0.0 : pts_.front().second;
                if (t >= pts_.back().first) return 1.0;
                const auto it = std::upper_bound(
                    pts_.begin(), pts_.end(), t,
                    [](double v, const std::pair<double, double>& k) { return v < k.first; });
                const auto [x1, f1] = *it;
                const auto [x0, f0] = *(it - 1);
                return f0 + (f1 - f0) * (t - x0) / (x1 - x0);
            }
            case Kind::atoms: {
                const auto it = std::upper_bound(
                    pts_.begin(), pts_.end(), t,
                    [](double v, const std::pair<double, double>& k) { return v < k.first; });
                return it == pts_.begin() ? 0.0 : (it - 1)->second;
            }
        }
        return 0.0;  // unreachable
    }

private:
    enum class Kind { uniform, linear, atoms };
    OracleCdf(Kind kind, std::vector<std::pair<double, double>> pts)
        : kind_(kind), pts_(std::move(pts)) {}

    Kind kind_;
    std::vector<std::pair<double, double>> pts_;  // (x, F) knots or (x, cumulative) atoms
};

// An interval of the real line; endpoints may be infinite.
struct RealInterval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool closed_lo = true;
    bool closed_hi = true;

    static RealInterval whole_line() { return RealInterval{}; }
    static RealInterval closed(double a, double b) {
        if (std::isnan(a) || std::isnan(b) || a > b) {
            throw validation_error("interval endpoints must satisfy lo <= hi");
        }
        return RealInterval{a, b, true, true};
    }
};

// Exact supremum of Fhat(t) - F(t) over the interval.
//
// Fhat is constant between sample points and F is nondecreasing, so on each
// constancy segment the difference is largest at the left end. The candidate
// set is therefore:
//   - the value approached at the interval's infimum: 0 when the interval is
//     unbounded below (both functions vanish at -infinity), else the value
//     at lo itself, which by right-continuity of both functions is the
//     supremum over (lo, lo+h) whether or not lo is in the interval;
//   - every sample point inside the interval;
//   - the right endpoint when it is closed and finite (dominated by the left
//     end of its segment, evaluated anyway for completeness).
// Over the whole line the result is never negative; over sub-intervals it
// may be.
inline double sup_deviation(const EmpiricalCdf& ecdf, const OracleCdf& f,
                            const RealInterval& interval = RealInterval::whole_line()) {
    auto dev = [&](double t) { return ecdf.eval(t).value() - f.eval(t); };

    double best;
    if (std::isinf(interval.lo)) {
        best = 0.0;
    } else {
        best = dev(interval.lo);
    }

    const auto& xs = ecdf.samples();
    auto it = std::lower_bound(xs.begin(), xs.end(), interval.lo);
    for (; it != xs.end(); ++it) {
        const double x = *it;
        if (interval.closed_hi ? x > interval.hi : x >= interval.hi) break;
        if (it != xs.begin() && x == *(it - 1)) continue;  // ties share one candidate
        best = std::max(best, dev(x));
    }
    if (interval.closed_hi && !std::isinf(interval.hi)) {
        best = std::max(best, dev(interval.hi));
    }
    return best;
}

// The five band constructions.
enum class BandMethod { massart, cor2, theorem1_local, cor1_interval, cor3_adaptive };

inline const char* to_string(BandMethod m) {
    switch (m) {
        case BandMethod::massart: return "massart";
        case BandMethod::cor2: return "cor2";
        case BandMethod::theorem1_local: return "theorem1";
        case BandMethod::cor1_interval: return "cor1";
        case BandMethod::cor3_adaptive: return "cor3";
    }
    return "?";
}

inline std::optional<BandMethod> band_method_from_string(std::string_view s) {
    if (s == "massart") return BandMethod::massart;
    if (s == "cor2") return BandMethod::cor2;
    if (s == "theorem1") return BandMethod::theorem1_local;
    if (s == "cor1") return BandMethod::cor1_interval;
    if (s == "cor3") return BandMethod::cor3_adaptive;
    return std::nullopt;
}

// A simultaneous lower envelope for F, stored at empirical levels q = k/n so
// that a band is reusable across datasets of the same size; joining knots to
// data coordinates is an output concern.
struct BandKnot {
    double q;
    double lower;      // clamped to [0,1]
    double unclamped;  // kept for diagnostics
};

struct StepBand {
    BandMethod method;
    std::int64_t n;
    std::vector<BandKnot> knots;  // sorted by q, k = 0..n
};

// Constant uniform margin: massart inverts the classical sub-Gaussian bound
// exactly, sqrt(log(1/delta)/(2n)); cor2 inverts the refined tail bound and
// is strictly smaller.
inline double global_margin(std::int64_t n, double delta, BandMethod method,
                            const Tolerances& tol = {}) {
    switch (method) {
        case BandMethod::massart:
            return std::sqrt(rate_budget(n, delta).value() / 2.0);
        case BandMethod::cor2:
            return global_tail_inverse(n, delta, tol) / std::sqrt(static_cast<double>(n));
        default:
            throw validation_error("global_margin requires method massart or cor2");
    }
}

// Supremum over p in [p_min, p_max] of deviation_modulus(p, eps(n, delta)):
// the uniform threshold for an interval with those F-values. No shape
// assumption is made on the modulus; a 4096-interval grid sweep is refined
// by three rounds of trisection around the grid argmax, and the tests pin
// the result against a brute-force grid.
inline double local_threshold(IntervalRange range, std::int64_t n, double delta,
                              const Tolerances& tol = {}) {
    const RateBudget eps = rate_budget(n, delta);
    const double a = range.p_min().value();
    const double b = range.p_max().value();
    auto modulus_at = [&](double p) { return deviation_modulus(Probability(p), eps, tol); };
    if (a == b) return modulus_at(a);

    constexpr int kGrid = 4096;
    double best = -1.0;
    int best_i = 0;
    for (int i = 0; i <= kGrid; ++i) {
        const double p = a + (b - a) * i / kGrid;
        const double v = modulus_at(p);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    double lo = a + (b - a) * std::max(best_i - 1, 0) / kGrid;
    double hi = a + (b - a) * std::min(best_i + 1, kGrid) / kGrid;
    for (int round = 0; round < 3; ++round) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        const double v1 = modulus_at(m1);
        const double v2 = modulus_at(m2);
        best = std::max({best, v1, v2});
        if (v1 < v2) lo = m1; else hi = m2;
    }
    return best;
}

// Band with one constant margin at every empirical level.
inline StepBand band_from_margin(BandMethod method, std::int64_t n, double margin) {
    if (n < 1) throw validation_error("band requires n >= 1");
    StepBand band{method, n, {}};
    band.knots.reserve(static_cast<std::size_t>(n) + 1);
    for (std::int64_t k = 0; k <= n; ++k) {
        const double q = static_cast<double>(k) / static_cast<double>(n);
        const double raw = q - margin;
        band.knots.push_back({q, std::clamp(raw, 0.0, 1.0), raw});
    }
    return band;
}

// Simultaneous adaptive lower confidence band: with probability at least
// 1 - delta, F(t) exceeds the band value at every t. Level k/n gets margin
// max(lower_confidence_margin(k/n, eps_beta), 1/n) before clamping.
inline StepBand band_lower_confidence(std::int64_t n, double delta, double beta) {
    const RateBudget eb = peeled_rate_budget(n, delta, beta);
    const double floor_margin = 1.0 / static_cast<double>(n);
    StepBand band{BandMethod::cor3_adaptive, n, {}};
    band.knots.reserve(static_cast<std::size_t>(n) + 1);
    for (std::int64_t k = 0; k <= n; ++k) {
        const double q = static_cast<double>(k) / static_cast<double>(n);
        const double margin = std::max(lower_confidence_margin(Probability(q), eb, beta),
                                       floor_margin);
        const double raw = q - margin;
        band.knots.push_back({q, std::clamp(raw, 0.0, 1.0), raw});
    }
    return band;
}

inline StepBand band_lower_confidence(const EmpiricalCdf& ecdf, double delta, double beta) {
    return band_lower_confidence(ecdf.size(), delta, beta);
}

}  // namespace dkwm
