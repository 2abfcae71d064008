#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace dkwm {

// An argument failed its domain check. Maps to CLI exit code 2.
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An iterative scheme could not deliver its contract, e.g. a bracket
// expansion hit its cap. Maps to CLI exit code 4.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A probability in [0,1]. NaN and out-of-range values are construction
// errors; they never propagate into the numerics.
class Probability {
public:
    explicit Probability(double v) : v_(v) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw validation_error("probability must lie in [0,1], got " +
                                   std::to_string(v));
        }
    }
    double value() const { return v_; }

    friend auto operator<=>(Probability a, Probability b) { return a.v_ <=> b.v_; }
    friend bool operator==(Probability a, Probability b) { return a.v_ == b.v_; }

private:
    double v_;
};

// An extended nonnegative real: finite or +infinity, never NaN or negative.
class KlValue {
public:
    explicit KlValue(double v) : v_(v) {
        if (std::isnan(v) || v < 0.0) {
            throw validation_error("divergence value must be nonnegative, got " +
                                   std::to_string(v));
        }
    }
    static KlValue infinity() { return KlValue(std::numeric_limits<double>::infinity()); }

    double value() const { return v_; }
    bool is_infinite() const { return std::isinf(v_); }

    friend auto operator<=>(KlValue a, KlValue b) { return a.v_ <=> b.v_; }
    friend bool operator==(KlValue a, KlValue b) { return a.v_ == b.v_; }

private:
    double v_;
};

// Per-sample log-likelihood budget; a finite nonnegative rate.
class RateBudget {
public:
    explicit RateBudget(double eps) : eps_(eps) {
        if (!(eps >= 0.0) || std::isinf(eps)) {
            throw validation_error("rate budget must be finite and nonnegative, got " +
                                   std::to_string(eps));
        }
    }
    double value() const { return eps_; }

private:
    double eps_;
};

// A closed range [p_min, p_max] of distribution-function values.
class IntervalRange {
public:
    IntervalRange(Probability p_min, Probability p_max) : p_min_(p_min), p_max_(p_max) {
        if (p_min.value() > p_max.value()) {
            throw validation_error("interval range requires p_min <= p_max");
        }
    }
    Probability p_min() const { return p_min_; }
    Probability p_max() const { return p_max_; }
    bool degenerate() const { return p_min_ == p_max_; }

private:
    Probability p_min_;
    Probability p_max_;
};

// Every solver tolerance in one place. Passed by value where behaviour may
// need per-call overrides; never global mutable state.
struct Tolerances {
    // Bisection width on eta when inverting the divergence.
    double modulus_eta = 1e-12;
    int modulus_max_iter = 200;

    // Root bracketing for the optimal tilt: [1e-8, 1] doubled upward, with a
    // 2^64-scale cap on the expansion.
    double tilt_lo = 1e-8;
    int tilt_max_doublings = 64;
    double tilt_rel = 1e-13;
    double tilt_abs = 1e-15;

    // Bisection width on the saddle-point level.
    double saddle_p = 1e-12;

    // Bisection width on xi when inverting the global tail bound.
    double threshold_xi = 1e-12;

    int root_max_iter = 200;
};

}  // namespace dkwm
