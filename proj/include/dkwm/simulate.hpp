#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "dkwm/bands.hpp"
#include "dkwm/bounds.hpp"
#include "dkwm/rng.hpp"
#include "dkwm/types.hpp"

namespace dkwm {

// Exact exceedance probability of the singleton-interval bound:
//   P{ Bin(n,p) > n (p + deviation_modulus(p, eps(n, delta))) },
// summed in log space with long-double terms. The guarantee under test is
// that this never exceeds delta.
inline double binomial_exact_pointwise(std::int64_t n, Probability p, double delta,
                                       const Tolerances& tol = {}) {
    if (n < 1) throw validation_error("binomial_exact_pointwise requires n >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw validation_error("delta must lie in (0,1)");
    const double pv = p.value();
    if (pv == 0.0) return 0.0;  // the count is identically zero
    const double w = deviation_modulus(p, rate_budget(n, delta), tol);
    const double x = static_cast<double>(n) * (pv + w);
    const std::int64_t k_min = static_cast<std::int64_t>(std::floor(x)) + 1;  // strict ">"
    if (k_min > n) return 0.0;

    const long double lp = std::log(static_cast<long double>(pv));
    const long double lq = std::log1p(static_cast<long double>(-pv));
    const long double lgn = std::lgamma(static_cast<long double>(n) + 1.0L);
    long double tail = 0.0L;
    for (std::int64_t k = n; k >= k_min; --k) {  // ascending term size, no cancellation
        const long double lc = lgn - std::lgamma(static_cast<long double>(k) + 1.0L) -
                               std::lgamma(static_cast<long double>(n - k) + 1.0L);
        tail += std::exp(lc + static_cast<long double>(k) * lp +
                         static_cast<long double>(n - k) * lq);
    }
    return static_cast<double>(std::min(tail, 1.0L));
}

struct SimConfig {
    BandMethod method = BandMethod::massart;
    std::int64_t n = 1;
    double delta = 0.1;
    double beta = 1.1;                        // cor3 only
    std::optional<IntervalRange> range;       // theorem1 / cor1 only
    std::int64_t reps = 1;
    std::uint64_t seed = 0;
    int threads = 1;
    Tolerances tol{};
};

struct SimReport {
    std::int64_t reps = 0;
    std::int64_t exceed_count = 0;
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;  // diagnostic only; never part of serialized output
};

namespace detail {

// Fixed-size replicate blocks keep every reduction order identical no matter
// how many workers run: each block is accumulated serially by whichever
// thread claims it, and blocks are combined in index order at the end.
constexpr std::int64_t kSimBlock = 1024;

template <typename PerBlock>
void run_blocks(std::int64_t reps, int threads, PerBlock&& per_block) {
    const std::int64_t n_blocks = (reps + kSimBlock - 1) / kSimBlock;
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::int64_t b = next.fetch_add(1);
            if (b >= n_blocks) break;
            const std::int64_t first = b * kSimBlock;
            const std::int64_t last = std::min(first + kSimBlock, reps);
            per_block(b, first, last);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
}

}  // namespace detail

// Coverage simulation against the uniform distribution. Every implemented
// bound depends on F only through its values at the evaluated points, so
// uniform(0,1) sampling loses no generality for continuous F.
//
// Per replicate the exceedance event is evaluated exactly: for the uniform
// methods the exact sup of Fhat - F against the method's constant or
// interval threshold (strict ">"), and for cor3 the pointwise-anywhere
// violation checked at the n jump points. The report is a pure function of
// (seed, cfg) whatever the thread count.
inline SimReport coverage_sim(const SimConfig& cfg) {
    if (cfg.reps < 1) throw validation_error("reps must be >= 1");
    if (cfg.threads < 1) throw validation_error("threads must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();

    const OracleCdf uniform = OracleCdf::uniform01();
    RealInterval where = RealInterval::whole_line();
    double threshold = 0.0;
    bool pointwise_adaptive = false;
    double adaptive_scale = 0.0;   // beta * sqrt(eps_beta/2)
    double adaptive_floor = 0.0;   // 1/n
    RateBudget eps_adaptive(0.0);

    switch (cfg.method) {
        case BandMethod::massart:
        case BandMethod::cor2:
            threshold = global_margin(cfg.n, cfg.delta, cfg.method, cfg.tol);
            break;
        case BandMethod::theorem1_local:
        case BandMethod::cor1_interval: {
            if (!cfg.range) throw validation_error("interval methods need a range");
            if (cfg.method == BandMethod::theorem1_local) {
                threshold = local_threshold(*cfg.range, cfg.n, cfg.delta, cfg.tol);
            } else {
                const RateBudget eps = rate_budget(cfg.n, cfg.delta);
                threshold = radius_factor_sup(*cfg.range, eps) * std::sqrt(eps.value() / 2.0);
            }
            // Under uniform F the data interval with F-values [p_min, p_max]
            // is [p_min, p_max] itself.
            where = RealInterval::closed(cfg.range->p_min().value(), cfg.range->p_max().value());
            break;
        }
        case BandMethod::cor3_adaptive: {
            eps_adaptive = peeled_rate_budget(cfg.n, cfg.delta, cfg.beta);
            adaptive_scale = cfg.beta * std::sqrt(eps_adaptive.value() / 2.0);
            adaptive_floor = 1.0 / static_cast<double>(cfg.n);
            pointwise_adaptive = true;
            break;
        }
    }

    const std::int64_t n_blocks = (cfg.reps + detail::kSimBlock - 1) / detail::kSimBlock;
    std::vector<std::int64_t> block_counts(static_cast<std::size_t>(n_blocks), 0);

    detail::run_blocks(cfg.reps, cfg.threads, [&](std::int64_t b, std::int64_t first,
                                                  std::int64_t last) {
        std::int64_t count = 0;
        std::vector<double> draws(static_cast<std::size_t>(cfg.n));
        for (std::int64_t r = first; r < last; ++r) {
            CounterRng rng(cfg.seed, static_cast<std::uint64_t>(r));
            for (auto& d : draws) d = rng.next_unit();
            const EmpiricalCdf ecdf(draws);
            bool exceeded;
            if (pointwise_adaptive) {
                exceeded = false;
                for (double x : ecdf.samples()) {
                    const double radius =
                        adaptive_scale * radius_factor(Probability(x), eps_adaptive);
                    const double thr = std::max(radius, adaptive_floor);
                    if (ecdf.eval(x).value() - x > thr) {
                        exceeded = true;
                        break;
                    }
                }
            } else {
                exceeded = sup_deviation(ecdf, uniform, where) > threshold;
            }
            if (exceeded) ++count;
        }
        block_counts[static_cast<std::size_t>(b)] = count;
    });

    std::int64_t exceed = 0;
    for (std::int64_t c : block_counts) exceed += c;

    SimReport report;
    report.reps = cfg.reps;
    report.exceed_count = exceed;
    report.estimate = static_cast<double>(exceed) / static_cast<double>(cfg.reps);
    report.std_error =
        std::sqrt(report.estimate * (1.0 - report.estimate) / static_cast<double>(cfg.reps));
    report.seed = cfg.seed;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

struct MartingaleEstimate {
    double t = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
};

// Monte Carlo check of the unit-mean identity for the tilted process
//   M_lambda(t) = (1 + lambda/F(t))^{n Fhat(t)} / (1+lambda)^n
// under uniform F, where t doubles as F(t). Returns one estimate per t; all
// t values share each replicate's draws. Deterministic in (seed, reps)
// regardless of thread count: per-t sums accumulate within fixed blocks and
// blocks combine in index order.
inline std::vector<MartingaleEstimate> martingale_mean_check(std::int64_t n, double lambda,
                                                             const std::vector<double>& t_values,
                                                             std::int64_t reps,
                                                             std::uint64_t seed,
                                                             int threads = 1) {
    if (n < 1) throw validation_error("martingale_mean_check requires n >= 1");
    if (!(lambda > 0.0)) throw validation_error("lambda must be positive");
    if (reps < 2) throw validation_error("reps must be >= 2");
    if (threads < 1) throw validation_error("threads must be >= 1");
    if (t_values.empty()) throw validation_error("at least one t value is required");
    for (double t : t_values) {
        if (!(t > 0.0 && t <= 1.0)) throw validation_error("t values must lie in (0,1]");
    }

    const std::size_t m = t_values.size();
    std::vector<double> log_gain(m);  // log(1 + lambda/t) per t
    for (std::size_t j = 0; j < m; ++j) log_gain[j] = std::log1p(lambda / t_values[j]);
    const double log_norm = static_cast<double>(n) * std::log1p(lambda);

    const std::int64_t n_blocks = (reps + detail::kSimBlock - 1) / detail::kSimBlock;
    std::vector<std::vector<double>> block_sum(static_cast<std::size_t>(n_blocks),
                                               std::vector<double>(m, 0.0));
    std::vector<std::vector<double>> block_sumsq(static_cast<std::size_t>(n_blocks),
                                                 std::vector<double>(m, 0.0));

    detail::run_blocks(reps, threads, [&](std::int64_t b, std::int64_t first, std::int64_t last) {
        auto& sums = block_sum[static_cast<std::size_t>(b)];
        auto& sumsqs = block_sumsq[static_cast<std::size_t>(b)];
        std::vector<double> draws(static_cast<std::size_t>(n));
        for (std::int64_t r = first; r < last; ++r) {
            CounterRng rng(seed, static_cast<std::uint64_t>(r));
            for (auto& d : draws) d = rng.next_unit();
            for (std::size_t j = 0; j < m; ++j) {
                std::int64_t hits = 0;
                for (double d : draws) hits += (d <= t_values[j]) ? 1 : 0;
                const double value =
                    std::exp(static_cast<double>(hits) * log_gain[j] - log_norm);
                sums[j] += value;
                sumsqs[j] += value * value;
            }
        }
    });

    std::vector<MartingaleEstimate> out(m);
    for (std::size_t j = 0; j < m; ++j) {
        double sum = 0.0;
        double sumsq = 0.0;
        for (std::int64_t b = 0; b < n_blocks; ++b) {
            sum += block_sum[static_cast<std::size_t>(b)][j];
            sumsq += block_sumsq[static_cast<std::size_t>(b)][j];
        }
        const double mean = sum / static_cast<double>(reps);
        const double var = std::max(
            (sumsq - static_cast<double>(reps) * mean * mean) / static_cast<double>(reps - 1),
            0.0);
        out[j] = {t_values[j], mean, std::sqrt(var / static_cast<double>(reps))};
    }
    return out;
}

// For n = 1 under uniform F the exceedance law is closed form:
//   P{ sup (Fhat - F) > x } = 1 - x  for x in [0,1],
// since the sup equals 1 minus the single sample. This checks a constant
// global margin against that law exactly, with no simulation error.
struct N1ExactCheck {
    BandMethod method;
    double delta = 0.0;
    double margin = 0.0;
    double exact_probability = 0.0;
    bool valid = false;  // exact_probability <= delta
};

inline N1ExactCheck n1_exact_check(BandMethod method, double delta, const Tolerances& tol = {}) {
    if (method != BandMethod::massart && method != BandMethod::cor2) {
        throw validation_error("n1_exact_check requires a constant-margin method");
    }
    N1ExactCheck check;
    check.method = method;
    check.delta = delta;
    check.margin = global_margin(1, delta, method, tol);
    check.exact_probability = std::clamp(1.0 - check.margin, 0.0, 1.0);
    check.valid = check.exact_probability <= delta;
    return check;
}

}  // namespace dkwm
