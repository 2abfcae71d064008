// Command-line front door: kl | omega | band | simulate.
//
// Exit codes: 0 ok, 2 validation, 3 I/O, 4 numeric failure. All randomized
// commands take an explicit --seed and print nothing nondeterministic, so
// any published number can be reproduced byte for byte.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dkwm/dkwm.hpp"

namespace {

using dkwm::BandMethod;

dkwm::Probability parse_probability(double v, const std::string& name) {
    try {
        return dkwm::Probability(v);
    } catch (const dkwm::validation_error&) {
        throw dkwm::validation_error(name + " must lie in [0,1], got " + std::to_string(v));
    }
}

BandMethod parse_method(const std::string& s) {
    const auto m = dkwm::band_method_from_string(s);
    if (!m) throw dkwm::validation_error("unknown method '" + s + "'");
    return *m;
}

void emit(const std::string& text, const std::string& output_path) {
    if (output_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(output_path);
    if (!out) throw dkwm::io_error("cannot open '" + output_path + "' for writing");
    out << text;
    if (!out) throw dkwm::io_error("failed writing '" + output_path + "'");
}

std::string g17(double v) { return dkwm::format_g17(v); }

// --- JSON rendering -------------------------------------------------------
// The knot schema is {"q", "lower", "unclamped"?}; numbers carry 17
// significant digits so parsing the output reproduces every double exactly.

void append_knots_json(std::ostringstream& out, const dkwm::StepBand& band, bool verbose) {
    out << "  \"knots\": [";
    for (std::size_t k = 0; k < band.knots.size(); ++k) {
        const auto& knot = band.knots[k];
        if (k) out << ",";
        out << "\n    {\"q\": " << g17(knot.q) << ", \"lower\": " << g17(knot.lower);
        if (verbose) out << ", \"unclamped\": " << g17(knot.unclamped);
        out << "}";
    }
    out << (band.knots.empty() ? "]" : "\n  ]");
}

std::string band_json(BandMethod method, std::int64_t n, double delta,
                      std::optional<double> beta, const dkwm::StepBand* band,
                      std::optional<double> margin, bool verbose) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"method\": \"" << dkwm::to_string(method) << "\",\n";
    out << "  \"n\": " << n << ",\n";
    out << "  \"delta\": " << g17(delta) << ",\n";
    if (beta) out << "  \"beta\": " << g17(*beta) << ",\n";
    if (band) {
        append_knots_json(out, *band, verbose);
    } else {
        out << "  \"knots\": []";
    }
    if (margin) out << ",\n  \"margin\": " << g17(*margin);
    out << "\n}\n";
    return out.str();
}

// --- kl -------------------------------------------------------------------

int run_kl(double a, double b) {
    const dkwm::KlValue v =
        dkwm::kl_bernoulli(parse_probability(a, "a"), parse_probability(b, "b"));
    std::cout << g17(v.value()) << "\n";
    return 0;
}

// --- omega ----------------------------------------------------------------

int run_omega(double p, std::optional<double> eps, std::optional<std::int64_t> n,
              std::optional<double> delta, double tol_eta) {
    dkwm::Tolerances tol;
    tol.modulus_eta = tol_eta;
    dkwm::RateBudget budget(0.0);
    if (eps) {
        if (n || delta) {
            throw dkwm::validation_error("give either a positional eps or --n/--delta, not both");
        }
        if (!(*eps >= 0.0)) throw dkwm::validation_error("eps must be nonnegative");
        budget = dkwm::RateBudget(*eps);
    } else {
        if (!n || !delta) {
            throw dkwm::validation_error("omega needs either a positional eps or both --n and --delta");
        }
        budget = dkwm::rate_budget(*n, *delta);
    }
    std::cout << g17(dkwm::deviation_modulus(parse_probability(p, "p"), budget, tol)) << "\n";
    return 0;
}

// --- band -----------------------------------------------------------------

struct BandRequest {
    std::string method_name;
    double delta = 0.0;
    std::optional<std::int64_t> n;
    std::optional<double> beta;
    std::optional<double> pmin, pmax;
    bool plugin = false;
    std::optional<double> tmin, tmax;
    std::string data_path;
    std::string format = "json";
    std::string output;
    bool verbose = false;
    double tol_eta = 1e-12;
};

int run_band(const BandRequest& req) {
    const BandMethod method = parse_method(req.method_name);
    dkwm::Tolerances tol;
    tol.modulus_eta = req.tol_eta;

    std::optional<dkwm::EmpiricalCdf> data;
    if (!req.data_path.empty()) {
        auto samples = dkwm::read_samples_file(req.data_path);
        if (samples.empty()) throw dkwm::io_error(req.data_path + ": no samples");
        data.emplace(std::move(samples));
    }
    std::int64_t n = 0;
    if (data) {
        n = data->size();
        if (req.n && *req.n != n) {
            throw dkwm::validation_error("--n disagrees with the data size");
        }
    } else if (req.n) {
        n = *req.n;
    } else {
        throw dkwm::validation_error("band needs a data file or --n");
    }

    std::optional<double> margin;
    std::optional<dkwm::StepBand> band;
    std::optional<double> beta_used;

    switch (method) {
        case BandMethod::massart:
        case BandMethod::cor2: {
            margin = dkwm::global_margin(n, req.delta, method, tol);
            if (data) band = dkwm::band_from_margin(method, n, *margin);
            break;
        }
        case BandMethod::theorem1_local:
        case BandMethod::cor1_interval: {
            dkwm::Probability lo(0.0), hi(1.0);
            if (req.plugin) {
                // Plug-in range: the F-values at the ends of a data-coordinate
                // interval are estimated by the empirical cdf. The guarantee
                // is stated for the true F-range; this estimate is a
                // heuristic, hence the explicit opt-in flag.
                if (!data || !req.tmin || !req.tmax) {
                    throw dkwm::validation_error("--plugin needs a data file, --tmin and --tmax");
                }
                lo = data->eval(*req.tmin);
                hi = data->eval(*req.tmax);
            } else {
                if (!req.pmin || !req.pmax) {
                    throw dkwm::validation_error("interval methods need --pmin and --pmax (or --plugin)");
                }
                lo = parse_probability(*req.pmin, "pmin");
                hi = parse_probability(*req.pmax, "pmax");
            }
            const dkwm::IntervalRange range(lo, hi);
            if (method == BandMethod::theorem1_local) {
                margin = dkwm::local_threshold(range, n, req.delta, tol);
            } else {
                const dkwm::RateBudget eps = dkwm::rate_budget(n, req.delta);
                margin = dkwm::radius_factor_sup(range, eps) * std::sqrt(eps.value() / 2.0);
            }
            if (data) band = dkwm::band_from_margin(method, n, *margin);
            break;
        }
        case BandMethod::cor3_adaptive: {
            const double beta = req.beta.value_or(0.0);
            if (!req.beta) throw dkwm::validation_error("cor3 needs --beta");
            band = dkwm::band_lower_confidence(n, req.delta, beta);
            beta_used = beta;
            break;
        }
    }

    if (req.format == "json") {
        emit(band_json(method, n, req.delta, beta_used, band ? &*band : nullptr, margin,
                       req.verbose),
             req.output);
    } else if (req.format == "csv") {
        std::ostringstream out;
        if (band) {
            dkwm::write_band_csv(out, *band, req.verbose, data ? &data->samples() : nullptr);
        } else {
            out << "margin\n" << g17(*margin) << "\n";
        }
        emit(out.str(), req.output);
    } else {
        throw dkwm::validation_error("unknown format '" + req.format + "'");
    }
    return 0;
}

// --- simulate ---------------------------------------------------------------

struct SimulateRequest {
    std::string method_name;
    std::string check;
    std::optional<std::int64_t> n;
    double delta = 0.1;
    std::optional<double> beta;
    std::optional<double> pmin, pmax;
    double lambda = 0.0;
    std::vector<double> t_values;
    std::int64_t reps = 0;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string format = "json";
    std::string output;
};

std::string coverage_json(const dkwm::SimConfig& cfg, const dkwm::SimReport& rep) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"method\": \"" << dkwm::to_string(cfg.method) << "\",\n";
    out << "  \"n\": " << cfg.n << ",\n";
    out << "  \"delta\": " << g17(cfg.delta) << ",\n";
    if (cfg.method == BandMethod::cor3_adaptive) out << "  \"beta\": " << g17(cfg.beta) << ",\n";
    if (cfg.range) {
        out << "  \"pmin\": " << g17(cfg.range->p_min().value()) << ",\n";
        out << "  \"pmax\": " << g17(cfg.range->p_max().value()) << ",\n";
    }
    out << "  \"reps\": " << rep.reps << ",\n";
    out << "  \"exceed_count\": " << rep.exceed_count << ",\n";
    out << "  \"estimate\": " << g17(rep.estimate) << ",\n";
    out << "  \"stderr\": " << g17(rep.std_error) << ",\n";
    out << "  \"seed\": " << rep.seed << "\n";
    out << "}\n";
    return out.str();
}

int run_simulate(const SimulateRequest& req) {
    if (!req.check.empty() && !req.method_name.empty() && req.check != "n1") {
        throw dkwm::validation_error("give either --method or --check");
    }

    std::string text;
    if (req.check == "martingale") {
        if (!req.n) throw dkwm::validation_error("martingale check needs --n");
        if (!(req.lambda > 0.0)) throw dkwm::validation_error("martingale check needs --lambda > 0");
        if (req.t_values.empty()) throw dkwm::validation_error("martingale check needs --t");
        if (!req.seed) throw dkwm::validation_error("randomized commands need an explicit --seed");
        const auto results = dkwm::martingale_mean_check(*req.n, req.lambda, req.t_values,
                                                         req.reps, *req.seed, req.threads);
        if (req.format == "json") {
            std::ostringstream out;
            out << "{\n  \"check\": \"martingale\",\n";
            out << "  \"n\": " << *req.n << ",\n";
            out << "  \"lambda\": " << g17(req.lambda) << ",\n";
            out << "  \"reps\": " << req.reps << ",\n";
            out << "  \"seed\": " << *req.seed << ",\n";
            out << "  \"results\": [";
            for (std::size_t i = 0; i < results.size(); ++i) {
                if (i) out << ",";
                out << "\n    {\"t\": " << g17(results[i].t)
                    << ", \"estimate\": " << g17(results[i].estimate)
                    << ", \"stderr\": " << g17(results[i].std_error) << "}";
            }
            out << "\n  ]\n}\n";
            text = out.str();
        } else if (req.format == "csv") {
            std::ostringstream out;
            out << "t,estimate,stderr\n";
            for (const auto& r : results) {
                out << g17(r.t) << "," << g17(r.estimate) << "," << g17(r.std_error) << "\n";
            }
            text = out.str();
        } else {
            throw dkwm::validation_error("unknown format '" + req.format + "'");
        }
    } else if (req.check == "n1") {
        if (req.method_name.empty()) throw dkwm::validation_error("n1 check needs --method");
        const auto check = dkwm::n1_exact_check(parse_method(req.method_name), req.delta);
        if (req.format == "json") {
            std::ostringstream out;
            out << "{\n  \"check\": \"n1\",\n";
            out << "  \"method\": \"" << dkwm::to_string(check.method) << "\",\n";
            out << "  \"delta\": " << g17(check.delta) << ",\n";
            out << "  \"margin\": " << g17(check.margin) << ",\n";
            out << "  \"exact_probability\": " << g17(check.exact_probability) << ",\n";
            out << "  \"valid\": " << (check.valid ? "true" : "false") << "\n}\n";
            text = out.str();
        } else if (req.format == "csv") {
            std::ostringstream out;
            out << "method,delta,margin,exact_probability,valid\n";
            out << dkwm::to_string(check.method) << "," << g17(check.delta) << ","
                << g17(check.margin) << "," << g17(check.exact_probability) << ","
                << (check.valid ? "true" : "false") << "\n";
            text = out.str();
        } else {
            throw dkwm::validation_error("unknown format '" + req.format + "'");
        }
    } else if (!req.method_name.empty()) {
        if (!req.n) throw dkwm::validation_error("simulate needs --n");
        if (!req.seed) throw dkwm::validation_error("randomized commands need an explicit --seed");
        dkwm::SimConfig cfg;
        cfg.method = parse_method(req.method_name);
        cfg.n = *req.n;
        cfg.delta = req.delta;
        cfg.reps = req.reps;
        cfg.seed = *req.seed;
        cfg.threads = req.threads;
        if (cfg.method == BandMethod::cor3_adaptive) {
            if (!req.beta) throw dkwm::validation_error("cor3 needs --beta");
            cfg.beta = *req.beta;
        }
        if (cfg.method == BandMethod::theorem1_local ||
            cfg.method == BandMethod::cor1_interval) {
            if (!req.pmin || !req.pmax) {
                throw dkwm::validation_error("interval methods need --pmin and --pmax");
            }
            cfg.range.emplace(parse_probability(*req.pmin, "pmin"),
                              parse_probability(*req.pmax, "pmax"));
        }
        const dkwm::SimReport rep = dkwm::coverage_sim(cfg);
        if (req.format == "json") {
            text = coverage_json(cfg, rep);
        } else if (req.format == "csv") {
            std::ostringstream out;
            out << "method,n,delta,reps,exceed_count,estimate,stderr,seed\n";
            out << dkwm::to_string(cfg.method) << "," << cfg.n << "," << g17(cfg.delta) << ","
                << rep.reps << "," << rep.exceed_count << "," << g17(rep.estimate) << ","
                << g17(rep.std_error) << "," << rep.seed << "\n";
            text = out.str();
        } else {
            throw dkwm::validation_error("unknown format '" + req.format + "'");
        }
    } else {
        throw dkwm::validation_error("simulate needs --method or --check");
    }

    emit(text, req.output);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tight one-sided confidence bounds for empirical distribution functions"};
    app.require_subcommand(1);

    // kl
    double kl_a = 0.0, kl_b = 0.0;
    auto* kl_cmd = app.add_subcommand("kl", "Bernoulli KL divergence kl(a||b)");
    kl_cmd->add_option("a", kl_a, "first success probability")->required();
    kl_cmd->add_option("b", kl_b, "second success probability")->required();

    // omega
    double om_p = 0.0;
    std::optional<double> om_eps;
    std::optional<std::int64_t> om_n;
    std::optional<double> om_delta;
    double om_tol = 1e-12;
    auto* om_cmd = app.add_subcommand(
        "omega", "Largest deviation eta with kl(p+eta||p) <= eps");
    om_cmd->add_option("p", om_p, "distribution-function value")->required();
    om_cmd->add_option("eps", om_eps, "rate budget (or use --n/--delta)");
    om_cmd->add_option("--n", om_n, "sample size, for eps = log(1/delta)/n");
    om_cmd->add_option("--delta", om_delta, "failure probability in (0,1)");
    om_cmd->add_option("--tol", om_tol, "bisection tolerance on eta (default 1e-12)");

    // band
    BandRequest band_req;
    auto* band_cmd = app.add_subcommand("band", "Confidence band or uniform margin");
    band_cmd->add_option("--method", band_req.method_name,
                         "massart | cor2 | theorem1 | cor1 | cor3")->required();
    band_cmd->add_option("--delta", band_req.delta, "failure probability in (0,1)")->required();
    band_cmd->add_option("--n", band_req.n, "sample size (when no data file is given)");
    band_cmd->add_option("--beta", band_req.beta, "peeling ratio > 1 (cor3)");
    band_cmd->add_option("--pmin", band_req.pmin, "smallest F value on the interval");
    band_cmd->add_option("--pmax", band_req.pmax, "largest F value on the interval");
    band_cmd->add_flag("--plugin", band_req.plugin,
                       "estimate --pmin/--pmax from the data between --tmin and --tmax; "
                       "the guarantee covers the true F-range, so this is a heuristic");
    band_cmd->add_option("--tmin", band_req.tmin, "left end of the data interval (--plugin)");
    band_cmd->add_option("--tmax", band_req.tmax, "right end of the data interval (--plugin)");
    band_cmd->add_option("--format", band_req.format, "json | csv (default json)");
    band_cmd->add_option("--output", band_req.output, "output path (default stdout)");
    band_cmd->add_flag("--verbose", band_req.verbose, "include unclamped band values");
    band_cmd->add_option("--tol", band_req.tol_eta, "bisection tolerance on eta");
    band_cmd->add_option("data", band_req.data_path, "CSV of samples, one value per line");

    // simulate
    SimulateRequest sim_req;
    auto* sim_cmd = app.add_subcommand("simulate", "Coverage and identity checks");
    sim_cmd->add_option("--method", sim_req.method_name,
                        "coverage of massart | cor2 | theorem1 | cor1 | cor3");
    sim_cmd->add_option("--check", sim_req.check, "martingale | n1");
    sim_cmd->add_option("--n", sim_req.n, "sample size per replicate");
    sim_cmd->add_option("--delta", sim_req.delta, "failure probability in (0,1)");
    sim_cmd->add_option("--beta", sim_req.beta, "peeling ratio > 1 (cor3)");
    sim_cmd->add_option("--pmin", sim_req.pmin, "smallest F value on the interval");
    sim_cmd->add_option("--pmax", sim_req.pmax, "largest F value on the interval");
    sim_cmd->add_option("--lambda", sim_req.lambda, "tilt parameter (martingale check)");
    sim_cmd->add_option("--t", sim_req.t_values, "evaluation point(s) in (0,1] (martingale check)");
    sim_cmd->add_option("--reps", sim_req.reps, "number of replicates");
    sim_cmd->add_option("--seed", sim_req.seed, "RNG seed (required for randomized runs)");
    sim_cmd->add_option("--threads", sim_req.threads, "worker threads (default 1)");
    sim_cmd->add_option("--format", sim_req.format, "json | csv (default json)");
    sim_cmd->add_option("--output", sim_req.output, "output path (default stdout)");

    try {
        app.parse(argc, argv);
        if (app.got_subcommand(kl_cmd)) return run_kl(kl_a, kl_b);
        if (app.got_subcommand(om_cmd)) return run_omega(om_p, om_eps, om_n, om_delta, om_tol);
        if (app.got_subcommand(band_cmd)) return run_band(band_req);
        if (app.got_subcommand(sim_cmd)) return run_simulate(sim_req);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const dkwm::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const dkwm::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const dkwm::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
