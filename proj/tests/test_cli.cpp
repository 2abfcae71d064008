#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dkwm/dkwm.hpp"

namespace {

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string tag = std::to_string(++counter);
    const std::string out_path = "/tmp/dkwm_cli_out_" + tag;
    const std::string err_path = "/tmp/dkwm_cli_err_" + tag;
    const std::string cmd =
        std::string(DKWM_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
    const int raw = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WEXITSTATUS(raw);
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    std::remove(out_path.c_str());
    std::remove(err_path.c_str());
    return result;
}

double parse_scalar(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

std::string write_temp_csv(const std::vector<double>& values) {
    static int counter = 0;
    const std::string path = "/tmp/dkwm_cli_data_" + std::to_string(++counter) + ".csv";
    std::ofstream out(path);
    out << "value\n";
    for (double v : values) out << dkwm::format_g17(v) << "\n";
    return path;
}

}  // namespace

TEST_CASE("cli kl") {
    const CliResult zero = run_cli("kl 0.5 0.5");
    CHECK(zero.exit_code == 0);
    CHECK(zero.out == "0\n");

    const CliResult inf = run_cli("kl 0.3 0");
    CHECK(inf.exit_code == 0);
    CHECK(inf.out == "inf\n");

    const CliResult bad = run_cli("kl 1.5 0.5");
    CHECK(bad.exit_code == 2);
    CHECK(bad.err.find("a") != std::string::npos);

    const CliResult value = run_cli("kl 0.6 0.5");
    CHECK_THAT(parse_scalar(value.out),
               Catch::Matchers::WithinAbs(0.020135513550688873, 1e-16));
}

TEST_CASE("cli omega") {
    CHECK(run_cli("omega 0 5").out == "0\n");

    const CliResult branch = run_cli("omega 0.9 0.2");
    CHECK_THAT(parse_scalar(branch.out), Catch::Matchers::WithinAbs(0.1, 1e-15));

    const CliResult solved = run_cli("omega 0.25 --n 100 --delta 0.1");
    const double expected = dkwm::deviation_modulus(dkwm::Probability(0.25),
                                                    dkwm::rate_budget(100, 0.1));
    CHECK(parse_scalar(solved.out) == expected);

    CHECK(run_cli("omega 0.25").exit_code == 2);
    CHECK(run_cli("omega 0.25 0.1 --n 100 --delta 0.1").exit_code == 2);
    CHECK(run_cli("omega 2 1").exit_code == 2);
}

TEST_CASE("cli band margin mode") {
    const CliResult massart = run_cli("band --method massart --n 100 --delta 0.05");
    REQUIRE(massart.exit_code == 0);
    const auto doc = nlohmann::json::parse(massart.out);
    CHECK(doc.at("method") == "massart");
    CHECK(doc.at("n") == 100);
    CHECK(doc.at("knots").empty());
    CHECK_THAT(doc.at("margin").get<double>(),
               Catch::Matchers::WithinAbs(std::sqrt(std::log(20.0) / 200.0), 1e-15));

    const CliResult local =
        run_cli("band --method theorem1 --pmin 0 --pmax 0.25 --n 100 --delta 0.1");
    REQUIRE(local.exit_code == 0);
    const auto ldoc = nlohmann::json::parse(local.out);
    const double expected = dkwm::local_threshold(
        dkwm::IntervalRange(dkwm::Probability(0.0), dkwm::Probability(0.25)), 100, 0.1);
    CHECK(ldoc.at("margin").get<double>() == expected);

    CHECK(run_cli("band --method theorem1 --n 100 --delta 0.1").exit_code == 2);
    CHECK(run_cli("band --method massart --delta 0.05").exit_code == 2);
}

TEST_CASE("cli band with data emits n+1 knots") {
    const std::string data = write_temp_csv({0.12, 0.5, 0.77, 0.93});
    const CliResult res = run_cli("band --method cor3 --delta 0.1 --beta 1.1 " + data);
    REQUIRE(res.exit_code == 0);
    const auto doc = nlohmann::json::parse(res.out);
    CHECK(doc.at("method") == "cor3");
    CHECK(doc.at("beta").get<double>() == 1.1);
    REQUIRE(doc.at("knots").size() == 5);
    const dkwm::StepBand expected = dkwm::band_lower_confidence(4, 0.1, 1.1);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(doc.at("knots")[k].at("q").get<double>() == expected.knots[k].q);
        CHECK(doc.at("knots")[k].at("lower").get<double>() == expected.knots[k].lower);
    }
    std::remove(data.c_str());
}

TEST_CASE("cli band csv output round trips and joins data coordinates") {
    const std::string data = write_temp_csv({0.9, 0.1, 0.5});
    const std::string out_path = "/tmp/dkwm_band_roundtrip.csv";
    const CliResult res = run_cli("band --method massart --delta 0.1 --format csv --output " +
                                  out_path + " " + data);
    REQUIRE(res.exit_code == 0);
    std::ifstream in(out_path);
    const auto knots = dkwm::read_band_knots_csv(in, out_path);
    const dkwm::StepBand expected =
        dkwm::band_from_margin(dkwm::BandMethod::massart, 3,
                               dkwm::global_margin(3, 0.1, dkwm::BandMethod::massart));
    REQUIRE(knots.size() == expected.knots.size());
    for (std::size_t k = 0; k < knots.size(); ++k) {
        CHECK(knots[k].q == expected.knots[k].q);
        CHECK(knots[k].lower == expected.knots[k].lower);
    }
    // The t column is the sorted data joined to levels 1..n.
    const std::string text = slurp(out_path);
    CHECK(text.find(",t\n") != std::string::npos);
    CHECK(text.find("0.10000000000000001") != std::string::npos);
    std::remove(out_path.c_str());
    std::remove(data.c_str());
}

TEST_CASE("cli simulate coverage and determinism") {
    const std::string flags =
        "simulate --method massart --n 50 --delta 0.2 --reps 4000 --seed 42";
    const CliResult first = run_cli(flags);
    REQUIRE(first.exit_code == 0);
    const auto doc = nlohmann::json::parse(first.out);
    CHECK(doc.at("reps") == 4000);
    CHECK(doc.at("seed") == 42);
    const double est = doc.at("estimate").get<double>();
    const double se = doc.at("stderr").get<double>();
    CHECK(est <= 0.2 + 3.0 * se);

    // Byte-identical on repeat and under parallel execution.
    const CliResult second = run_cli(flags);
    CHECK(second.out == first.out);
    const CliResult parallel = run_cli(flags + " --threads 4");
    CHECK(parallel.out == first.out);

    // A randomized run without --seed is a validation error.
    CHECK(run_cli("simulate --method massart --n 50 --delta 0.2 --reps 100").exit_code == 2);
}

TEST_CASE("cli simulate checks") {
    const CliResult mart = run_cli(
        "simulate --check martingale --n 5 --lambda 1 --t 0.5 --reps 20000 --seed 7");
    REQUIRE(mart.exit_code == 0);
    const auto mdoc = nlohmann::json::parse(mart.out);
    REQUIRE(mdoc.at("results").size() == 1);
    const double est = mdoc.at("results")[0].at("estimate").get<double>();
    const double se = mdoc.at("results")[0].at("stderr").get<double>();
    CHECK(std::abs(est - 1.0) <= 4.0 * se);

    const CliResult n1 = run_cli("simulate --check n1 --method massart --delta 0.3");
    REQUIRE(n1.exit_code == 0);
    const auto ndoc = nlohmann::json::parse(n1.out);
    CHECK_THAT(ndoc.at("margin").get<double>(),
               Catch::Matchers::WithinAbs(0.77587782682776030, 1e-15));
    CHECK_THAT(ndoc.at("exact_probability").get<double>(),
               Catch::Matchers::WithinAbs(0.22412217317223970, 1e-15));
    CHECK(ndoc.at("valid") == true);
}

TEST_CASE("cli exit codes and help") {
    // Unknown flags are errors, never ignored.
    CHECK(run_cli("band --method massart --n 10 --delta 0.1 --bogus").exit_code == 2);
    CHECK(run_cli("nonsense").exit_code == 2);

    // Missing input file is an I/O error.
    CHECK(run_cli("band --method massart --delta 0.1 /nonexistent.csv").exit_code == 3);

    // Every command lists its flags under --help.
    for (const std::string cmd : {"kl", "omega", "band", "simulate"}) {
        const CliResult help = run_cli(cmd + " --help");
        CHECK(help.exit_code == 0);
        CHECK(!help.out.empty());
    }
    const CliResult band_help = run_cli("band --help");
    for (const std::string flag : {"--method", "--delta", "--n", "--beta", "--pmin", "--pmax",
                                   "--format", "--output", "--plugin"}) {
        CHECK(band_help.out.find(flag) != std::string::npos);
    }
    const CliResult sim_help = run_cli("simulate --help");
    for (const std::string flag : {"--method", "--check", "--reps", "--seed", "--threads",
                                   "--lambda", "--t"}) {
        CHECK(sim_help.out.find(flag) != std::string::npos);
    }
}

TEST_CASE("cli plugin range estimation") {
    const std::string data = write_temp_csv({0.05, 0.1, 0.2, 0.3, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95});
    const CliResult res = run_cli("band --method theorem1 --delta 0.1 --plugin --tmin 0.25 "
                                  "--tmax 0.65 " + data);
    REQUIRE(res.exit_code == 0);
    const auto doc = nlohmann::json::parse(res.out);
    // Fhat(0.25) = 0.4 and Fhat(0.65) = 0.5 on this sample.
    const double expected = dkwm::local_threshold(
        dkwm::IntervalRange(dkwm::Probability(0.4), dkwm::Probability(0.5)), 10, 0.1);
    CHECK(doc.at("margin").get<double>() == expected);
    CHECK(run_cli("band --method theorem1 --delta 0.1 --plugin " + data).exit_code == 2);
    std::remove(data.c_str());
}
