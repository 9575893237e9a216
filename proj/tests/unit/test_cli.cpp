#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fcr/cli.hpp"
#include "json.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    Result r;
    r.code = fcr::cli::run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

fs::path write_series(const fs::path& dir) {
    const auto r = run({"synth-sigma", "--hours", "48", "--seed", "3", "--out", dir.string()});
    REQUIRE(r.code == 0);
    return dir / "hourly_sigma.csv";
}

}  // namespace

TEST_CASE("stationary report") {
    const auto dir = oracle::temp_dir("cli_stationary");
    const auto r = run({"stationary", "--rn", "0.6", "--xd", "1.45", "--sigma", "0.04", "--out", dir.string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(oracle::slurp(dir / "stationary.json"));
    REQUIRE(j["p"].size() == 6);
    CHECK(j["p"][1].get<double>() == doctest::Approx(0.00708783668038).epsilon(1e-10));
    CHECK(j["two_p2"].get<double>() == doctest::Approx(0.0141756733608).epsilon(1e-10));
    CHECK(j["minutes_per_year_outside"].get<double>() == doctest::Approx(7450.73).epsilon(1e-5));
    CHECK(r.out.find("stationary.json") != std::string::npos);
}

TEST_CASE("static evaluation spends H * r_bar") {
    const auto dir = oracle::temp_dir("cli_static");
    const auto series = write_series(dir);
    const auto r = run({"evaluate-policy", "--sigma-series", series.string(), "--policy", "static", "--out",
                        dir.string()});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(oracle::slurp(dir / "evaluation_static.json"));
    CHECK(j["total_budget_gwh"].get<double>() == doctest::Approx(48 * 0.6).epsilon(1e-12));
    CHECK(fs::exists(dir / "per_hour_static.csv"));
    CHECK(fs::exists(dir / "segment_share_static.csv"));
}

TEST_CASE("unknown flag exits 2 and writes nothing") {
    const auto dir = oracle::temp_dir("cli_badflag");
    const auto r = run({"stationary", "--rn", "0.6", "--bogus", "1", "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("--sigma") != std::string::npos);  // usage text
    CHECK(r.err.find(R"("kind":"argument")") != std::string::npos);
    CHECK(fs::is_empty(dir));
    CHECK(run({}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("data and numerical failures map to exit codes") {
    const auto dir = oracle::temp_dir("cli_errors");
    {
        std::ofstream bad(dir / "bad.csv");
        bad << "time,value\n1,50\n";
    }
    const auto d = run({"calibrate", "--input", (dir / "bad.csv").string(), "--out", (dir / "o1").string()});
    CHECK(d.code == 3);
    CHECK(d.err.find(R"("kind":"data")") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "o1" / "hourly_sigma.csv"));

    const auto n = run({"stationary", "--rn", "0", "--xd", "0", "--sigma", "0.04", "--out", (dir / "o2").string()});
    CHECK(n.code == 4);
    CHECK(n.err.find(R"("kind":"numerical")") != std::string::npos);

    // sigma <= 0 is a degenerate parameter, reported with the numerical class.
    CHECK(run({"stationary", "--rn", "0.6", "--xd", "1.45", "--sigma", "-1", "--out", dir.string()}).code == 4);
    CHECK(run({"stationary", "--rn", "0.6", "--xd", "1.45", "--sigma", "abc", "--out", dir.string()}).code == 2);
    CHECK(run({"simulate", "--rn", "0.6", "--xd", "1.45", "--sigma", "0.04", "--steps", "10", "--out",
               (dir / "o3").string()})
              .code == 3);
}

TEST_CASE("output directory from the environment") {
    const auto dir = oracle::temp_dir("cli_env");
    ::setenv(fcr::cli::kOutDirEnv, dir.string().c_str(), 1);
    const auto r = run({"stationary", "--rn", "0.6", "--xd", "1.45", "--sigma", "0.04"});
    ::unsetenv(fcr::cli::kOutDirEnv);
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "stationary.json"));
}

TEST_CASE("help exits 0") {
    const auto r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("dimension-static") != std::string::npos);
    CHECK(run({"solve-gamma", "--help"}).code == 0);
}

TEST_CASE("repeated runs are byte-identical") {
    const auto a = oracle::temp_dir("cli_repro_a");
    const auto b = oracle::temp_dir("cli_repro_b");
    for (const auto& dir : {a, b}) {
        const auto series = write_series(dir);
        REQUIRE(run({"compare", "--sigma-series", series.string(), "--policy", "step", "--out", dir.string()}).code ==
                0);
        REQUIRE(run({"simulate", "--rn", "0.6", "--xd", "1.45", "--sigma", "0.04", "--steps", "20000", "--burn-in", "100",
                     "--seed", "4", "--out", dir.string()})
                    .code == 0);
        REQUIRE(run({"dimension-static", "--sigmas", "0.04,0.08", "--out", dir.string()}).code == 0);
    }
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        ++files;
        CAPTURE(e.path().filename().string());
        CHECK(oracle::slurp(e.path()) == oracle::slurp(b / e.path().filename()));
    }
    CHECK(files >= 6);
    CHECK(oracle::slurp(a / "required_rn.csv").rfind("sigma,target,required_rn_gw\n0.04,0.02,0.531", 0) == 0);
}
