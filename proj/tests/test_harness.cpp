#include <cmath>
#include <sstream>
#include <string>

#include "doctest.h"
#include "sumfree/errors.hpp"
#include "sumfree/harness.hpp"
#include "sumfree/trajectory.hpp"

using namespace sumfree;

TEST_CASE("shortest round-trip formatting") {
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.1) == "0.1");
    CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
}

TEST_CASE("summary statistics and slope") {
    auto s = summarize({1, 2, 3, 4});
    CHECK(s.mean == 2.5);
    CHECK(s.min == 1);
    CHECK(s.max == 4);
    CHECK(s.sd == doctest::Approx(std::sqrt(5.0 / 3)));
    CHECK(least_squares_slope({0, 1, 2, 3}, {1, 3, 5, 7}) == doctest::Approx(2));
    CHECK_THROWS_AS(least_squares_slope({1}, {1}), InvalidParams);
}

TEST_CASE("trajectory csv") {
    RingContext ctx(8);
    auto st = ProcessState::init(ctx, 1, Mode::FullLedger);
    const auto rec = run(st, RunOptions{});
    std::ostringstream out;
    write_trajectory_csv(out, rec);
    std::istringstream in(out.str());
    std::string header, row0;
    std::getline(in, header);
    std::getline(in, row0);
    CHECK(header == "step,t,Q,E2,E3,D2R0,D3R0,D1R0,pairs_distinct,maxD1_nonzero,devQ,devE2,devE3");
    CHECK(row0.rfind("0,0,7,", 0) == 0);

    auto lean = ProcessState::init(ctx, 1, Mode::Lean);
    const auto rl = run(lean, RunOptions{});
    std::ostringstream lo;
    write_trajectory_csv(lo, rl);
    std::istringstream li(lo.str());
    std::getline(li, header);
    std::getline(li, row0);
    CHECK(row0.rfind("0,0,7,,,", 0) == 0);
    CHECK(row0.substr(row0.size() - 2) == ",,");
}

TEST_CASE("horizon run row count") {
    RingContext ctx(8192);
    auto st = ProcessState::init(ctx, 7, Mode::Lean);
    RunOptions opt;
    opt.stop = RunOptions::Stop::Horizon;
    opt.horizon = horizon(4096, 1 / std::sqrt(3.0));
    opt.cadence = 1;
    const auto rec = run(st, opt);
    CHECK(rec.snapshots.size() == 108);  // steps 0..107
}

TEST_CASE("ensembles are schedule independent") {
    EnsembleConfig cfg;
    cfg.modulus = 200;
    cfg.runs = 6;
    cfg.seed0 = 10;
    cfg.c = 0.5;
    cfg.threads = 1;
    auto a = run_ensemble(cfg);
    cfg.threads = 3;
    auto b = run_ensemble(cfg);
    CHECK(to_json(a)["runs"] == to_json(b)["runs"]);
    CHECK(a.runs[2].seed == 12);
    auto j = to_json(a);
    CHECK(j["prng"] == Xoshiro256::kAlgorithm);
    CHECK(j["version"] == kArtifactVersion);
    CHECK(j["config"]["runs"] == 6);

    cfg.runs = 0;
    CHECK_THROWS_AS(run_ensemble(cfg), InvalidParams);
}

TEST_CASE("termination ensemble") {
    EnsembleConfig cfg;
    cfg.modulus = 512;
    cfg.runs = 4;
    cfg.mode = Mode::Lean;
    auto r = run_ensemble(cfg);
    CHECK(r.termination_step.count == 4);
    CHECK(r.termination_step.mean == r.final_size.mean);
    CHECK(to_json(r)["termination_ratio"].is_number());
}

TEST_CASE("uniform baseline") {
    CHECK(baseline_uniform_pairs(100, 0, 10, 1) == 0.0);
    CHECK(baseline_uniform_pairs(100, 199, 3, 1) == doctest::Approx(99.0));
    CHECK_THROWS_AS(baseline_uniform_pairs(100, 200, 3, 1), InvalidParams);
    // mean against the exact expectation (n-1) s(s-1)/((2n-1)(2n-2))
    const std::uint64_t n = 1000, s = 200;
    const double exact = (n - 1.0) * s * (s - 1.0) / ((2.0 * n - 1) * (2.0 * n - 2));
    CHECK(baseline_uniform_pairs(n, s, 4000, 5) == doctest::Approx(exact).epsilon(0.03));
}

TEST_CASE("pairs scaling configuration") {
    CHECK_THROWS_AS(pairs_scaling({1024}, 2, 0.5, 1, 1), InvalidParams);
    CHECK_THROWS_AS(pairs_scaling({256, 128, 512, 1024}, 2, 0.5, 1, 1), InvalidParams);
    auto r = pairs_scaling({128, 256, 512, 1024}, 2, 1 / std::sqrt(3.0), 1, 1, 50);
    CHECK(r.points.size() == 4);
    CHECK(r.target_slope == doctest::Approx(1.0 / 6));
    CHECK(r.points[0].horizon == horizon(128, 1 / std::sqrt(3.0)));
    CHECK(r.points[3].comparison == doctest::Approx(0.5 * (std::pow(1024.0, 1.0 / 6) - 1)));
}
