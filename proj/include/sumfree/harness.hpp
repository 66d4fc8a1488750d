#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sumfree/process.hpp"

namespace sumfree {

inline constexpr const char* kArtifactVersion = "sumfree 1.0.0";

// Runs job(i) for i in [0, count) on up to `threads` workers. Results are
// written by index, so aggregation never depends on scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job);

struct Stats {
    double mean = 0.0, sd = 0.0, min = 0.0, max = 0.0;
    std::size_t count = 0;
};
Stats summarize(const std::vector<double>& xs);

double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys);

// Shortest round-trip decimal.
std::string format_double(double x);

// Max |normalized deviation| of Q, E2, E3 over the snapshots of a run.
// E2/E3 are absent for LEAN runs.
struct DeviationMaxima {
    double q = 0.0;
    std::optional<double> e2, e3;
    std::optional<std::int64_t> max_d1_nonzero;
};
DeviationMaxima deviation_maxima(const RunRecord& run);

inline constexpr const char* kTrajectoryCsvHeader =
    "step,t,Q,E2,E3,D2R0,D3R0,D1R0,pairs_distinct,maxD1_nonzero,devQ,devE2,devE3";
void write_trajectory_csv(std::ostream& out, const RunRecord& run);
nlohmann::json trajectory_json(const RunRecord& run);

struct EnsembleConfig {
    Element modulus = 0;
    std::uint64_t seed0 = 1;
    std::uint64_t runs = 1;
    Mode mode = Mode::FullLedger;
    std::optional<double> c;  // horizon coefficient; none = until termination
    std::uint64_t cadence = 0;
    unsigned threads = 1;
};

struct RunSummary {
    std::uint64_t seed = 0;
    std::uint64_t steps = 0;
    std::optional<std::uint64_t> termination_step;
    std::uint64_t final_size = 0;
    std::uint64_t pairs_distinct = 0;
    std::uint64_t d1r0 = 0;
    DeviationMaxima dev;
};

struct EnsembleResult {
    EnsembleConfig config;
    std::vector<RunSummary> runs;  // by run index; seed = seed0 + index
    Stats final_size, pairs, termination_step;
    DeviationMaxima worst;
};

RunOptions options_for(const EnsembleConfig& cfg);
EnsembleResult run_ensemble(const EnsembleConfig& cfg);
nlohmann::json to_json(const EnsembleResult& r);

// Mean distinct +-pairs over uniformly random `size`-subsets of Z_{2n} \ {0}.
double baseline_uniform_pairs(std::uint64_t n, std::uint64_t size, std::uint64_t runs, std::uint64_t seed);

struct PairsPoint {
    std::uint64_t n = 0;
    std::uint64_t horizon = 0;
    Stats pairs;          // distinct +-pairs at the horizon
    double mean_d1r0 = 0.0;
    double comparison = 0.0;  // (1/2)(p^{-2/3} - 1), p = n^{-3c^2/4}
    double baseline = 0.0;
};

struct PairsScalingResult {
    double c = 0.0;
    std::uint64_t runs = 0;
    std::uint64_t seed0 = 0;
    std::vector<PairsPoint> points;
    double slope = 0.0;         // ln(mean + 1) against ln n
    double target_slope = 0.0;  // c^2 / 2
};

// Throws InvalidParams unless n_list is strictly ascending with >= 4 points.
PairsScalingResult pairs_scaling(const std::vector<std::uint64_t>& n_list, std::uint64_t runs, double c,
                                 std::uint64_t seed0, unsigned threads, std::uint64_t baseline_runs = 2000);
nlohmann::json to_json(const PairsScalingResult& r);

// sqrt(2/3) sqrt(n) sqrt(ln n), n = m/2.
double termination_scale(Element modulus);

struct TerminationResult {
    Element modulus = 0;
    std::uint64_t runs = 0;
    Stats final_size;
    double scale = 0.0;  // sqrt(2/3) sqrt(n) sqrt(ln n)
    double ratio = 0.0;  // mean |S| / scale
};
TerminationResult termination_experiment(Element modulus, std::uint64_t runs, std::uint64_t seed0,
                                         unsigned threads);
nlohmann::json to_json(const TerminationResult& r);

nlohmann::json config_json(const EnsembleConfig& cfg);

}  // namespace sumfree
