#include "sumfree/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <thread>

#include "sumfree/errors.hpp"
#include "sumfree/rng.hpp"
#include "sumfree/trajectory.hpp"

namespace sumfree {

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < count;) {
                try {
                    job(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

Stats summarize(const std::vector<double>& xs) {
    Stats s;
    s.count = xs.size();
    if (xs.empty()) return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    s.min = *std::min_element(xs.begin(), xs.end());
    s.max = *std::max_element(xs.begin(), xs.end());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / (xs.size() - 1));
    }
    return s;
}

double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw InvalidParams("slope fit needs >= 2 paired points");
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx == 0.0) throw InvalidParams("slope fit needs distinct abscissae");
    return sxy / sxx;
}

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

namespace {

struct SnapshotDevs {
    double q;
    std::optional<double> e2, e3;
};

SnapshotDevs devs_of(const TrajectorySnapshot& s, double n) {
    SnapshotDevs d;
    const double q = static_cast<double>(s.q);
    d.q = normalized_deviation(Tracked::Q, q, n, s.t);
    if (s.e2) d.e2 = normalized_deviation(Tracked::E2, static_cast<double>(*s.e2), n, s.t, q);
    if (s.e3) d.e3 = normalized_deviation(Tracked::E3, static_cast<double>(*s.e3), n, s.t, q);
    return d;
}

void raise(std::optional<double>& slot, std::optional<double> v) {
    if (!v) return;
    slot = std::max(slot.value_or(0.0), std::abs(*v));
}

template <class T>
std::string cell(const std::optional<T>& v) {
    if (!v) return {};
    if constexpr (std::is_floating_point_v<T>) {
        return format_double(*v);
    } else {
        return std::to_string(*v);
    }
}

template <class T>
nlohmann::json opt_json(const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json stats_json(const Stats& s) {
    return {{"mean", s.mean}, {"sd", s.sd}, {"min", s.min}, {"max", s.max}, {"count", s.count}};
}

}  // namespace

DeviationMaxima deviation_maxima(const RunRecord& run) {
    const double n = run.modulus / 2.0;
    DeviationMaxima m;
    for (const auto& s : run.snapshots) {
        const SnapshotDevs d = devs_of(s, n);
        m.q = std::max(m.q, std::abs(d.q));
        raise(m.e2, d.e2);
        raise(m.e3, d.e3);
        if (s.max_d1_nonzero) m.max_d1_nonzero = std::max(m.max_d1_nonzero.value_or(0), *s.max_d1_nonzero);
    }
    return m;
}

void write_trajectory_csv(std::ostream& out, const RunRecord& run) {
    const double n = run.modulus / 2.0;
    out << kTrajectoryCsvHeader << '\n';
    for (const auto& s : run.snapshots) {
        const SnapshotDevs d = devs_of(s, n);
        out << s.step << ',' << format_double(s.t) << ',' << s.q << ',' << cell(s.e2) << ',' << cell(s.e3)
            << ',' << cell(s.d2r0) << ',' << cell(s.d3r0) << ',' << s.d1r0 << ',' << s.pairs_distinct << ','
            << cell(s.max_d1_nonzero) << ',' << format_double(d.q) << ',' << cell(d.e2) << ','
            << cell(d.e3) << '\n';
    }
}

nlohmann::json trajectory_json(const RunRecord& run) {
    const double n = run.modulus / 2.0;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : run.snapshots) {
        const SnapshotDevs d = devs_of(s, n);
        rows.push_back({{"step", s.step},
                        {"t", s.t},
                        {"Q", s.q},
                        {"E2", opt_json(s.e2)},
                        {"E3", opt_json(s.e3)},
                        {"D2R0", opt_json(s.d2r0)},
                        {"D3R0", opt_json(s.d3r0)},
                        {"D1R0", s.d1r0},
                        {"pairs_distinct", s.pairs_distinct},
                        {"maxD1_nonzero", opt_json(s.max_d1_nonzero)},
                        {"devQ", d.q},
                        {"devE2", opt_json(d.e2)},
                        {"devE3", opt_json(d.e3)}});
    }
    return {{"modulus", run.modulus},
            {"mode", to_string(run.mode)},
            {"chosen_sequence", run.chosen_sequence},
            {"termination_step", opt_json(run.termination_step)},
            {"final_size", run.final_size},
            {"final_pairs_distinct", run.final_pairs_distinct},
            {"snapshots", rows}};
}

RunOptions options_for(const EnsembleConfig& cfg) {
    RunOptions opt;
    opt.cadence = cfg.cadence;
    if (cfg.c) {
        opt.stop = RunOptions::Stop::Horizon;
        opt.horizon = horizon(cfg.modulus / 2.0, *cfg.c);
    } else {
        opt.stop = RunOptions::Stop::UntilTermination;
    }
    return opt;
}

nlohmann::json config_json(const EnsembleConfig& cfg) {
    return {{"modulus", cfg.modulus},
            {"n", cfg.modulus / 2.0},
            {"seed0", cfg.seed0},
            {"runs", cfg.runs},
            {"mode", to_string(cfg.mode)},
            {"c", opt_json(cfg.c)},
            {"until_termination", !cfg.c.has_value()},
            {"cadence", cfg.cadence == 0 ? default_cadence(cfg.modulus) : cfg.cadence},
            {"threads", cfg.threads}};
}

EnsembleResult run_ensemble(const EnsembleConfig& cfg) {
    if (cfg.runs == 0) throw InvalidParams("ensemble needs at least one run");
    if (cfg.c && !(*cfg.c > 0.0)) throw InvalidParams("horizon coefficient must be positive");
    const RingContext ctx(cfg.modulus);
    const RunOptions opt = options_for(cfg);

    EnsembleResult res;
    res.config = cfg;
    res.runs.resize(cfg.runs);
    parallel_for(cfg.runs, cfg.threads, [&](std::size_t i) {
        const std::uint64_t seed = cfg.seed0 + i;
        ProcessState st = ProcessState::init(ctx, seed, cfg.mode);
        const RunRecord rec = run(st, opt);
        RunSummary& s = res.runs[i];
        s.seed = seed;
        s.steps = st.steps();
        s.termination_step = rec.termination_step;
        s.final_size = rec.final_size;
        s.pairs_distinct = rec.final_pairs_distinct;
        s.d1r0 = rec.final_d1r0;
        s.dev = deviation_maxima(rec);
    });

    std::vector<double> size, pairs, term;
    for (const auto& s : res.runs) {
        size.push_back(static_cast<double>(s.final_size));
        pairs.push_back(static_cast<double>(s.pairs_distinct));
        if (s.termination_step) term.push_back(static_cast<double>(*s.termination_step));
        res.worst.q = std::max(res.worst.q, s.dev.q);
        raise(res.worst.e2, s.dev.e2);
        raise(res.worst.e3, s.dev.e3);
        if (s.dev.max_d1_nonzero) {
            res.worst.max_d1_nonzero = std::max(res.worst.max_d1_nonzero.value_or(0), *s.dev.max_d1_nonzero);
        }
    }
    res.final_size = summarize(size);
    res.pairs = summarize(pairs);
    res.termination_step = summarize(term);
    return res;
}

nlohmann::json to_json(const EnsembleResult& r) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& s : r.runs) {
        runs.push_back({{"seed", s.seed},
                        {"steps", s.steps},
                        {"termination_step", opt_json(s.termination_step)},
                        {"final_size", s.final_size},
                        {"pairs_distinct", s.pairs_distinct},
                        {"D1R0", s.d1r0},
                        {"max_abs_devQ", s.dev.q},
                        {"max_abs_devE2", opt_json(s.dev.e2)},
                        {"max_abs_devE3", opt_json(s.dev.e3)},
                        {"maxD1_nonzero", opt_json(s.dev.max_d1_nonzero)}});
    }
    return {{"version", kArtifactVersion},
            {"prng", Xoshiro256::kAlgorithm},
            {"config", config_json(r.config)},
            {"stats",
             {{"final_size", stats_json(r.final_size)},
              {"pairs_distinct", stats_json(r.pairs)},
              {"termination_step", stats_json(r.termination_step)}}},
            {"max_abs_deviation",
             {{"Q", r.worst.q}, {"E2", opt_json(r.worst.e2)}, {"E3", opt_json(r.worst.e3)}}},
            {"maxD1_nonzero", opt_json(r.worst.max_d1_nonzero)},
            {"termination_ratio", r.config.c ? nlohmann::json(nullptr)
                                             : nlohmann::json(r.final_size.mean / termination_scale(r.config.modulus))},
            {"runs", runs}};
}

double termination_scale(Element modulus) {
    const double n = modulus / 2.0;
    return std::sqrt(2.0 / 3.0) * std::sqrt(n) * std::sqrt(std::log(n));
}

double baseline_uniform_pairs(std::uint64_t n, std::uint64_t size, std::uint64_t runs, std::uint64_t seed) {
    const std::uint64_t universe = 2 * n - 1;  // Z_{2n} \ {0}
    if (size > universe) throw InvalidParams("baseline size exceeds 2n - 1");
    if (runs == 0 || size == 0) return 0.0;
    Xoshiro256 rng(seed);
    std::vector<std::uint64_t> pool(universe);
    std::vector<std::uint8_t> in(2 * n, 0);
    double total = 0.0;
    for (std::uint64_t r = 0; r < runs; ++r) {
        std::iota(pool.begin(), pool.end(), std::uint64_t{1});
        for (std::uint64_t i = 0; i < size; ++i) {
            const std::uint64_t j = i + rng.uniform_below(universe - i);
            std::swap(pool[i], pool[j]);
            in[pool[i]] = 1;
        }
        std::uint64_t pairs = 0;
        for (std::uint64_t i = 0; i < size; ++i) {
            const std::uint64_t v = pool[i];
            if (v < n && in[2 * n - v]) ++pairs;
        }
        total += static_cast<double>(pairs);
        for (std::uint64_t i = 0; i < size; ++i) in[pool[i]] = 0;
    }
    return total / static_cast<double>(runs);
}

PairsScalingResult pairs_scaling(const std::vector<std::uint64_t>& n_list, std::uint64_t runs, double c,
                                 std::uint64_t seed0, unsigned threads, std::uint64_t baseline_runs) {
    if (n_list.size() < 4) throw InvalidParams("pairs scaling needs at least 4 values of n");
    if (!std::is_sorted(n_list.begin(), n_list.end()) ||
        std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end()) {
        throw InvalidParams("n list must be strictly ascending");
    }
    if (runs == 0) throw InvalidParams("pairs scaling needs at least one run per point");
    if (!(c > 0.0)) throw InvalidParams("horizon coefficient must be positive");

    PairsScalingResult res;
    res.c = c;
    res.runs = runs;
    res.seed0 = seed0;
    res.target_slope = c * c / 2.0;
    std::vector<double> lx, ly;
    for (std::uint64_t n : n_list) {
        if (n < 2 || n > (std::uint64_t{1} << 30)) throw InvalidParams("n out of range");
        EnsembleConfig cfg;
        cfg.modulus = static_cast<Element>(2 * n);
        cfg.seed0 = seed0;
        cfg.runs = runs;
        cfg.mode = Mode::Lean;
        cfg.c = c;
        cfg.cadence = std::numeric_limits<std::uint64_t>::max();  // endpoints only
        cfg.threads = threads;
        const EnsembleResult ens = run_ensemble(cfg);

        PairsPoint pt;
        pt.n = n;
        pt.horizon = horizon(static_cast<double>(n), c);
        pt.pairs = ens.pairs;
        double d1 = 0.0;
        for (const auto& s : ens.runs) d1 += static_cast<double>(s.d1r0);
        pt.mean_d1r0 = d1 / static_cast<double>(ens.runs.size());
        const double p = std::pow(static_cast<double>(n), -0.75 * c * c);
        pt.comparison = 0.5 * (std::pow(p, -2.0 / 3.0) - 1.0);
        pt.baseline = baseline_uniform_pairs(n, std::min(pt.horizon, 2 * n - 1), baseline_runs, seed0);
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(pt.pairs.mean + 1.0));
        res.points.push_back(pt);
    }
    res.slope = least_squares_slope(lx, ly);
    return res;
}

nlohmann::json to_json(const PairsScalingResult& r) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : r.points) {
        pts.push_back({{"n", p.n},
                       {"horizon", p.horizon},
                       {"pairs", stats_json(p.pairs)},
                       {"mean_D1R0", p.mean_d1r0},
                       {"comparison", p.comparison},
                       {"baseline_uniform", p.baseline}});
    }
    return {{"version", kArtifactVersion},
            {"prng", Xoshiro256::kAlgorithm},
            {"config", {{"c", r.c}, {"runs", r.runs}, {"seed0", r.seed0}, {"mode", "lean"}}},
            {"points", pts},
            {"slope", r.slope},
            {"target_slope", r.target_slope}};
}

TerminationResult termination_experiment(Element modulus, std::uint64_t runs, std::uint64_t seed0,
                                         unsigned threads) {
    EnsembleConfig cfg;
    cfg.modulus = modulus;
    cfg.seed0 = seed0;
    cfg.runs = runs;
    cfg.mode = Mode::Lean;
    cfg.cadence = std::numeric_limits<std::uint64_t>::max();
    cfg.threads = threads;
    const EnsembleResult ens = run_ensemble(cfg);
    TerminationResult res;
    res.modulus = modulus;
    res.runs = runs;
    res.final_size = ens.final_size;
    res.scale = termination_scale(modulus);
    res.ratio = res.final_size.mean / res.scale;
    return res;
}

nlohmann::json to_json(const TerminationResult& r) {
    return {{"version", kArtifactVersion},
            {"prng", Xoshiro256::kAlgorithm},
            {"config", {{"modulus", r.modulus}, {"runs", r.runs}, {"mode", "lean"}}},
            {"final_size", stats_json(r.final_size)},
            {"scale", r.scale},
            {"ratio", r.ratio}};
}

}  // namespace sumfree
