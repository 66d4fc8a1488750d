// sumfree: experiment runner for the random greedy sum-free process.
//   exit 0 = success, 1 = a check failed, 2 = bad configuration

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sumfree/errors.hpp"
#include "sumfree/generic_greedy.hpp"
#include "sumfree/harness.hpp"
#include "sumfree/oracle.hpp"
#include "sumfree/process.hpp"
#include "sumfree/rng.hpp"
#include "sumfree/trajectory.hpp"

using namespace sumfree;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kBadConfig = 2;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::optional<std::uint64_t> m, n;
    std::uint64_t seed = 1;
    std::uint64_t runs = 1;
    std::string mode = "full";
    std::optional<double> c;
    bool until_termination = false;
    std::uint64_t cadence = 0;
    std::string out;
    std::string format;
    unsigned threads = 1;
};

Element modulus_of(const Common& o) {
    if (o.m && o.n) throw ConfigError("give --m or --n, not both");
    std::uint64_t m = 0;
    if (o.m) m = *o.m;
    else if (o.n) m = 2 * *o.n;
    else throw ConfigError("missing modulus (--m or --n)");
    if (m < 3 || m > (std::uint64_t{1} << 31)) throw ConfigError("modulus must lie in [3, 2^31]");
    return static_cast<Element>(m);
}

Mode mode_of(const std::string& s) {
    if (s == "full") return Mode::FullLedger;
    if (s == "lean") return Mode::Lean;
    throw ConfigError("--mode must be full or lean");
}

std::optional<double> horizon_coeff(const Common& o) {
    if (o.c && o.until_termination) throw ConfigError("--c and --until-termination are exclusive");
    if (o.c && !(*o.c > 0.0)) throw ConfigError("--c must be positive");
    return o.c;
}

// Writes to --out when given, stdout otherwise.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    f << text;
}

bool pairwise_sum_free(const std::vector<Element>& s, Element m) {
    std::vector<std::uint8_t> in(m, 0);
    for (Element v : s) in[v] = 1;
    for (Element a : s) {
        for (Element b : s) {
            if (in[(std::uint64_t{a} + b) % m]) return false;
        }
    }
    return true;
}

int cmd_simulate(const Common& o) {
    const Element m = modulus_of(o);
    const auto c = horizon_coeff(o);
    const std::string fmt = o.format.empty() ? "csv" : o.format;
    const RingContext ctx(m);
    ProcessState st = ProcessState::init(ctx, o.seed, mode_of(o.mode));
    RunOptions opt;
    opt.cadence = o.cadence;
    if (c) {
        opt.stop = RunOptions::Stop::Horizon;
        opt.horizon = horizon(m / 2.0, *c);
    }
    const RunRecord rec = run(st, opt);

    std::ostringstream ss;
    if (fmt == "csv") {
        write_trajectory_csv(ss, rec);
    } else {
        nlohmann::json j = trajectory_json(rec);
        j["version"] = kArtifactVersion;
        j["prng"] = Xoshiro256::kAlgorithm;
        j["config"] = {{"modulus", m}, {"seed", o.seed}, {"mode", o.mode},
                       {"c", c ? nlohmann::json(*c) : nlohmann::json(nullptr)},
                       {"cadence", opt.cadence == 0 ? default_cadence(m) : opt.cadence}};
        ss << j.dump(2) << '\n';
    }
    emit(o.out, ss.str());

    if (!pairwise_sum_free(rec.chosen_sequence, m)) {
        std::cerr << "invariant violated: chosen set is not sum-free\n";
        return kCheckFailed;
    }
    return kOk;
}

EnsembleConfig ensemble_config(const Common& o) {
    EnsembleConfig cfg;
    cfg.modulus = modulus_of(o);
    cfg.seed0 = o.seed;
    cfg.runs = o.runs;
    if (cfg.runs == 0) throw ConfigError("--runs must be positive");
    cfg.mode = mode_of(o.mode);
    cfg.c = horizon_coeff(o);
    cfg.cadence = o.cadence;
    cfg.threads = o.threads;
    return cfg;
}

int cmd_ensemble(const Common& o) {
    const EnsembleResult r = run_ensemble(ensemble_config(o));
    emit(o.out, to_json(r).dump(2) + "\n");
    return kOk;
}

int cmd_envelope(Common o) {
    if (!o.c && !o.until_termination) o.c = 1.0 / std::sqrt(3.0);
    if (o.mode != "full") throw ConfigError("envelope reports need --mode full");
    const EnsembleConfig cfg = ensemble_config(o);
    const EnsembleResult r = run_ensemble(cfg);
    const double n = cfg.modulus / 2.0;
    const double d1_bound = std::log(n) * std::log(n);

    bool ok = r.worst.q < 1.0 && r.worst.e2.value_or(0) < 1.0 && r.worst.e3.value_or(0) < 1.0 &&
              r.worst.max_d1_nonzero.value_or(0) <= d1_bound;
    nlohmann::json j = to_json(r);
    j["D1_bound"] = d1_bound;
    j["pass"] = ok;
    emit(o.out, j.dump(2) + "\n");
    std::cerr << "max |dev|  Q " << format_double(r.worst.q) << "  E2 " << format_double(r.worst.e2.value_or(0))
              << "  E3 " << format_double(r.worst.e3.value_or(0)) << "  maxD1 "
              << r.worst.max_d1_nonzero.value_or(0) << " (bound " << format_double(d1_bound) << ")  "
              << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kOk : kCheckFailed;
}

std::vector<std::uint64_t> parse_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size() || !(v >= 1) || v != std::floor(v)) throw std::invalid_argument(item);
            out.push_back(static_cast<std::uint64_t>(v));
        } catch (const std::exception&) {
            throw ConfigError("bad --n-list entry '" + item + "'");
        }
    }
    return out;
}

int cmd_pairs_scaling(const Common& o, const std::string& n_list, bool check) {
    const double c = o.c.value_or(1.0 / std::sqrt(3.0));
    const auto ns = parse_list(n_list);
    if (ns.size() < 4) throw ConfigError("pairs scaling needs at least 4 values in --n-list");
    const PairsScalingResult r = pairs_scaling(ns, o.runs, c, o.seed, o.threads);
    nlohmann::json j = to_json(r);
    bool ok = true;
    if (check) {
        const PairsPoint& last = r.points.back();
        const bool slope_ok = r.slope >= 0.10 && r.slope <= 0.24;
        bool factor_ok = true;
        for (const auto& p : r.points) {
            factor_ok = factor_ok && p.pairs.mean >= p.comparison / 3.0 && p.pairs.mean <= 3.0 * p.comparison;
        }
        const bool baseline_ok = last.pairs.mean >= 5.0 * last.baseline;
        j["checks"] = {{"slope_in_band", slope_ok}, {"within_factor_3", factor_ok}, {"five_times_baseline", baseline_ok}};
        ok = slope_ok && factor_ok && baseline_ok;
    }
    emit(o.out, j.dump(2) + "\n");
    std::cerr << "slope " << format_double(r.slope) << " (target " << format_double(r.target_slope) << ")\n";
    return ok ? kOk : kCheckFailed;
}

int cmd_variation(double n, double grid_step) {
    if (!(n >= 3)) throw ConfigError("--n must be at least 3");
    if (!(grid_step > 0)) throw ConfigError("--grid-step must be positive");
    const auto grid = uniform_grid(t_max_for(n), grid_step);
    bool all = true;
    for (VariationId id : kAllVariations) {
        const VariationReport r = check_variation(id, n, grid);
        all = all && r.holds;
        std::cout << name_of(id) << "  " << (r.holds ? "holds" : "FAILS") << "  margin "
                  << format_double(r.margin_min) << " at t=" << format_double(r.t_at_margin_min)
                  << "  reduced " << r.reduced_polynomial.to_string() << '\n';
    }
    return all ? kOk : kCheckFailed;
}

int cmd_oracle_verify(std::uint64_t m_min, std::uint64_t m_max, std::uint64_t seeds, std::uint64_t seed0) {
    if (m_min < 3 || m_max < m_min || m_max > 4096) throw ConfigError("need 3 <= m-min <= m-max <= 4096");
    if (seeds == 0) throw ConfigError("--seeds must be positive");
    bool clean = true;
    std::uint64_t frames = 0;
    for (std::uint64_t m = m_min; m <= m_max; ++m) {
        const RingContext ctx(static_cast<Element>(m));
        for (std::uint64_t k = 0; k < seeds; ++k) {
            ProcessState st = ProcessState::init(ctx, seed0 + k, Mode::FullLedger);
            RunOptions opt;
            opt.keep_frames = true;
            const RunRecord rec = run(st, opt);
            const VerifyReport rep = verify_run(rec, ctx);
            frames += rep.frames_checked;
            if (!rep.clean) {
                clean = false;
                std::cout << "m=" << m << " seed=" << seed0 + k << " step " << rep.first->step << ": "
                          << rep.first->what << '\n';
            }
        }
    }
    std::cout << (clean ? "clean" : "DISCREPANCIES") << " (" << frames << " frames)\n";
    return clean ? kOk : kCheckFailed;
}

int cmd_generic(const std::string& input, std::uint64_t seed, double eps, bool diagnostics,
                const std::string& out) {
    std::ifstream f(input);
    if (!f) throw ConfigError("cannot open " + input);
    const Hypergraph h = read_hypergraph_json(f);
    const GreedyResult g = greedy_run(h, seed);
    nlohmann::json j = {{"version", kArtifactVersion},
                        {"prng", Xoshiro256::kAlgorithm},
                        {"config", {{"input", input}, {"seed", seed}, {"eps", eps}}},
                        {"num_vertices", h.num_vertices},
                        {"num_edges", h.edges.size()},
                        {"independent_set", g.independent_set},
                        {"size", g.independent_set.size()}};
    const bool maximal = is_maximal_independent(h, g.independent_set);
    j["maximal"] = maximal;
    if (diagnostics) {
        const Thm1Report r = check_thm1_hypotheses(h, eps);
        nlohmann::json deltas = nlohmann::json::array();
        for (const auto& d : r.deltas) {
            deltas.push_back({{"ell", d.ell}, {"value", d.value}, {"bound", d.bound}, {"holds", d.holds}});
        }
        j["thm1"] = {{"degenerate", r.degenerate}, {"r", r.r}, {"uniform", r.uniform},
                     {"mean_degree", r.mean_degree}, {"min_degree", r.min_degree},
                     {"max_degree", r.max_degree}, {"deltas", deltas}, {"gamma", r.gamma},
                     {"gamma_bound", r.gamma_bound}, {"gamma_holds", r.gamma_holds},
                     {"all_hold", r.all_hold}};
    }
    emit(out, j.dump(2) + "\n");
    return maximal ? kOk : kCheckFailed;
}

void add_common(CLI::App* sub, Common& o, bool ensemble_flags) {
    sub->add_option("--m", o.m, "modulus m (Z_m)");
    sub->add_option("--n", o.n, "time scale n; sets m = 2n");
    sub->add_option("--seed", o.seed, "seed (first seed for multi-run commands)");
    sub->add_option("--mode", o.mode, "full | lean");
    sub->add_option("--c", o.c, "horizon coefficient: stop at round(c sqrt(n ln n))");
    sub->add_flag("--until-termination", o.until_termination, "run until no element is open");
    sub->add_option("--cadence", o.cadence, "snapshot every k steps (0 = default)");
    sub->add_option("--out", o.out, "output path (default stdout)");
    if (ensemble_flags) {
        sub->add_option("--seeds,--runs", o.runs, "number of runs; seeds are seed + index");
        sub->add_option("--threads", o.threads, "worker threads");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"random greedy sum-free process on Z_m"};
    app.require_subcommand(1);

    Common sim, ens, env, ps;
    auto* s_sim = app.add_subcommand("simulate", "one run; trajectory as CSV or JSON");
    add_common(s_sim, sim, false);
    s_sim->add_option("--format", sim.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));

    auto* s_ens = app.add_subcommand("ensemble", "many seeds; JSON summary");
    add_common(s_ens, ens, true);

    auto* s_env = app.add_subcommand("envelope", "max normalized deviations over an ensemble");
    add_common(s_env, env, true);

    std::string n_list = "4096,8192,16384,32768,65536";
    bool ps_check = false;
    ps.runs = 16;
    auto* s_ps = app.add_subcommand("pairs-scaling", "mean +-pairs at the horizon across n");
    s_ps->add_option("--n-list", n_list, "comma-separated ascending n values");
    s_ps->add_option("--seeds,--runs", ps.runs, "runs per n");
    s_ps->add_option("--seed", ps.seed, "first seed");
    s_ps->add_option("--c", ps.c, "horizon coefficient (default 1/sqrt 3)");
    s_ps->add_option("--threads", ps.threads, "worker threads");
    s_ps->add_option("--out", ps.out, "output path");
    s_ps->add_flag("--check", ps_check, "enforce slope, factor-3 and baseline checks");

    double var_n = 1e8, grid_step = 1e-3;
    auto* s_var = app.add_subcommand("variation", "check the eight variation inequalities");
    s_var->add_option("--n", var_n, "n");
    s_var->add_option("--grid-step", grid_step, "t grid spacing");

    std::uint64_t m_min = 4, m_max = 40, ov_seeds = 5, ov_seed = 1;
    auto* s_ov = app.add_subcommand("oracle-verify", "replay FULL runs against recomputation");
    s_ov->add_option("--m-min", m_min, "smallest modulus");
    s_ov->add_option("--m-max", m_max, "largest modulus");
    s_ov->add_option("--seeds", ov_seeds, "seeds per modulus");
    s_ov->add_option("--seed", ov_seed, "first seed");

    std::string input, gen_out;
    std::uint64_t gen_seed = 1;
    double eps = 0.1;
    bool diagnostics = false;
    auto* s_gen = app.add_subcommand("generic", "greedy independent set on a JSON hypergraph");
    s_gen->add_option("--input", input, "hypergraph JSON {num_vertices, edges}")->required();
    s_gen->add_option("--seed", gen_seed, "seed");
    s_gen->add_option("--eps", eps, "epsilon for the degree conditions");
    s_gen->add_flag("--diagnostics", diagnostics, "report degree and codegree conditions");
    s_gen->add_option("--out", gen_out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kBadConfig;
    }

    try {
        if (*s_sim) return cmd_simulate(sim);
        if (*s_ens) return cmd_ensemble(ens);
        if (*s_env) return cmd_envelope(env);
        if (*s_ps) return cmd_pairs_scaling(ps, n_list, ps_check);
        if (*s_var) return cmd_variation(var_n, grid_step);
        if (*s_ov) return cmd_oracle_verify(m_min, m_max, ov_seeds, ov_seed);
        if (*s_gen) return cmd_generic(input, gen_seed, eps, diagnostics, gen_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const InvalidModulus& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const InvalidParams& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kBadConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kCheckFailed;
    }
    return kBadConfig;
}
