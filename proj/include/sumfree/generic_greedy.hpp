#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sumfree/ring.hpp"

namespace sumfree {

using Vertex = std::uint32_t;
using Edge = std::vector<Vertex>;  // sorted, distinct

struct Hypergraph {
    std::uint32_t num_vertices = 0;
    std::vector<Edge> edges;  // sorted, deduplicated
    std::string label;
    // Builders may record how many raw objects collapsed onto each edge
    // (equation classes for the Schur family). Empty otherwise.
    std::vector<std::uint32_t> multiplicity;

    // Sorts each edge and the edge list, drops duplicates. Throws
    // InvalidParams on empty edges, repeated vertices or out-of-range ids.
    static Hypergraph make(std::uint32_t num_vertices, std::vector<Edge> edges, std::string label = {});
};

struct ConfigFamily {
    std::uint32_t s = 0;
    std::vector<std::vector<Vertex>> members;
};

struct GreedyStep {
    Vertex chosen = 0;
    std::vector<Vertex> newly_closed;  // ascending
};

struct GreedyResult {
    std::vector<Vertex> independent_set;  // in order of choice
    std::vector<Vertex> initially_closed;  // size-1 edges
    std::vector<GreedyStep> trace;
};

GreedyResult greedy_run(const Hypergraph& h, std::uint64_t seed);

// True if no edge lies inside `set` and every vertex outside it would complete one.
bool is_maximal_independent(const Hypergraph& h, std::span<const Vertex> set);

// Max over a-subsets of edges of the number of edges containing the subset.
std::uint64_t delta_a(const Hypergraph& h, std::uint32_t a);

// Ordered edge pairs (e, e') with v in e \ e', v' in e' \ e, |e n e'| = b.
std::uint64_t codegree_b(const Hypergraph& h, Vertex v, Vertex v2, std::uint32_t b);
// Max of codegree_b over ordered vertex pairs.
std::uint64_t gamma_b(const Hypergraph& h, std::uint32_t b);

struct DeltaCheck {
    std::uint32_t ell = 0;
    std::uint64_t value = 0;
    double bound = 0.0;
    bool holds = false;
};

struct Thm1Report {
    bool degenerate = false;  // no edges, or r < 2
    std::uint32_t r = 0;      // max edge size
    bool uniform = true;
    double mean_degree = 0.0;  // D
    std::uint64_t min_degree = 0, max_degree = 0;
    std::vector<DeltaCheck> deltas;  // ell = 2 .. r-1
    std::uint64_t gamma = 0;         // Gamma_{r-1}
    double gamma_bound = 0.0;
    bool gamma_holds = false;
    bool all_hold = false;
};

Thm1Report check_thm1_hypotheses(const Hypergraph& h, double eps);

std::uint64_t count_XG(const ConfigFamily& family, std::span<const Vertex> set);

// {v, -v} for v != 0, v != -v.
ConfigFamily pm_pair_family(const RingContext& ctx);

// X_G against |G| p^s, with p = i/N (i = |S|).
struct XGReport {
    std::uint64_t observed = 0;
    double expected = 0.0;
    double p = 0.0;
    static constexpr const char* kConvention = "p = i/N";
};
XGReport xg_report(const ConfigFamily& family, std::span<const Vertex> set, std::uint32_t num_vertices);

Hypergraph build_schur(const RingContext& ctx);
Hypergraph build_kap(std::uint32_t n, std::uint32_t k);

Hypergraph read_hypergraph_json(std::istream& in);
Hypergraph parse_hypergraph_json(const std::string& text);
std::string to_json(const Hypergraph& h);

}  // namespace sumfree
