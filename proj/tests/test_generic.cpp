#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "sumfree/errors.hpp"
#include "sumfree/generic_greedy.hpp"
#include "sumfree/process.hpp"

using namespace sumfree;

namespace {

// Independent degree and codegree counts by direct subset tests.
std::uint64_t brute_delta(const Hypergraph& h, std::uint32_t a) {
    std::set<std::vector<Vertex>> subsets;
    for (const auto& e : h.edges) {
        if (e.size() < a) continue;
        std::vector<bool> pick(e.size(), false);
        std::fill(pick.end() - a, pick.end(), true);
        do {
            std::vector<Vertex> s;
            for (std::size_t i = 0; i < e.size(); ++i)
                if (pick[i]) s.push_back(e[i]);
            subsets.insert(s);
        } while (std::next_permutation(pick.begin(), pick.end()));
    }
    std::uint64_t best = 0;
    for (const auto& s : subsets) {
        std::uint64_t d = 0;
        for (const auto& e : h.edges) d += std::includes(e.begin(), e.end(), s.begin(), s.end());
        best = std::max(best, d);
    }
    return best;
}

std::uint64_t brute_codegree(const Hypergraph& h, Vertex v, Vertex w, std::uint32_t b) {
    std::uint64_t k = 0;
    for (const auto& e : h.edges) {
        for (const auto& f : h.edges) {
            std::set<Vertex> se(e.begin(), e.end()), sf(f.begin(), f.end());
            if (!se.count(v) || sf.count(v) || !sf.count(w) || se.count(w)) continue;
            std::uint32_t common = 0;
            for (Vertex x : se) common += sf.count(x);
            k += common == b;
        }
    }
    return k;
}

}  // namespace

TEST_CASE("hypergraph construction") {
    auto h = Hypergraph::make(4, {{2, 1}, {1, 2}, {3}});
    CHECK(h.edges.size() == 2);
    CHECK(h.edges[0] == Edge{1, 2});
    CHECK(h.multiplicity[0] == 2);
    CHECK_THROWS_AS(Hypergraph::make(3, {{}}), InvalidParams);
    CHECK_THROWS_AS(Hypergraph::make(3, {{1, 1}}), InvalidParams);
    CHECK_THROWS_AS(Hypergraph::make(3, {{0, 3}}), InvalidParams);
}

TEST_CASE("builders") {
    RingContext ctx(8);
    auto s = build_schur(ctx);
    std::uint64_t classes = 0;
    for (auto k : s.multiplicity) classes += k;
    CHECK(classes == 36);
    std::set<std::set<Element>> distinct;
    for (const auto& c : enumerate_classes(ctx)) distinct.insert({c.vertices().begin(), c.vertices().end()});
    CHECK(s.edges.size() == distinct.size());

    auto k = build_kap(5, 3);
    std::set<std::set<Vertex>> aps;
    for (Vertex a = 0; a < 5; ++a)
        for (Vertex d = 1; d < 5; ++d) aps.insert({a, (a + d) % 5, (a + 2 * d) % 5});
    CHECK(k.edges.size() == aps.size());
    CHECK(k.edges.size() == 10);
    CHECK_THROWS_AS(build_kap(3, 4), InvalidParams);
}

TEST_CASE("greedy runs") {
    auto none = Hypergraph::make(5, {});
    auto r = greedy_run(none, 3);
    CHECK(r.independent_set.size() == 5);

    auto one = Hypergraph::make(2, {{0, 1}});
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto g = greedy_run(one, seed);
        CHECK(g.independent_set.size() == 1);
        CHECK(is_maximal_independent(one, g.independent_set));
    }

    auto k = build_kap(31, 3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto g = greedy_run(k, seed);
        CHECK(is_maximal_independent(k, g.independent_set));
        CHECK(g.independent_set.size() == g.trace.size());
    }
}

TEST_CASE("schur hypergraph replays the process engine") {
    for (Element m : {8u, 13u, 32u}) {
        RingContext ctx(m);
        auto h = build_schur(ctx);
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            auto g = greedy_run(h, seed);
            CHECK(g.initially_closed == std::vector<Vertex>{0});
            auto st = ProcessState::init(ctx, seed, Mode::Lean);
            std::size_t i = 0;
            while (!st.terminated()) {
                auto rep = st.step();
                REQUIRE(i < g.trace.size());
                CHECK(rep.chosen == g.trace[i].chosen);
                CHECK(rep.newly_closed == g.trace[i].newly_closed);
                ++i;
            }
            CHECK(i == g.trace.size());
            CHECK(count_XG(pm_pair_family(ctx), g.independent_set) == st.pairs_distinct());
        }
    }
}

TEST_CASE("degree diagnostics") {
    RingContext ctx(8);
    auto s = build_schur(ctx);
    CHECK(delta_a(s, 2) == brute_delta(s, 2));
    CHECK(delta_a(s, 2) <= 5);
    CHECK(delta_a(s, 4) == 0);
    auto one = Hypergraph::make(3, {{0, 1, 2}});
    CHECK(delta_a(one, 2) == 1);

    for (Element m : {8u, 10u, 13u}) {
        auto h = build_schur(RingContext(m));
        for (std::uint32_t a = 1; a <= 3; ++a) CHECK(delta_a(h, a) == brute_delta(h, a));
        for (Vertex v = 1; v < m; ++v) {
            for (std::uint32_t b = 0; b <= 2; ++b) {
                CHECK(codegree_b(h, v, m - v == v ? 0 : m - v, b) ==
                      brute_codegree(h, v, m - v == v ? 0 : m - v, b));
            }
        }
    }
    auto kap = build_kap(11, 3);
    CHECK(delta_a(kap, 2) == brute_delta(kap, 2));
    CHECK(codegree_b(kap, 1, 4, 1) == brute_codegree(kap, 1, 4, 1));
}

TEST_CASE("codegree of v and -v grows with m") {
    std::vector<std::uint64_t> cod;
    for (Element m : {8u, 16u, 32u}) {
        auto h = build_schur(RingContext(m));
        cod.push_back(codegree_b(h, 1, m - 1, 2));
        CHECK(codegree_b(h, 1, m - 1, 2) == brute_codegree(h, 1, m - 1, 2));
    }
    CHECK(cod[1] > cod[0]);
    CHECK(cod[2] > cod[1]);

    auto disjoint = Hypergraph::make(6, {{0, 1}, {2, 3}, {4, 5}});
    CHECK(gamma_b(disjoint, 1) == 0);
    CHECK(codegree_b(disjoint, 0, 2, 1) == 0);
    auto lonely = Hypergraph::make(6, {{0, 1}});
    CHECK(codegree_b(lonely, 4, 5, 1) == 0);
    CHECK_THROWS_AS(codegree_b(lonely, 4, 4, 1), PreconditionViolated);
}

TEST_CASE("theorem 1 hypotheses") {
    // codegree of +-v is m - 4 against D close to 3m/2, so the condition
    // fails once D^eps > 3/2; eps = 0.2 covers m = 32 already
    for (Element m : {32u, 64u}) {
        auto rep = check_thm1_hypotheses(build_schur(RingContext(m)), 0.2);
        CHECK(rep.gamma == m - 4);
        CHECK_FALSE(rep.degenerate);
        CHECK(rep.r == 3);
        CHECK_FALSE(rep.gamma_holds);
        CHECK_FALSE(rep.all_hold);
    }
    auto kap = build_kap(101, 3);
    auto rep = check_thm1_hypotheses(kap, 0.1);
    CHECK(rep.r == 3);
    CHECK(rep.uniform);
    CHECK(rep.deltas.size() == 1);
    CHECK(rep.deltas[0].value == brute_delta(kap, 2));
    CHECK(rep.mean_degree == doctest::Approx(3.0 * kap.edges.size() / 101));

    auto empty = check_thm1_hypotheses(Hypergraph::make(4, {}), 0.1);
    CHECK(empty.degenerate);
}

TEST_CASE("configuration counts") {
    auto fam = pm_pair_family(RingContext(8));
    CHECK(fam.members.size() == 3);
    std::vector<Vertex> s{3, 5}, empty;
    CHECK(count_XG(fam, s) == 1);
    CHECK(count_XG(fam, empty) == 0);
    CHECK(count_XG(ConfigFamily{2, {}}, s) == 0);
    auto rep = xg_report(fam, s, 8);
    CHECK(rep.observed == 1);
    CHECK(rep.p == doctest::Approx(0.25));
    CHECK(rep.expected == doctest::Approx(3 * 0.0625));
}

TEST_CASE("hypergraph json") {
    auto h = build_kap(7, 3);
    auto back = parse_hypergraph_json(to_json(h));
    CHECK(back.num_vertices == h.num_vertices);
    CHECK(back.edges == h.edges);
    std::istringstream in(R"({"num_vertices": 3, "edges": [[0, 1], [2]]})");
    auto g = read_hypergraph_json(in);
    CHECK(g.edges.size() == 2);
    CHECK_THROWS_AS(parse_hypergraph_json("{\"edges\": []}"), InvalidParams);
    CHECK_THROWS_AS(parse_hypergraph_json("{\"num_vertices\": 2, \"edges\": [[0, 5]]}"), InvalidParams);
    CHECK_THROWS_AS(parse_hypergraph_json("not json"), InvalidParams);
}
