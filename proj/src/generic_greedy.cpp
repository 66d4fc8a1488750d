#include "sumfree/generic_greedy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <iterator>
#include <map>
#include <sstream>

#include "json.hpp"

#include "sumfree/errors.hpp"
#include "sumfree/process.hpp"
#include "sumfree/rng.hpp"

namespace sumfree {

Hypergraph Hypergraph::make(std::uint32_t num_vertices, std::vector<Edge> edges, std::string label) {
    for (auto& e : edges) {
        if (e.empty()) throw InvalidParams("hypergraph edges must be nonempty");
        std::sort(e.begin(), e.end());
        if (std::adjacent_find(e.begin(), e.end()) != e.end()) {
            throw InvalidParams("hypergraph edge repeats a vertex");
        }
        if (e.back() >= num_vertices) throw InvalidParams("hypergraph vertex out of range");
    }
    std::sort(edges.begin(), edges.end());
    Hypergraph h;
    h.num_vertices = num_vertices;
    h.label = std::move(label);
    for (auto& e : edges) {
        if (!h.edges.empty() && h.edges.back() == e) {
            ++h.multiplicity.back();
        } else {
            h.edges.push_back(std::move(e));
            h.multiplicity.push_back(1);
        }
    }
    return h;
}

namespace {

std::vector<std::vector<std::uint32_t>> incidence(const Hypergraph& h) {
    std::vector<std::vector<std::uint32_t>> inc(h.num_vertices);
    for (std::uint32_t i = 0; i < h.edges.size(); ++i) {
        for (Vertex v : h.edges[i]) inc[v].push_back(i);
    }
    return inc;
}

std::uint64_t intersection_size(const Edge& a, const Edge& b) {
    std::uint64_t k = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++k, ++i, ++j;
        }
    }
    return k;
}

bool has(const Edge& e, Vertex v) { return std::binary_search(e.begin(), e.end(), v); }

}  // namespace

GreedyResult greedy_run(const Hypergraph& h, std::uint64_t seed) {
    enum class St : std::uint8_t { Open, Chosen, Closed };
    const auto inc = incidence(h);
    std::vector<St> st(h.num_vertices, St::Open);
    std::vector<std::uint32_t> chosen_count(h.edges.size(), 0);
    OpenIndex open(std::max<std::uint32_t>(h.num_vertices, 1));
    GreedyResult res;

    for (const auto& e : h.edges) {
        if (e.size() == 1 && st[e[0]] == St::Open) {
            st[e[0]] = St::Closed;
            res.initially_closed.push_back(e[0]);
        }
    }
    std::sort(res.initially_closed.begin(), res.initially_closed.end());
    for (Vertex v = 0; v < h.num_vertices; ++v) {
        if (st[v] == St::Open) open.insert(v);
    }

    Xoshiro256 rng(seed);
    while (open.size() > 0) {
        const Vertex s = open.select(rng.uniform_below(open.size()));
        st[s] = St::Chosen;
        open.erase(s);
        GreedyStep step{s, {}};
        for (std::uint32_t ei : inc[s]) {
            const Edge& e = h.edges[ei];
            if (++chosen_count[ei] + 1 != e.size()) continue;
            for (Vertex u : e) {
                if (st[u] == St::Open) {
                    st[u] = St::Closed;
                    open.erase(u);
                    step.newly_closed.push_back(u);
                }
            }
        }
        std::sort(step.newly_closed.begin(), step.newly_closed.end());
        res.independent_set.push_back(s);
        res.trace.push_back(std::move(step));
    }
    return res;
}

bool is_maximal_independent(const Hypergraph& h, std::span<const Vertex> set) {
    std::vector<std::uint8_t> in(h.num_vertices, 0);
    for (Vertex v : set) {
        if (v >= h.num_vertices) return false;
        in[v] = 1;
    }
    std::vector<std::uint8_t> blocked(h.num_vertices, 0);
    for (const auto& e : h.edges) {
        std::uint32_t outside = 0;
        Vertex last = 0;
        for (Vertex u : e) {
            if (!in[u]) {
                ++outside;
                last = u;
            }
        }
        if (outside == 0) return false;
        if (outside == 1) blocked[last] = 1;
    }
    for (Vertex v = 0; v < h.num_vertices; ++v) {
        if (!in[v] && !blocked[v]) return false;
    }
    return true;
}

std::uint64_t delta_a(const Hypergraph& h, std::uint32_t a) {
    if (a == 0) return h.edges.size();
    std::map<std::vector<Vertex>, std::uint64_t> deg;
    for (const auto& e : h.edges) {
        if (e.size() < a) continue;
        // Walk the a-subsets of e in lexicographic order.
        std::vector<std::uint32_t> idx(a);
        for (std::uint32_t i = 0; i < a; ++i) idx[i] = i;
        while (true) {
            std::vector<Vertex> sub(a);
            for (std::uint32_t i = 0; i < a; ++i) sub[i] = e[idx[i]];
            ++deg[sub];
            std::int64_t i = static_cast<std::int64_t>(a) - 1;
            while (i >= 0 && idx[i] == e.size() - a + i) --i;
            if (i < 0) break;
            ++idx[i];
            for (std::uint32_t j = i + 1; j < a; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
    std::uint64_t best = 0;
    for (const auto& [sub, d] : deg) best = std::max(best, d);
    return best;
}

std::uint64_t codegree_b(const Hypergraph& h, Vertex v, Vertex v2, std::uint32_t b) {
    if (v == v2) throw PreconditionViolated("codegree needs distinct vertices");
    std::vector<const Edge*> with_v, with_v2;
    for (const auto& e : h.edges) {
        const bool a = has(e, v), c = has(e, v2);
        if (a && !c) with_v.push_back(&e);
        if (c && !a) with_v2.push_back(&e);
    }
    std::uint64_t count = 0;
    for (const Edge* e : with_v) {
        for (const Edge* f : with_v2) count += intersection_size(*e, *f) == b;
    }
    return count;
}

std::uint64_t gamma_b(const Hypergraph& h, std::uint32_t b) {
    std::map<std::pair<Vertex, Vertex>, std::uint64_t> cod;
    const std::size_t ne = h.edges.size();
    for (std::size_t i = 0; i < ne; ++i) {
        const Edge& e = h.edges[i];
        for (std::size_t j = 0; j < ne; ++j) {
            if (i == j) continue;
            const Edge& f = h.edges[j];
            if (intersection_size(e, f) != b) continue;
            for (Vertex v : e) {
                if (has(f, v)) continue;
                for (Vertex w : f) {
                    if (!has(e, w)) ++cod[{v, w}];
                }
            }
        }
    }
    std::uint64_t best = 0;
    for (const auto& [key, c] : cod) best = std::max(best, c);
    return best;
}

Thm1Report check_thm1_hypotheses(const Hypergraph& h, double eps) {
    Thm1Report rep;
    if (h.edges.empty() || h.num_vertices == 0) {
        rep.degenerate = true;
        return rep;
    }
    std::vector<std::uint64_t> degree(h.num_vertices, 0);
    for (const auto& e : h.edges) {
        rep.r = std::max<std::uint32_t>(rep.r, static_cast<std::uint32_t>(e.size()));
        for (Vertex v : e) ++degree[v];
    }
    for (const auto& e : h.edges) rep.uniform = rep.uniform && e.size() == rep.r;
    rep.min_degree = *std::min_element(degree.begin(), degree.end());
    rep.max_degree = *std::max_element(degree.begin(), degree.end());
    std::uint64_t total = 0;
    for (auto d : degree) total += d;
    rep.mean_degree = static_cast<double>(total) / h.num_vertices;
    if (rep.r < 2) {
        rep.degenerate = true;
        return rep;
    }

    const double D = rep.mean_degree;
    const double r = rep.r;
    rep.all_hold = true;
    for (std::uint32_t ell = 2; ell + 1 <= rep.r; ++ell) {
        DeltaCheck c;
        c.ell = ell;
        c.value = delta_a(h, ell);
        c.bound = std::pow(D, (r - ell) / (r - 1) - eps);
        c.holds = static_cast<double>(c.value) < c.bound;
        rep.all_hold = rep.all_hold && c.holds;
        rep.deltas.push_back(c);
    }
    rep.gamma = gamma_b(h, rep.r - 1);
    rep.gamma_bound = std::pow(D, 1.0 - eps);
    rep.gamma_holds = static_cast<double>(rep.gamma) < rep.gamma_bound;
    rep.all_hold = rep.all_hold && rep.gamma_holds;
    return rep;
}

std::uint64_t count_XG(const ConfigFamily& family, std::span<const Vertex> set) {
    std::vector<Vertex> s(set.begin(), set.end());
    std::sort(s.begin(), s.end());
    std::uint64_t count = 0;
    for (const auto& mem : family.members) {
        bool inside = true;
        for (Vertex v : mem) inside = inside && std::binary_search(s.begin(), s.end(), v);
        count += inside && !mem.empty();
    }
    return count;
}

ConfigFamily pm_pair_family(const RingContext& ctx) {
    ConfigFamily fam;
    fam.s = 2;
    for (Element v = 1; v < ctx.modulus(); ++v) {
        const Element w = ctx.negate(v);
        if (v < w) fam.members.push_back({v, w});
    }
    return fam;
}

XGReport xg_report(const ConfigFamily& family, std::span<const Vertex> set, std::uint32_t num_vertices) {
    XGReport r;
    r.observed = count_XG(family, set);
    r.p = num_vertices == 0 ? 0.0 : static_cast<double>(set.size()) / num_vertices;
    r.expected = static_cast<double>(family.members.size()) * std::pow(r.p, family.s);
    return r;
}

Hypergraph build_schur(const RingContext& ctx) {
    std::vector<Edge> edges;
    for (const EquationClass& e : enumerate_classes(ctx)) {
        auto vs = e.vertices();
        edges.emplace_back(vs.begin(), vs.end());
    }
    return Hypergraph::make(ctx.modulus(), std::move(edges), "schur m=" + std::to_string(ctx.modulus()));
}

Hypergraph build_kap(std::uint32_t n, std::uint32_t k) {
    if (n == 0 || k == 0 || k > n) throw InvalidParams("k-AP family needs 1 <= k <= n");
    std::vector<Edge> edges;
    for (std::uint32_t a = 0; a < n; ++a) {
        for (std::uint32_t d = 1; d < n; ++d) {
            Edge e;
            for (std::uint64_t j = 0; j < k; ++j) e.push_back(static_cast<Vertex>((a + j * d) % n));
            std::sort(e.begin(), e.end());
            e.erase(std::unique(e.begin(), e.end()), e.end());
            edges.push_back(std::move(e));
        }
    }
    return Hypergraph::make(n, std::move(edges),
                            std::to_string(k) + "-AP n=" + std::to_string(n));
}

Hypergraph parse_hypergraph_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParams(std::string("hypergraph JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("num_vertices") || !j.contains("edges") ||
        !j["num_vertices"].is_number_unsigned() || !j["edges"].is_array()) {
        throw InvalidParams("hypergraph JSON needs num_vertices and edges");
    }
    std::vector<Edge> edges;
    for (const auto& e : j["edges"]) {
        if (!e.is_array()) throw InvalidParams("hypergraph edge must be an array");
        Edge edge;
        for (const auto& v : e) {
            if (!v.is_number_unsigned()) throw InvalidParams("hypergraph vertex must be a nonnegative integer");
            edge.push_back(v.get<Vertex>());
        }
        edges.push_back(std::move(edge));
    }
    return Hypergraph::make(j["num_vertices"].get<std::uint32_t>(), std::move(edges),
                            j.value("label", std::string{}));
}

Hypergraph read_hypergraph_json(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_hypergraph_json(ss.str());
}

std::string to_json(const Hypergraph& h) {
    nlohmann::json j;
    j["num_vertices"] = h.num_vertices;
    j["edges"] = h.edges;
    if (!h.label.empty()) j["label"] = h.label;
    return j.dump();
}

}  // namespace sumfree
