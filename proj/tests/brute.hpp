#pragma once

// Slow reference computations used only by the tests.

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "sumfree/process.hpp"

namespace brute {

using sumfree::Element;

inline bool sum_free(const std::set<Element>& s, Element m) {
    for (Element a : s)
        for (Element b : s)
            if (s.count((a + b) % m)) return false;
    return true;
}

struct Counts {
    std::vector<int> kind;  // 0 open, 1 chosen, 2 closed
    std::int64_t q = 0, e2 = 0, e3 = 0;
    std::vector<sumfree::VertexCounters> c;
};

inline Counts counts(const std::vector<Element>& chosen, Element m) {
    std::set<Element> s(chosen.begin(), chosen.end());
    Counts r;
    r.kind.assign(m, 2);
    r.c.assign(m, {});
    for (Element v = 0; v < m; ++v) {
        if (s.count(v)) {
            r.kind[v] = 1;
            continue;
        }
        auto t = s;
        t.insert(v);
        if (sum_free(t, m)) {
            r.kind[v] = 0;
            ++r.q;
        }
    }
    for (Element a = 0; a < m; ++a) {
        for (Element b = a; b < m; ++b) {
            const Element c = (a + b) % m;
            std::set<Element> vs{a, b, c};
            if (vs.size() == 1) continue;
            int open = 0, closed = 0;
            for (Element u : vs) open += r.kind[u] == 0, closed += r.kind[u] == 2;
            if (!closed && open == 2) ++r.e2;
            if (!closed && open == 3) ++r.e3;
            for (Element u : vs) {
                if (r.kind[u] == 1) continue;
                int others_open = 0;
                bool blocked = false;
                for (Element w : vs) {
                    if (w == u) continue;
                    blocked |= r.kind[w] == 2;
                    others_open += r.kind[w] == 0;
                }
                if (blocked) continue;
                const int k = 1 + others_open;
                auto& x = r.c[u];
                if (u == a || u == b) (k == 1 ? x.d1l : k == 2 ? x.d2l : x.d3l)++;
                if (u == c) (k == 1 ? x.d1r : k == 2 ? x.d2r : x.d3r)++;
            }
        }
    }
    return r;
}

// Open elements closed by adding v.
inline std::vector<Element> d2(const std::vector<Element>& chosen, Element v, Element m) {
    const Counts before = counts(chosen, m);
    auto with = chosen;
    with.push_back(v);
    const Counts after = counts(with, m);
    std::vector<Element> out;
    for (Element q = 0; q < m; ++q) {
        if (q != v && before.kind[q] == 0 && after.kind[q] == 2) out.push_back(q);
    }
    return out;
}

inline std::uint64_t distinct_pairs(const std::vector<Element>& chosen, Element m) {
    std::set<Element> s(chosen.begin(), chosen.end());
    std::uint64_t k = 0;
    for (Element v : s) k += v != 0 && 2 * v != m && v < m - v && s.count(m - v);
    return k;
}

}  // namespace brute
