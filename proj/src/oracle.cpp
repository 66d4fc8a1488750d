#include "sumfree/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

#include "sumfree/errors.hpp"

namespace sumfree {

namespace {

// S + S = c scan over ordered pairs; independent of the class machinery.
bool mask_sum_free(const std::vector<std::uint8_t>& in, Element m) {
    for (Element a = 0; a < m; ++a) {
        if (!in[a]) continue;
        for (Element b = 0; b < m; ++b) {
            if (in[b] && in[(a + b) % m]) return false;
        }
    }
    return true;
}

std::vector<std::uint8_t> to_mask(std::span<const Element> set, Element m) {
    std::vector<std::uint8_t> in(m, 0);
    for (Element s : set) {
        if (s >= m) throw PreconditionViolated("element outside Z_m");
        in[s] = 1;
    }
    return in;
}

// S u {v} stays sum-free, given S sum-free and v not in S.
bool insertable(const std::vector<std::uint8_t>& in, Element v, Element m) {
    if ((2 * std::uint64_t{v}) % m == v) return false;  // v = 0
    if (in[(2 * std::uint64_t{v}) % m]) return false;
    for (Element s = 0; s < m; ++s) {
        if (!in[s]) continue;
        if (in[(v + s) % m]) return false;                 // v + s in S
        if ((v + s) % m == v) return false;                // s = 0
        if (in[(v + m - s) % m]) return false;             // s + x = v
    }
    return true;
}

}  // namespace

RecomputedState recompute_snapshot(std::span<const Element> chosen, const RingContext& ctx) {
    const Element m = ctx.modulus();
    RecomputedState st;
    st.modulus = m;
    st.in_set = to_mask(chosen, m);
    if (!mask_sum_free(st.in_set, m)) throw NotSumFree("chosen set is not sum-free");

    st.status.assign(m, StatusKind::Closed);
    for (Element v = 0; v < m; ++v) {
        if (st.in_set[v]) {
            st.status[v] = StatusKind::Chosen;
        } else if (insertable(st.in_set, v, m)) {
            st.status[v] = StatusKind::Open;
            ++st.ledger.q;
        }
    }

    st.ledger.vertex.assign(m, VertexCounters{});
    for (Element a = 0; a < m; ++a) {
        for (Element b = a; b < m; ++b) {
            const Element c = static_cast<Element>((std::uint64_t{a} + b) % m);
            std::vector<Element> vs{a, b, c};
            std::sort(vs.begin(), vs.end());
            vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
            if (vs.size() == 1) continue;  // {0}

            int open = 0, closed = 0;
            for (Element u : vs) {
                open += st.status[u] == StatusKind::Open;
                closed += st.status[u] == StatusKind::Closed;
            }
            if (closed == 0 && open == 2) ++st.ledger.e2;
            if (closed == 0 && open == 3) ++st.ledger.e3;

            for (Element u : vs) {
                if (st.status[u] == StatusKind::Chosen) continue;
                bool others_ok = true;
                int others_open = 0;
                for (Element w : vs) {
                    if (w == u) continue;
                    if (st.status[w] == StatusKind::Closed) others_ok = false;
                    if (st.status[w] == StatusKind::Open) ++others_open;
                }
                if (!others_ok) continue;
                auto& cnt = st.ledger.vertex[u];
                const int k = others_open + 1;
                if (u == a || u == b) {
                    if (k == 1) ++cnt.d1l;
                    if (k == 2) ++cnt.d2l;
                    if (k == 3) ++cnt.d3l;
                }
                if (u == c) {
                    if (k == 1) ++cnt.d1r;
                    if (k == 2) ++cnt.d2r;
                    if (k == 3) ++cnt.d3r;
                }
            }
        }
    }

    for (Element v = 1; v < m; ++v) {
        if (!st.in_set[v]) continue;
        const Element w = (m - v) % m;
        if (w == v) {
            ++st.d1r0;
        } else if (v < w && st.in_set[w]) {
            ++st.pairs_distinct;
        }
    }
    st.d1r0 += st.pairs_distinct;
    return st;
}

std::vector<Element> RecomputedState::d2_set(Element v) const {
    // q is in D_2(v) iff q is open now and closed once v joins S.
    const Element m = modulus;
    std::vector<Element> out;
    std::vector<std::uint8_t> with_v = in_set;
    with_v[v] = 1;
    for (Element q = 0; q < m; ++q) {
        if (q == v || status[q] != StatusKind::Open) continue;
        if (!insertable(with_v, q, m)) out.push_back(q);
    }
    return out;
}

bool is_sum_free(std::span<const Element> set, const RingContext& ctx) {
    return mask_sum_free(to_mask(set, ctx.modulus()), ctx.modulus());
}

bool maximality(std::span<const Element> set, const RingContext& ctx) {
    const Element m = ctx.modulus();
    auto in = to_mask(set, m);
    if (!mask_sum_free(in, m)) return false;
    for (Element v = 1; v < m; ++v) {
        if (in[v]) continue;
        in[v] = 1;
        const bool still_free = mask_sum_free(in, m);
        in[v] = 0;
        if (still_free) return false;
    }
    return true;
}

VerifyReport verify_run(const RunRecord& run, const RingContext& ctx) {
    VerifyReport rep;
    const Element m = ctx.modulus();
    auto fail = [&](std::uint64_t step, std::string what) {
        if (rep.clean) {
            rep.clean = false;
            rep.first = Discrepancy{step, std::move(what)};
        }
    };

    for (std::size_t idx = 0; idx < run.frames.size() && rep.clean; ++idx) {
        const AuditFrame& fr = run.frames[idx];
        ++rep.frames_checked;
        if (fr.statuses.size() != m || fr.ledger.vertex.size() != m) {
            fail(fr.step, "frame has wrong size");
            break;
        }
        std::vector<Element> chosen;
        for (Element v = 0; v < m; ++v) {
            if (fr.statuses[v].kind == StatusKind::Chosen) chosen.push_back(v);
        }
        if (!is_sum_free(chosen, ctx)) {
            fail(fr.step, "chosen set is not sum-free");
            break;
        }
        const RecomputedState truth = recompute_snapshot(chosen, ctx);

        for (Element v = 0; v < m; ++v) {
            if (fr.statuses[v].kind != truth.status[v]) {
                fail(fr.step, "status of " + std::to_string(v) + " differs from recomputation");
                break;
            }
        }
        if (!rep.clean) break;
        if (fr.ledger.q != truth.ledger.q) fail(fr.step, "Q differs from recomputation");
        if (fr.ledger.e2 != truth.ledger.e2) fail(fr.step, "E2 differs from recomputation");
        if (fr.ledger.e3 != truth.ledger.e3) fail(fr.step, "E3 differs from recomputation");
        for (Element v = 0; v < m && rep.clean; ++v) {
            if (truth.status[v] == StatusKind::Chosen) continue;
            if (!(fr.ledger.vertex[v] == truth.ledger.vertex[v])) {
                fail(fr.step, "counters of " + std::to_string(v) + " differ from recomputation");
            }
        }
        if (!rep.clean) break;

        std::int64_t sum3 = 0, sum2 = 0;
        for (Element v = 0; v < m; ++v) {
            if (truth.status[v] != StatusKind::Open) continue;
            sum3 += fr.ledger.vertex[v].d3l + fr.ledger.vertex[v].d3r;
            sum2 += fr.ledger.vertex[v].d2l + fr.ledger.vertex[v].d2r;
        }
        if (sum3 != 3 * fr.ledger.e3) fail(fr.step, "sum of D3 over open != 3 E3");
        if (sum2 != 2 * fr.ledger.e2) fail(fr.step, "sum of D2 over open != 2 E2");

        if (fr.next) {
            const Element s = fr.next->chosen;
            if (s >= m || truth.status[s] != StatusKind::Open) {
                fail(fr.step, "chosen element was not open");
                break;
            }
            if (truth.d2_set(s) != fr.next->newly_closed) {
                fail(fr.step, "newly closed set differs from the pre-step D_2 neighborhood");
            }
        } else if (run.termination_step && idx + 1 == run.frames.size()) {
            if (truth.ledger.q != 0) fail(fr.step, "run marked terminated with open elements");
            if (!maximality(chosen, ctx)) fail(fr.step, "final set is not maximal");
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------

namespace {

struct TreeNode {
    std::map<std::uint64_t, Rational> distribution;
    Rational pairs;
    Rational d1r0;
};

class TreeSolver {
public:
    TreeSolver(const RingContext& ctx, std::uint64_t budget) : ctx_(ctx), budget_(budget) {}

    const TreeNode& solve(std::uint64_t mask) {
        if (auto it = memo_.find(mask); it != memo_.end()) return it->second;
        if (memo_.size() >= budget_) {
            throw BudgetExceeded("exact expectation tree exceeded the node budget");
        }
        const Element m = ctx_.modulus();
        std::vector<std::uint8_t> in(m, 0);
        for (Element v = 0; v < m; ++v) in[v] = (mask >> v) & 1U;

        std::vector<Element> open;
        for (Element v = 1; v < m; ++v) {
            if (!in[v] && insertable(in, v, m)) open.push_back(v);
        }
        TreeNode node;
        if (open.empty()) {
            std::vector<Element> chosen;
            for (Element v = 0; v < m; ++v) {
                if (in[v]) chosen.push_back(v);
            }
            const PairCount pc = pair_count(chosen, ctx_);
            node.distribution[chosen.size()] = 1;
            node.pairs = pc.distinct;
            node.d1r0 = pc.d1r0;
        } else {
            const Rational w(1, static_cast<long long>(open.size()));
            for (Element v : open) {
                // copy: solve() may rehash memo_
                const TreeNode child = solve(mask | (std::uint64_t{1} << v));
                for (const auto& [size, prob] : child.distribution) node.distribution[size] += w * prob;
                node.pairs += w * child.pairs;
                node.d1r0 += w * child.d1r0;
            }
        }
        return memo_.emplace(mask, std::move(node)).first->second;
    }

    std::uint64_t nodes() const { return memo_.size(); }

private:
    const RingContext& ctx_;
    std::uint64_t budget_;
    std::unordered_map<std::uint64_t, TreeNode> memo_;
};

}  // namespace

TreeResult exact_expectation_tree(const RingContext& ctx, std::uint64_t node_budget) {
    if (ctx.modulus() > 64) throw BudgetExceeded("exact tree supports m <= 64 only");
    TreeSolver solver(ctx, node_budget);
    const TreeNode root = solver.solve(0);
    TreeResult res;
    res.final_size_distribution = root.distribution;
    for (const auto& [size, prob] : root.distribution) {
        res.expected_final_size += Rational(static_cast<long long>(size)) * prob;
    }
    res.expected_pairs = root.pairs;
    res.expected_d1r0 = root.d1r0;
    res.nodes = solver.nodes();
    return res;
}

// ---------------------------------------------------------------------------

RatioEstimate lemma_ratio_estimate(double x, double y, double ex, double ey) {
    if (x == 0.0 || y == 0.0 || std::abs(ex / x) > 0.5 || std::abs(ey / y) > 0.5) {
        throw PreconditionViolated("need x, y != 0 and |ex/x|, |ey/y| <= 1/2");
    }
    RatioEstimate r;
    r.delta = (x + ex) / (y + ey) - x / y;
    r.first_order = (y * ex - x * ey) / (y * y);
    r.remainder_bound =
        kRatioRemainderConstant * (std::abs(y * ex * ey) + std::abs(x * ey * ey)) / std::abs(y * y * y);
    return r;
}

namespace {

Rational exact(double v) { return Rational(v); }
Rational abs_r(const Rational& v) { return v < 0 ? Rational(-v) : v; }

}  // namespace

bool ratio_lemma_holds_exact(double x, double y, double ex, double ey, const Rational& k) {
    const Rational X = exact(x), Y = exact(y), EX = exact(ex), EY = exact(ey);
    if (X == 0 || Y == 0 || 2 * abs_r(EX) > abs_r(X) || 2 * abs_r(EY) > abs_r(Y)) {
        throw PreconditionViolated("need x, y != 0 and |ex/x|, |ey/y| <= 1/2");
    }
    const Rational delta = (X + EX) / (Y + EY) - X / Y;
    const Rational first = (Y * EX - X * EY) / (Y * Y);
    const Rational bound = k * (abs_r(Y * EX * EY) + abs_r(X * EY * EY)) / abs_r(Y * Y * Y);
    return abs_r(delta - first) <= bound;
}

bool sum_product_holds_exact(std::span<const double> xs, std::span<const double> ys, double x, double y,
                             double delta, double eps) {
    if (xs.size() != ys.size() || xs.empty()) {
        throw PreconditionViolated("sequences must be nonempty and of equal length");
    }
    const Rational X = exact(x), Y = exact(y), D = exact(delta), E = exact(eps);
    Rational sxy = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Rational a = exact(xs[i]), b = exact(ys[i]);
        if (abs_r(a - X) > D || abs_r(b - Y) > E) throw PreconditionViolated("sequence element outside its band");
        sxy += a * b;
        sx += a;
        sy += b;
    }
    const auto count = static_cast<long long>(xs.size());
    return abs_r(sxy - sx * sy / count) <= 2 * count * D * E;
}

SumProductCheck lemma_sum_product(std::span<const double> xs, std::span<const double> ys,
                                  double x, double y, double delta, double eps) {
    if (xs.size() != ys.size() || xs.empty()) {
        throw PreconditionViolated("sequences must be nonempty and of equal length");
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (std::abs(xs[i] - x) > delta || std::abs(ys[i] - y) > eps) {
            throw PreconditionViolated("sequence element outside its band");
        }
    }
    double sxy = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += xs[i] * ys[i];
        sx += xs[i];
        sy += ys[i];
    }
    const auto count = static_cast<double>(xs.size());
    SumProductCheck c;
    c.lhs = std::abs(sxy - sx * sy / count);
    c.bound = 2.0 * count * delta * eps;
    c.holds = c.lhs <= c.bound;
    return c;
}

// ---------------------------------------------------------------------------

D2Decomposition d2_decomposition(const RecomputedState& st, Element v) {
    if (v >= st.modulus || st.status[v] != StatusKind::Open) {
        throw NotOpen("decomposition needs an open vertex");
    }
    D2Decomposition d;
    d.d2_size = st.d2_set(v).size();
    d.d2l = st.ledger.vertex[v].d2l;
    d.d2r = st.ledger.vertex[v].d2r;
    d.overlap = d.d2l + d.d2r - static_cast<std::int64_t>(d.d2_size);
    const Element dbl = static_cast<Element>((2 * std::uint64_t{v}) % st.modulus);
    d.d1r_double = st.status[dbl] == StatusKind::Chosen ? 0 : st.ledger.vertex[dbl].d1r;
    d.d1r_zero = st.ledger.vertex[0].d1r;
    return d;
}

std::int64_t max_d1_nonzero(const RecomputedState& st) {
    std::int64_t best = 0;
    for (Element v = 1; v < st.modulus; ++v) {
        if (st.status[v] == StatusKind::Chosen) continue;
        best = std::max({best, st.ledger.vertex[v].d1l, st.ledger.vertex[v].d1r});
    }
    return best;
}

}  // namespace sumfree
