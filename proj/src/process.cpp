#include "sumfree/process.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "sumfree/errors.hpp"

namespace sumfree {

const char* to_string(Mode mode) { return mode == Mode::FullLedger ? "full" : "lean"; }

// ---------------------------------------------------------------------------
// OpenIndex: Fenwick tree over the 0/1 open indicator.

OpenIndex::OpenIndex(Element m) : tree_(std::size_t{m} + 1, 0) {
    high_bit_ = m == 0 ? 0 : std::bit_floor(m);
}

void OpenIndex::add(Element v, std::int64_t delta) {
    count_ = static_cast<std::uint64_t>(static_cast<std::int64_t>(count_) + delta);
    for (std::size_t i = std::size_t{v} + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
}

Element OpenIndex::select(std::uint64_t k) const {
    // Largest prefix position whose count is <= k; the answer is the next one.
    std::size_t pos = 0;
    auto rem = static_cast<std::int64_t>(k);
    for (std::size_t bit = high_bit_; bit != 0; bit >>= 1) {
        std::size_t next = pos + bit;
        if (next < tree_.size() && tree_[next] <= rem) {
            pos = next;
            rem -= tree_[next];
        }
    }
    return static_cast<Element>(pos);
}

// ---------------------------------------------------------------------------

ProcessState::ProcessState(const RingContext& ctx, std::uint64_t seed, Mode mode)
    : ctx_(ctx), mode_(mode), status_(ctx.modulus()), open_(ctx.modulus()), rng_(seed) {}

ProcessState ProcessState::init(const RingContext& ctx, std::uint64_t seed, Mode mode) {
    ProcessState st(ctx, seed, mode);
    st.status_[0] = ElementStatus{StatusKind::Closed, 0};
    for (Element v = 1; v < ctx.modulus(); ++v) st.open_.insert(v);
    st.ledger_.q = st.open_.size();
    if (mode == Mode::FullLedger) st.build_full_ledger();
    return st;
}

void ProcessState::build_full_ledger() {
    const Element m = ctx_.modulus();
    ledger_.vertex.assign(m, VertexCounters{});
    ledger_.e2 = ledger_.e3 = 0;
    for (Element a = 0; a < m; ++a) {
        for (Element b = a; b < m; ++b) apply_class(canonical_class(a, b, ctx_), +1);
    }
}

template <typename Fn>
void ProcessState::for_each_class_through(Element x, Fn&& fn) const {
    const Element m = ctx_.modulus();
    for (Element b = 0; b < m; ++b) fn(canonical_class(x, b, ctx_));
    // x on the right only; a = 0 would repeat the pair {0, x}.
    for (Element a = 1; a < m; ++a) {
        Element b = ctx_.sub(x, a);
        if (a <= b) fn(canonical_class(a, b, ctx_));
    }
}

void ProcessState::apply_class(const EquationClass& e, std::int64_t sign) {
    apply_class_as(e, e.vertex_buf[0], status_[e.vertex_buf[0]].kind, sign);
}

// Counts e as if x had status `xkind`.
void ProcessState::apply_class_as(const EquationClass& e, Element x, StatusKind xkind, std::int64_t sign) {
    // The singleton class {0} is what closes 0; it is not a degree of anything.
    if (e.vertex_count == 1) return;
    StatusKind kinds[3];
    int open = 0, closed = 0;
    Element closed_vertex = 0;
    for (std::uint8_t i = 0; i < e.vertex_count; ++i) {
        const Element u = e.vertex_buf[i];
        kinds[i] = u == x ? xkind : status_[u].kind;
        switch (kinds[i]) {
            case StatusKind::Open: ++open; break;
            case StatusKind::Closed: ++closed; closed_vertex = u; break;
            case StatusKind::Chosen: break;
        }
    }
    if (closed >= 2) return;
    if (closed == 0) {
        if (open == 2) ledger_.e2 += sign;
        if (open == 3) ledger_.e3 += sign;
    }
    for (std::uint8_t i = 0; i < e.vertex_count; ++i) {
        const Element u = e.vertex_buf[i];
        if (kinds[i] == StatusKind::Chosen) continue;
        if (closed == 1 && u != closed_vertex) continue;
        const int k = 1 + open - (kinds[i] == StatusKind::Open ? 1 : 0);
        auto& c = ledger_.vertex[u];
        if (u == e.lo || u == e.hi) (k == 3 ? c.d3l : k == 2 ? c.d2l : c.d1l) += sign;
        if (u == e.right) (k == 3 ? c.d3r : k == 2 ? c.d2r : c.d1r) += sign;
    }
}

void ProcessState::change_status(Element x, ElementStatus next) {
    if (mode_ == Mode::FullLedger) {
        const VertexCounters frozen = ledger_.vertex[x];
        const StatusKind before = status_[x].kind;
        for_each_class_through(x, [&](const EquationClass& e) {
            apply_class_as(e, x, before, -1);
            apply_class_as(e, x, next.kind, +1);
        });
        status_[x] = next;
        if (next.kind == StatusKind::Chosen) ledger_.vertex[x] = frozen;
    } else {
        status_[x] = next;
    }
    open_.erase(x);
    ledger_.q = open_.size();
}

VertexCounters ProcessState::counters_for(Element v) const {
    VertexCounters c;
    for_each_class_through(v, [&](const EquationClass& e) {
        if (e.vertex_count == 1) return;
        int open_others = 0;
        for (Element u : e.vertices()) {
            if (u == v) continue;
            if (status_[u].kind == StatusKind::Closed) return;
            if (status_[u].kind == StatusKind::Open) ++open_others;
        }
        const int k = 1 + open_others;
        const RoleSet roles = e.roles_of(v);
        if (roles.left) (k == 3 ? c.d3l : k == 2 ? c.d2l : c.d1l) += 1;
        if (roles.right) (k == 3 ? c.d3r : k == 2 ? c.d2r : c.d1r) += 1;
    });
    return c;
}

std::vector<Element> ProcessState::d2_by_scan(Element v) const {
    std::vector<Element> out;
    for_each_class_through(v, [&](const EquationClass& e) {
        int open_others = 0;
        Element q = 0;
        for (Element u : e.vertices()) {
            if (u == v) continue;
            if (status_[u].kind == StatusKind::Closed) return;
            if (status_[u].kind == StatusKind::Open) {
                ++open_others;
                q = u;
            }
        }
        if (open_others == 1) out.push_back(q);
    });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Element> ProcessState::d2_by_candidates(Element v) const {
    // A class holding v, an open q and otherwise chosen elements is one of
    // v+s=q, q+s=v, v+q=s (s chosen or s = v), or q+q=v.
    std::vector<Element> out;
    auto consider = [&](Element q) {
        if (q != v && status_[q].kind == StatusKind::Open) out.push_back(q);
    };
    consider(ctx_.add(v, v));
    for (Element s : chosen_) {
        consider(ctx_.add(v, s));
        consider(ctx_.sub(v, s));
        consider(ctx_.sub(s, v));
    }
    for (Element q : ctx_.halves(v)) consider(q);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Element> ProcessState::d2_neighborhood(Element v) const {
    if (!ctx_.contains(v) || !is_open(v)) {
        throw NotOpen("element " + std::to_string(v) + " is not open");
    }
    return mode_ == Mode::FullLedger ? d2_by_scan(v) : d2_by_candidates(v);
}

StepReport ProcessState::step() {
    if (terminated()) throw ProcessTerminated("no open elements remain");
    const std::uint64_t k = rng_.uniform_below(open_.size());
    return step_with(open_.select(k));
}

StepReport ProcessState::step_with(Element s) {
    if (terminated()) throw ProcessTerminated("no open elements remain");
    if (!ctx_.contains(s) || !is_open(s)) {
        throw NotOpen("element " + std::to_string(s) + " is not open");
    }
    StepReport report;
    report.step = step_;
    report.chosen = s;
    report.newly_closed = d2_neighborhood(s);

    const bool full = mode_ == Mode::FullLedger;
    const std::uint64_t q_before = ledger_.q;
    const std::uint64_t d1_before = d1r0();
    const std::int64_t e2_before = ledger_.e2, e3_before = ledger_.e3;
    const VertexCounters zero_before = full ? ledger_.vertex[0] : VertexCounters{};

    change_status(s, ElementStatus{StatusKind::Chosen, step_});
    const Element neg = ctx_.negate(s);
    if (ctx_.half() && s == *ctx_.half()) {
        self_pair_ = true;
    } else if (neg != s && is_chosen(neg)) {
        ++pairs_distinct_;
    }
    chosen_.push_back(s);
    for (Element q : report.newly_closed) change_status(q, ElementStatus{StatusKind::Closed, step_});
    ++step_;

    report.delta.q = static_cast<std::int64_t>(ledger_.q) - static_cast<std::int64_t>(q_before);
    report.delta.d1r0 = static_cast<std::int64_t>(d1r0()) - static_cast<std::int64_t>(d1_before);
    if (full) {
        report.delta.e2 = ledger_.e2 - e2_before;
        report.delta.e3 = ledger_.e3 - e3_before;
        report.delta.d2r0 = ledger_.vertex[0].d2r - zero_before.d2r;
        report.delta.d3r0 = ledger_.vertex[0].d3r - zero_before.d3r;
    }
    return report;
}

std::vector<Element> ProcessState::open_elements() const {
    std::vector<Element> out;
    out.reserve(open_.size());
    for (Element v = 0; v < ctx_.modulus(); ++v) {
        if (is_open(v)) out.push_back(v);
    }
    return out;
}

std::vector<Element> ProcessState::chosen_set() const {
    std::vector<Element> out = chosen_;
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------

PairCount pair_count(std::span<const Element> chosen, const RingContext& ctx) {
    std::vector<std::uint8_t> in(ctx.modulus(), 0);
    for (Element s : chosen) in[s] = 1;
    PairCount pc;
    for (Element v = 1; v < ctx.modulus(); ++v) {
        if (!in[v]) continue;
        const Element w = ctx.negate(v);
        if (w == v) {
            ++pc.d1r0;  // v = n
        } else if (v < w && in[w]) {
            ++pc.distinct;
        }
    }
    pc.d1r0 += pc.distinct;
    return pc;
}

PairCount pair_count(const ProcessState& state) {
    return PairCount{state.d1r0(), state.pairs_distinct()};
}

namespace {

std::int64_t value_of(const ProcessState& st, TrackedVariable var) {
    using K = TrackedVariable::Kind;
    const Ledger& l = st.ledger();
    switch (var.kind) {
        case K::Q: return static_cast<std::int64_t>(l.q);
        case K::E2: return l.e2;
        case K::E3: return l.e3;
        case K::D1R0: return static_cast<std::int64_t>(st.d1r0());
        case K::D2R0: return l.vertex[0].d2r;
        case K::D3R0: return l.vertex[0].d3r;
        case K::D3L: return l.vertex[var.vertex].d3l;
        case K::D3R: return l.vertex[var.vertex].d3r;
        case K::D2L: return l.vertex[var.vertex].d2l;
        case K::D2R: return l.vertex[var.vertex].d2r;
        case K::D1L: return l.vertex[var.vertex].d1l;
        case K::D1R: return l.vertex[var.vertex].d1r;
    }
    throw UnknownVariable("unknown tracked variable");
}

void require_full_and_open(const ProcessState& st) {
    if (st.mode() != Mode::FullLedger) {
        throw ModeUnsupported("drift computation needs FULL_LEDGER mode");
    }
    if (st.terminated()) throw ProcessTerminated("no open elements remain");
}

}  // namespace

Rational expected_one_step_delta(const ProcessState& state, TrackedVariable var) {
    require_full_and_open(state);
    if (var.kind >= TrackedVariable::Kind::D3L && !state.ring().contains(var.vertex)) {
        throw UnknownVariable("vertex out of range");
    }
    const std::int64_t before = value_of(state, var);
    Rational total = 0;
    for (Element s : state.open_elements()) {
        ProcessState next = state;
        next.step_with(s);
        total += value_of(next, var) - before;
    }
    return total / Rational(state.open_count());
}

Rational drift_q_closed_form(const ProcessState& state) {
    require_full_and_open(state);
    std::uint64_t sum = 0;
    for (Element q : state.open_elements()) sum += state.d2_neighborhood(q).size();
    return Rational(-1) - Rational(sum) / Rational(state.open_count());
}

Rational drift_d1r0_closed_form(const ProcessState& state) {
    require_full_and_open(state);
    return Rational(state.ledger().vertex[0].d2r) / Rational(state.open_count());
}

// ---------------------------------------------------------------------------

std::uint64_t default_cadence(Element m) { return m <= 4096 ? 1 : 16; }

TrajectorySnapshot take_snapshot(const ProcessState& state, std::span<const Element> sample) {
    const RingContext& ctx = state.ring();
    TrajectorySnapshot snap;
    snap.step = state.steps();
    snap.t = static_cast<double>(state.steps()) / std::sqrt(ctx.time_scale_n());
    snap.q = state.open_count();
    snap.d1r0 = state.d1r0();
    snap.pairs_distinct = state.pairs_distinct();

    auto counters = [&](Element v) {
        return state.mode() == Mode::FullLedger ? state.ledger().vertex[v] : state.counters_for(v);
    };
    for (Element v : sample) {
        if (!ctx.contains(v)) continue;
        snap.samples.push_back({v, state.is_chosen(v), counters(v)});
    }

    if (state.mode() == Mode::FullLedger) {
        const Ledger& l = state.ledger();
        snap.e2 = l.e2;
        snap.e3 = l.e3;
        snap.d2r0 = l.vertex[0].d2r;
        snap.d3r0 = l.vertex[0].d3r;
        CounterExtremes ex;
        std::int64_t max_d1 = 0;
        auto track = [](bool& any, std::int64_t& lo, std::int64_t& hi, std::int64_t x) {
            if (!any) {
                lo = hi = x;
                any = true;
            } else {
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
        };
        for (Element v = 1; v < ctx.modulus(); ++v) {
            if (state.is_chosen(v)) continue;
            const auto& c = l.vertex[v];
            max_d1 = std::max({max_d1, c.d1l, c.d1r});
            track(ex.d3r_any, ex.d3r_min, ex.d3r_max, c.d3r);
            if (state.is_chosen(ctx.negate(v))) continue;
            track(ex.d3l_any, ex.d3l_min, ex.d3l_max, c.d3l);
            track(ex.d2l_any, ex.d2l_min, ex.d2l_max, c.d2l);
            track(ex.d2r_any, ex.d2r_min, ex.d2r_max, c.d2r);
        }
        snap.max_d1_nonzero = max_d1;
        snap.extremes = ex;
    } else {
        const VertexCounters zero = state.counters_for(0);
        snap.d2r0 = zero.d2r;
        snap.d3r0 = zero.d3r;
        std::optional<std::int64_t> max_d1;
        for (const auto& s : snap.samples) {
            if (s.vertex == 0 || s.chosen) continue;
            max_d1 = std::max({max_d1.value_or(0), s.counters.d1l, s.counters.d1r});
        }
        snap.max_d1_nonzero = max_d1;
    }
    return snap;
}

RunRecord run(ProcessState& state, const RunOptions& options) {
    RunRecord rec;
    rec.modulus = state.ring().modulus();
    rec.mode = state.mode();
    const std::uint64_t cadence =
        options.cadence == 0 ? default_cadence(state.ring().modulus()) : options.cadence;
    const bool frames = options.keep_frames && state.mode() == Mode::FullLedger;

    auto done = [&] {
        if (state.terminated()) return true;
        return options.stop == RunOptions::Stop::Horizon && state.steps() >= options.horizon;
    };

    rec.snapshots.push_back(take_snapshot(state, options.sample));
    while (!done()) {
        AuditFrame frame;
        if (frames) {
            frame.step = state.steps();
            frame.ledger = state.ledger();
            frame.statuses.assign(state.statuses().begin(), state.statuses().end());
        }
        StepReport report = state.step();
        if (frames) {
            frame.next = std::move(report);
            rec.frames.push_back(std::move(frame));
        }
        if (state.steps() % cadence == 0) rec.snapshots.push_back(take_snapshot(state, options.sample));
    }
    if (rec.snapshots.back().step != state.steps()) {
        rec.snapshots.push_back(take_snapshot(state, options.sample));
    }
    if (frames) {
        AuditFrame last;
        last.step = state.steps();
        last.ledger = state.ledger();
        last.statuses.assign(state.statuses().begin(), state.statuses().end());
        rec.frames.push_back(std::move(last));
    }
    if (state.terminated()) rec.termination_step = state.steps();
    rec.chosen_sequence = state.chosen_sequence();
    rec.final_size = state.chosen_sequence().size();
    rec.final_d1r0 = state.d1r0();
    rec.final_pairs_distinct = state.pairs_distinct();
    return rec;
}

}  // namespace sumfree
