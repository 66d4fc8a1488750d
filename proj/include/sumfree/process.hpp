#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "sumfree/ring.hpp"
#include "sumfree/rng.hpp"

namespace sumfree {

using Rational = boost::multiprecision::cpp_rational;

enum class Mode { FullLedger, Lean };

const char* to_string(Mode mode);

enum class StatusKind : std::uint8_t { Open, Chosen, Closed };

struct ElementStatus {
    StatusKind kind = StatusKind::Open;
    std::uint64_t step = 0;  // step at which the element left OPEN

    bool operator==(const ElementStatus&) const = default;
};

// Degree counters of one vertex, split by role and by k = 1 + (number of
// other open vertices) in the class. Only classes whose other vertices are
// all open or chosen are counted.
struct VertexCounters {
    std::int64_t d3l = 0, d3r = 0;
    std::int64_t d2l = 0, d2r = 0;
    std::int64_t d1l = 0, d1r = 0;

    bool operator==(const VertexCounters&) const = default;
};

struct Ledger {
    std::uint64_t q = 0;
    std::int64_t e2 = 0;
    std::int64_t e3 = 0;
    // Indexed by element; empty in LEAN mode. Entries of chosen elements are
    // frozen at the value they had when chosen.
    std::vector<VertexCounters> vertex;
};

// Bounded order-statistics over the open set: the k-th open element in
// ascending order in O(log m).
class OpenIndex {
public:
    OpenIndex() = default;
    explicit OpenIndex(Element m);

    void insert(Element v) { add(v, +1); }
    void erase(Element v) { add(v, -1); }
    std::uint64_t size() const { return count_; }
    Element select(std::uint64_t k) const;

private:
    void add(Element v, std::int64_t delta);

    std::vector<std::int64_t> tree_;
    Element high_bit_ = 0;
    std::uint64_t count_ = 0;
};

// Signed one-step changes. LEAN mode fills only q and d1r0.
struct LedgerDelta {
    std::int64_t q = 0;
    std::int64_t d1r0 = 0;
    std::optional<std::int64_t> e2, e3, d2r0, d3r0;
};

struct StepReport {
    std::uint64_t step = 0;  // index i of the step taken (S(i) -> S(i+1))
    Element chosen = 0;
    std::vector<Element> newly_closed;  // ascending
    LedgerDelta delta;
};

// Which tracked quantity a drift computation refers to.
struct TrackedVariable {
    enum class Kind { Q, E2, E3, D1R0, D2R0, D3R0, D3L, D3R, D2L, D2R, D1L, D1R };
    Kind kind = Kind::Q;
    Element vertex = 0;  // used by the per-vertex kinds only
};

class ProcessState {
public:
    static ProcessState init(const RingContext& ctx, std::uint64_t seed, Mode mode);

    // Draws the next element uniformly from the open list and applies it.
    StepReport step();
    // Applies a caller-chosen open element without consuming randomness.
    StepReport step_with(Element s);

    // Open q != v that share with v a class whose remaining vertices are chosen;
    // exactly the set closed if v is chosen now.
    std::vector<Element> d2_neighborhood(Element v) const;

    // Counters of v computed from the statuses alone, O(m).
    VertexCounters counters_for(Element v) const;

    const RingContext& ring() const { return ctx_; }
    Mode mode() const { return mode_; }
    std::uint64_t steps() const { return step_; }
    std::uint64_t open_count() const { return open_.size(); }
    bool terminated() const { return open_.size() == 0; }
    const ElementStatus& status(Element v) const { return status_[v]; }
    std::span<const ElementStatus> statuses() const { return status_; }
    bool is_open(Element v) const { return status_[v].kind == StatusKind::Open; }
    bool is_chosen(Element v) const { return status_[v].kind == StatusKind::Chosen; }
    const std::vector<Element>& chosen_sequence() const { return chosen_; }
    std::vector<Element> open_elements() const;
    std::vector<Element> chosen_set() const;  // ascending

    const Ledger& ledger() const { return ledger_; }
    // Ledger mutation hook for fault-injection tests.
    Ledger& ledger_for_testing() { return ledger_; }

    // D_{1,R}(0) = distinct +-pairs in S, plus one when n is chosen.
    std::uint64_t d1r0() const { return pairs_distinct_ + (self_pair_ ? 1 : 0); }
    std::uint64_t pairs_distinct() const { return pairs_distinct_; }

    Xoshiro256& rng() { return rng_; }

private:
    ProcessState(const RingContext& ctx, std::uint64_t seed, Mode mode);

    void build_full_ledger();
    void apply_class(const EquationClass& e, std::int64_t sign);
    void apply_class_as(const EquationClass& e, Element x, StatusKind xkind, std::int64_t sign);
    template <typename Fn>
    void for_each_class_through(Element x, Fn&& fn) const;
    void change_status(Element x, ElementStatus next);
    std::vector<Element> d2_by_scan(Element v) const;
    std::vector<Element> d2_by_candidates(Element v) const;

    RingContext ctx_;
    Mode mode_;
    std::uint64_t step_ = 0;
    std::vector<ElementStatus> status_;
    std::vector<Element> chosen_;
    OpenIndex open_;
    Ledger ledger_;
    std::uint64_t pairs_distinct_ = 0;
    bool self_pair_ = false;
    Xoshiro256 rng_;
};

// Pair statistic of a state: (D_{1,R}(0), distinct +-pairs).
struct PairCount {
    std::uint64_t d1r0 = 0;
    std::uint64_t distinct = 0;
};
PairCount pair_count(const ProcessState& state);
PairCount pair_count(std::span<const Element> chosen, const RingContext& ctx);

// Exact conditional expectation of the one-step change, by stepping a copy
// of the state with every open element in turn. FULL_LEDGER only.
Rational expected_one_step_delta(const ProcessState& state, TrackedVariable var);
// Closed forms: -1 - (1/Q) sum_{q open} |D_2(q)|, and D_{2,R}(0)/Q.
Rational drift_q_closed_form(const ProcessState& state);
Rational drift_d1r0_closed_form(const ProcessState& state);

// ---------------------------------------------------------------------------
// Trajectory recording

struct CounterExtremes {
    // Over v not in +-S and v != 0 (d3r: v not in S, v != 0).
    std::int64_t d3l_min = 0, d3l_max = 0;
    std::int64_t d3r_min = 0, d3r_max = 0;
    std::int64_t d2l_min = 0, d2l_max = 0;
    std::int64_t d2r_min = 0, d2r_max = 0;
    bool d3l_any = false, d3r_any = false, d2l_any = false, d2r_any = false;
};

struct VertexSample {
    Element vertex = 0;
    bool chosen = false;
    VertexCounters counters;
};

struct TrajectorySnapshot {
    std::uint64_t step = 0;
    double t = 0.0;
    std::uint64_t q = 0;
    std::optional<std::int64_t> e2, e3;
    std::optional<std::int64_t> d2r0, d3r0;
    std::uint64_t d1r0 = 0;
    std::uint64_t pairs_distinct = 0;
    // Max of D1L, D1R over non-chosen v != 0 (all of them in FULL mode, the
    // sample in LEAN mode).
    std::optional<std::int64_t> max_d1_nonzero;
    std::optional<CounterExtremes> extremes;
    std::vector<VertexSample> samples;
};

TrajectorySnapshot take_snapshot(const ProcessState& state, std::span<const Element> sample);

struct AuditFrame {
    std::uint64_t step = 0;
    Ledger ledger;
    std::vector<ElementStatus> statuses;
    std::optional<StepReport> next;  // the step taken from this state, if any
};

struct RunOptions {
    enum class Stop { Horizon, UntilTermination };
    Stop stop = Stop::UntilTermination;
    std::uint64_t horizon = 0;
    std::uint64_t cadence = 0;  // 0 selects the default for the modulus
    std::vector<Element> sample;
    bool keep_frames = false;  // FULL mode only; one frame per step
};

std::uint64_t default_cadence(Element m);

struct RunRecord {
    Element modulus = 0;
    Mode mode = Mode::FullLedger;
    std::vector<TrajectorySnapshot> snapshots;
    std::vector<Element> chosen_sequence;
    std::vector<AuditFrame> frames;
    std::optional<std::uint64_t> termination_step;
    std::uint64_t final_size = 0;
    std::uint64_t final_d1r0 = 0;
    std::uint64_t final_pairs_distinct = 0;
};

RunRecord run(ProcessState& state, const RunOptions& options);

}  // namespace sumfree
