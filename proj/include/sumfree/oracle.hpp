#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sumfree/process.hpp"

namespace sumfree {

// Ground truth derived from a chosen set alone, by scanning every class.
struct RecomputedState {
    Element modulus = 0;
    std::vector<std::uint8_t> in_set;  // membership of S
    std::vector<StatusKind> status;    // first-principles open/closed/chosen
    Ledger ledger;                     // vertex entries of chosen elements are zero
    std::uint64_t d1r0 = 0;
    std::uint64_t pairs_distinct = 0;

    // Open q != v sharing with v a class whose other vertices are chosen.
    std::vector<Element> d2_set(Element v) const;
    std::uint64_t open_count() const { return ledger.q; }
};

// Throws NotSumFree when S contains the vertex set of some class.
RecomputedState recompute_snapshot(std::span<const Element> chosen, const RingContext& ctx);

bool is_sum_free(std::span<const Element> set, const RingContext& ctx);
bool maximality(std::span<const Element> set, const RingContext& ctx);

struct Discrepancy {
    std::uint64_t step = 0;
    std::string what;
};

struct VerifyReport {
    bool clean = true;
    std::uint64_t frames_checked = 0;
    std::optional<Discrepancy> first;
};

// Replays the audit frames of a FULL_LEDGER run against recomputation.
VerifyReport verify_run(const RunRecord& run, const RingContext& ctx);

struct TreeResult {
    Rational expected_final_size;
    std::map<std::uint64_t, Rational> final_size_distribution;
    Rational expected_pairs;  // distinct +-pairs, n excluded
    Rational expected_d1r0;
    std::uint64_t nodes = 0;  // distinct chosen sets visited
};

// Exact law of the process by recursion over all choice orders, memoized on
// the chosen set. Throws BudgetExceeded past node_budget distinct sets.
TreeResult exact_expectation_tree(const RingContext& ctx, std::uint64_t node_budget);

// x/y against (x + ex)/(y + ey). The remainder constant is exact:
// the remainder equals -ey (y ex - x ey) / (y^2 (y + ey)) and |y + ey| >= |y|/2.
inline constexpr double kRatioRemainderConstant = 2.0;

struct RatioEstimate {
    double delta = 0.0;
    double first_order = 0.0;
    double remainder_bound = 0.0;
};

RatioEstimate lemma_ratio_estimate(double x, double y, double ex, double ey);
// The same inequality decided in exact arithmetic on the given doubles.
bool ratio_lemma_holds_exact(double x, double y, double ex, double ey, const Rational& k);

struct SumProductCheck {
    double lhs = 0.0;
    double bound = 0.0;
    bool holds = false;
};

SumProductCheck lemma_sum_product(std::span<const double> xs, std::span<const double> ys,
                                  double x, double y, double delta, double eps);
bool sum_product_holds_exact(std::span<const double> xs, std::span<const double> ys, double x, double y,
                             double delta, double eps);

// |D_2(v)| against D2L(v) + D2R(v): the overlap is the number of extra
// (class, role) incidences landing on an already counted q.
struct D2Decomposition {
    std::uint64_t d2_size = 0;
    std::int64_t d2l = 0, d2r = 0;
    std::int64_t overlap = 0;
    std::int64_t d1r_double = 0;  // D1R(2v)
    std::int64_t d1r_zero = 0;    // D1R(0)
};

D2Decomposition d2_decomposition(const RecomputedState& st, Element v);

// Max of D1L, D1R over non-chosen v != 0.
std::int64_t max_d1_nonzero(const RecomputedState& st);

}  // namespace sumfree
