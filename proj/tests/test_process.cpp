#include <algorithm>
#include <set>
#include <vector>

#include "brute.hpp"
#include "doctest.h"
#include "sumfree/errors.hpp"
#include "sumfree/process.hpp"

using namespace sumfree;

TEST_CASE("prng is reproducible and in range") {
    Xoshiro256 a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next();
        CHECK(x == b.next());
        CHECK(x != c.next());
    }
    Xoshiro256 r(1);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto k = r.uniform_below(7);
        REQUIRE(k < 7);
        ++hits[k];
    }
    for (int h : hits) CHECK(h > 800);
    // reference output of splitmix64 from seed 0
    SplitMix64 sm(0);
    CHECK(sm.next() == 0xe220a8397b1dcdafULL);
}

TEST_CASE("open index select") {
    OpenIndex idx(10);
    for (Element v : {2u, 3u, 7u, 9u}) idx.insert(v);
    CHECK(idx.size() == 4);
    CHECK(idx.select(0) == 2);
    CHECK(idx.select(2) == 7);
    idx.erase(3);
    CHECK(idx.select(1) == 7);
    CHECK(idx.select(2) == 9);
}

TEST_CASE("initial ledger at m = 8") {
    RingContext ctx(8);
    auto st = ProcessState::init(ctx, 1, Mode::FullLedger);
    CHECK(st.open_count() == 7);
    CHECK(st.status(0).kind == StatusKind::Closed);
    CHECK(st.status(0).step == 0);
    const auto& L = st.ledger();
    CHECK(L.q == 7);
    CHECK(L.vertex[0].d3r == 3);
    CHECK(L.vertex[0].d2r == 1);
    CHECK(L.vertex[1].d3l == 5);
    CHECK(L.vertex[1].d2l == 1);
    CHECK(L.vertex[1].d2r == 0);

    const auto ref = brute::counts({}, 8);
    CHECK(L.e2 == ref.e2);
    CHECK(L.e3 == ref.e3);
    CHECK(L.e2 == 6);
    CHECK(L.e3 == 18);
    for (Element v = 0; v < 8; ++v) CHECK(L.vertex[v] == ref.c[v]);
}

TEST_CASE("forced steps at m = 8") {
    RingContext ctx(8);
    SUBCASE("choose 1") {
        auto st = ProcessState::init(ctx, 1, Mode::FullLedger);
        auto rep = st.step_with(1);
        CHECK(rep.step == 0);
        CHECK(rep.newly_closed == std::vector<Element>{2});
        CHECK(st.open_count() == 5);
        CHECK(rep.delta.q == -2);
    }
    SUBCASE("choose 2") {
        auto st = ProcessState::init(ctx, 1, Mode::FullLedger);
        CHECK(st.d2_neighborhood(2) == std::vector<Element>{1, 4, 5});
        CHECK(st.d2_neighborhood(1) == std::vector<Element>{2});
        auto rep = st.step_with(2);
        CHECK(rep.newly_closed == std::vector<Element>{1, 4, 5});
        CHECK(st.open_count() == 3);
        CHECK(st.status(4).kind == StatusKind::Closed);
        // both carry the index of the step that changed them
        CHECK(st.status(4).step == 0);
        CHECK(st.status(2).kind == StatusKind::Chosen);
        CHECK(st.status(2).step == 0);
        CHECK_THROWS_AS(st.step_with(1), NotOpen);
        CHECK_THROWS_AS(st.d2_neighborhood(1), NotOpen);
    }
    SUBCASE("lean agrees") {
        auto st = ProcessState::init(ctx, 1, Mode::Lean);
        CHECK(st.d2_neighborhood(2) == std::vector<Element>{1, 4, 5});
        auto rep = st.step_with(2);
        CHECK(rep.newly_closed == std::vector<Element>{1, 4, 5});
        CHECK_FALSE(rep.delta.e2);
    }
}

TEST_CASE("termination at m = 4") {
    RingContext ctx(4);
    auto a = ProcessState::init(ctx, 1, Mode::FullLedger);
    a.step_with(1);
    a.step_with(3);
    CHECK(a.terminated());
    CHECK(a.chosen_set() == std::vector<Element>{1, 3});
    CHECK_THROWS_AS(a.step(), ProcessTerminated);

    auto b = ProcessState::init(ctx, 1, Mode::FullLedger);
    auto rep = b.step_with(2);
    CHECK(rep.newly_closed == std::vector<Element>{1, 3});
    CHECK(b.terminated());
    CHECK(b.chosen_set() == std::vector<Element>{2});
}

TEST_CASE("pair count") {
    RingContext ctx(8);
    std::vector<Element> s35{3, 5}, s4{4}, none;
    CHECK(pair_count(s35, ctx).d1r0 == 1);
    CHECK(pair_count(s35, ctx).distinct == 1);
    CHECK(pair_count(none, ctx).d1r0 == 0);
    CHECK(pair_count(s4, ctx).d1r0 == 1);
    CHECK(pair_count(s4, ctx).distinct == 0);

    auto st = ProcessState::init(ctx, 1, Mode::FullLedger);
    st.step_with(4);
    CHECK(st.d1r0() == 1);
    CHECK(st.pairs_distinct() == 0);
}

TEST_CASE("engine state matches the brute-force reference along runs") {
    for (Element m : {5u, 8u, 9u, 12u, 16u}) {
        RingContext ctx(m);
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            auto full = ProcessState::init(ctx, seed, Mode::FullLedger);
            auto lean = ProcessState::init(ctx, seed, Mode::Lean);
            while (!full.terminated()) {
                const auto chosen = full.chosen_sequence();
                const auto ref = brute::counts(chosen, m);
                CHECK(full.ledger().q == static_cast<std::uint64_t>(ref.q));
                CHECK(full.ledger().e2 == ref.e2);
                CHECK(full.ledger().e3 == ref.e3);
                for (Element v = 0; v < m; ++v) {
                    CHECK(static_cast<int>(full.status(v).kind) == ref.kind[v]);
                    if (!full.is_chosen(v)) {
                        CHECK(full.ledger().vertex[v] == ref.c[v]);
                        CHECK(full.counters_for(v) == ref.c[v]);
                    }
                    if (full.is_open(v)) {
                        const auto d = brute::d2(chosen, v, m);
                        CHECK(full.d2_neighborhood(v) == d);
                        CHECK(lean.d2_neighborhood(v) == d);
                    }
                }
                CHECK(full.pairs_distinct() == brute::distinct_pairs(chosen, m));
                const auto a = full.step();
                const auto b = lean.step();
                CHECK(a.chosen == b.chosen);
                CHECK(a.newly_closed == b.newly_closed);
                CHECK(a.delta.q == b.delta.q);
                CHECK(a.delta.d1r0 == b.delta.d1r0);
            }
            CHECK(lean.terminated());
            std::set<Element> s(full.chosen_sequence().begin(), full.chosen_sequence().end());
            CHECK(brute::sum_free(s, m));
        }
    }
}

TEST_CASE("exact drifts at m = 8") {
    RingContext ctx(8);
    auto st = ProcessState::init(ctx, 1, Mode::FullLedger);
    CHECK(expected_one_step_delta(st, {TrackedVariable::Kind::D1R0, 0}) == Rational(1, 7));
    CHECK(drift_d1r0_closed_form(st) == Rational(1, 7));

    // -1 - (1/7) sum |D_2(q)|, with |D_2(q)| from the reference
    std::int64_t sum = 0;
    for (Element q = 1; q < 8; ++q) sum += static_cast<std::int64_t>(brute::d2({}, q, 8).size());
    const Rational expect = Rational(-1) - Rational(sum, 7);
    CHECK(expected_one_step_delta(st, {TrackedVariable::Kind::Q, 0}) == expect);
    CHECK(drift_q_closed_form(st) == expect);

    auto lean = ProcessState::init(ctx, 1, Mode::Lean);
    CHECK_THROWS_AS(drift_q_closed_form(lean), ModeUnsupported);

    auto done = ProcessState::init(RingContext(4), 1, Mode::FullLedger);
    done.step_with(2);
    CHECK_THROWS_AS(drift_q_closed_form(done), ProcessTerminated);
}

TEST_CASE("zero D2R(0) means zero pair drift") {
    RingContext ctx(8);
    auto st = ProcessState::init(ctx, 3, Mode::FullLedger);
    st.step_with(4);  // 4 is the only element whose choice is a self pair
    REQUIRE(st.ledger().vertex[0].d2r == 0);
    CHECK(expected_one_step_delta(st, {TrackedVariable::Kind::D1R0, 0}) == 0);
}

TEST_CASE("runs are deterministic and respect the horizon") {
    RingContext ctx(64);
    auto a = ProcessState::init(ctx, 9, Mode::FullLedger);
    auto b = ProcessState::init(ctx, 9, Mode::FullLedger);
    RunOptions opt;
    const auto ra = run(a, opt);
    const auto rb = run(b, opt);
    CHECK(ra.chosen_sequence == rb.chosen_sequence);
    CHECK(ra.termination_step);
    CHECK(ra.final_size == ra.chosen_sequence.size());

    auto c = ProcessState::init(ctx, 9, Mode::FullLedger);
    RunOptions h0;
    h0.stop = RunOptions::Stop::Horizon;
    h0.horizon = 0;
    const auto rc = run(c, h0);
    CHECK(rc.snapshots.size() == 1);
    CHECK(rc.snapshots[0].q == 63);
    CHECK_FALSE(rc.termination_step);
}

TEST_CASE("snapshots in both modes") {
    RingContext ctx(32);
    auto full = ProcessState::init(ctx, 5, Mode::FullLedger);
    auto lean = ProcessState::init(ctx, 5, Mode::Lean);
    RunOptions opt;
    const auto rf = run(full, opt);
    const auto rl = run(lean, opt);
    REQUIRE(rf.snapshots.size() == rl.snapshots.size());
    for (std::size_t i = 0; i < rf.snapshots.size(); ++i) {
        const auto& f = rf.snapshots[i];
        const auto& l = rl.snapshots[i];
        CHECK(f.q == l.q);
        CHECK(f.d1r0 == l.d1r0);
        CHECK(f.e2);
        CHECK_FALSE(l.e2);
        CHECK(f.d2r0 == l.d2r0);
        CHECK(f.d3r0 == l.d3r0);
    }
    CHECK(default_cadence(4096) == 1);
    CHECK(default_cadence(8192) == 16);
}
