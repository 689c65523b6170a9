#include <gtest/gtest.h>

#include "peu/io.hpp"
#include "peu/peu.hpp"
#include "support.hpp"

using namespace peu;

namespace {

StateSpaceSystem example_one() { return io::system_from_json(fixtures::load_json("ex1/system.json")); }

Signal states_for_window(const Trajectory& tr, Index depth) {
    return tr.x.head(tr.u.length() - depth + 1);
}

}  // namespace

TEST(RankCondition, PeInputOnControllableSystem) {
    Rng rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const StateSpaceSystem sys = fixtures::random_controllable_system(rng, 2, 1, 1);
        const Signal u = fixtures::gaussian_signal(rng, 1, 8);
        ASSERT_TRUE(is_pe(u, 4).is_pe);
        const Trajectory tr = simulate(sys, gaussian_vector(rng, 2), u);
        EXPECT_EQ(check_rank_condition(u, states_for_window(tr, 2), 2, 2).rank, 4);
    }
}

TEST(RankCondition, WorkedExampleConstructionIsDeficient) {
    const Signal u = fixtures::load_signal("ex2/input.csv");
    CertificateOptions opt;
    opt.eta = io::matrix_from_json(fixtures::load_json("ex2/eta.json"));
    opt.A = io::matrix_from_json(fixtures::load_json("ex2/A.json"));
    opt.zeta = io::vector_from_json(fixtures::load_json("ex2/zeta.json"));
    const CounterexampleCertificate c = construct_certificate(u, 3, 1, opt);
    const Trajectory tr = simulate(StateSpaceSystem::input_state(c.A, c.B), c.x0, u);
    EXPECT_LE(check_rank_condition(u, states_for_window(tr, 1), 1, 3).rank, 4);
}

TEST(RankCondition, ShapeValidation) {
    const Signal u = Signal::zeros(1, 5);
    EXPECT_THROW(check_rank_condition(u, Signal::zeros(2, 4), 1, 2), Error);
    EXPECT_THROW(check_rank_condition(u, Signal::zeros(3, 5), 1, 2), Error);
    EXPECT_THROW(check_rank_condition(u, Signal::zeros(2, 5), 6, 2), Error);
}

TEST(BehaviorEquality, ExampleOneForAnyInitialState) {
    const StateSpaceSystem sys = example_one();
    const Signal u = Signal::from_samples({{1}, {0}, {0}});
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const Trajectory tr = simulate(sys, gaussian_vector(rng, 2), u);
        const LemmaCheck c = check_behavior_equality(sys, u, tr.y, 1);
        EXPECT_TRUE(c.behavior_equal);
        EXPECT_EQ(c.data_span_dim, 2);
        EXPECT_EQ(c.behavior_dim, 2);
    }
}

TEST(BehaviorEquality, StoredExampleOneData) {
    std::ifstream in(fixtures::data_path("ex1/data.csv"));
    const io::CsvTable table = io::read_csv(in);
    const Signal u(io::gather(table, io::prefixed_columns(table, "u")));
    const Signal y(io::gather(table, io::prefixed_columns(table, "y")));
    const LemmaCheck c = check_behavior_equality(example_one(), u, y, 1);
    EXPECT_TRUE(c.behavior_equal);
    EXPECT_NEAR(c.x0(0), 0.5, 1e-12);
    EXPECT_NEAR(c.x0(1), -1.25, 1e-12);
}

TEST(BehaviorEquality, ZeroDataIsNotEnough) {
    Rng rng(3);
    for (Index n = 1; n <= 3; ++n) {
        const StateSpaceSystem sys = fixtures::random_controllable_system(rng, n, 1, 1);
        const Signal u = Signal::zeros(1, 8);
        const LemmaCheck c = check_behavior_equality(sys, u, Signal::zeros(1, 8), 2);
        EXPECT_FALSE(c.behavior_equal);
        EXPECT_EQ(c.data_span_dim, 0);
        EXPECT_TRUE(c.inclusion_holds);
    }
}

TEST(BehaviorEquality, RejectsNonTrajectories) {
    const StateSpaceSystem sys = example_one();
    const Signal u = Signal::from_samples({{1}, {0}, {0}});
    const Signal y = Signal::from_samples({{0}, {0}, {5}});
    try {
        check_behavior_equality(sys, u, y, 1);
        FAIL() << "expected not_a_trajectory";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::not_a_trajectory);
    }
}

TEST(BehaviorEquality, FullDepthWindow) {
    Rng rng(4);
    const StateSpaceSystem sys = fixtures::random_controllable_system(rng, 2, 1, 1);
    const Signal u = fixtures::gaussian_signal(rng, 1, 4);
    const Trajectory tr = simulate(sys, gaussian_vector(rng, 2), u);
    const LemmaCheck c = check_behavior_equality(sys, u, tr.y, 4);
    EXPECT_EQ(c.data_span_dim, 1);
    EXPECT_FALSE(c.behavior_equal);
    EXPECT_TRUE(c.inclusion_holds);
}

TEST(BehaviorEquality, InclusionAlwaysHolds) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = 1 + trial % 4, m = 1 + trial % 3, p = 1 + trial % 3, depth = 1 + trial % 4;
        const StateSpaceSystem sys = fixtures::random_controllable_system(rng, n, m, p);
        const Signal u = fixtures::gaussian_signal(rng, m, depth + trial % 7);
        const Trajectory tr = simulate(sys, gaussian_vector(rng, n), u);
        EXPECT_TRUE(check_behavior_equality(sys, u, tr.y, depth).inclusion_holds);
    }
}

TEST(FundamentalLemma, PeOfOrderNPlusLSuffices) {
    Rng rng(6);
    int checked = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const Index n = 1 + trial % 4, m = 1 + trial % 3, p = 1 + trial % 3, depth = 1 + (trial / 3) % 4;
        const StateSpaceSystem sys = fixtures::random_controllable_system(rng, n, m, p);
        const Signal u = fixtures::gaussian_signal(rng, m, (n + depth) * (m + 1) - 1);
        if (!is_pe(u, n + depth).is_pe) continue;
        ++checked;
        const Trajectory tr = simulate(sys, gaussian_vector(rng, n), u);
        const LemmaCheck c = check_behavior_equality(sys, u, tr.y, depth);
        EXPECT_EQ(c.rank_condition.rank, n + depth * m);
        EXPECT_TRUE(c.behavior_equal);
    }
    EXPECT_GT(checked, 50);
}

TEST(StateRank, PeOfOrderNGivesFullRank) {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const Index n = 1 + trial % 4, m = 1 + trial % 2;
        const StateSpaceSystem sys = fixtures::random_controllable_system(rng, n, m, 1);
        const Signal u = fixtures::gaussian_signal(rng, m, n * (m + 1) - 1);
        ASSERT_TRUE(is_pe(u, n).is_pe);
        const Trajectory tr = simulate(sys, gaussian_vector(rng, n), u);
        EXPECT_TRUE(check_state_rank(u, tr.x, n).full_row_rank);
    }
}

TEST(StateRank, ZeroStates) {
    EXPECT_EQ(check_state_rank(Signal::zeros(1, 5), Signal::zeros(2, 6), 2).rank, 0);
}

TEST(StateRank, StateOnlyCertificateIsDeficient) {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const Index n = 2 + trial % 3;
        const auto gen = fixtures::recursion_input(rng, 1, n, n + 4);
        const CounterexampleCertificate c = construct_certificate_L0(gen.u, n);
        const Signal head = gen.u.head(gen.u.length() - 1);
        EXPECT_LT(check_state_rank(head, Signal(c.states), n).rank, n);
    }
}

TEST(CompareSpans, ThreeRankTest) {
    Matrix a(3, 2), b(3, 1);
    a << 1, 0, 0, 1, 0, 0;
    b << 1, 1, 0;
    const SpanComparison s = compare_spans(b, 1, a, 2);
    EXPECT_TRUE(s.first_within_second());
    EXPECT_FALSE(s.equal());
    b << 0, 0, 1;
    EXPECT_FALSE(compare_spans(b, 1, a, 2).first_within_second());
}
