#include <cmath>

#include <gtest/gtest.h>

#include "oracle/rational_rank.hpp"
#include "peu/io.hpp"
#include "peu/peu.hpp"
#include "support.hpp"

using namespace peu;

namespace {

CertificateOptions printed_overrides() {
    CertificateOptions opt;
    opt.eta = io::matrix_from_json(fixtures::load_json("ex2/eta.json"));
    opt.A = io::matrix_from_json(fixtures::load_json("ex2/A.json"));
    opt.zeta = io::vector_from_json(fixtures::load_json("ex2/zeta.json"));
    return opt;
}

Matrix stacked_data(const CounterexampleCertificate& c, const Signal& u) {
    return stacked_input_state(u.samples(), c.states, c.L);
}

/// Every invariant a non-short certificate must satisfy.
void expect_sound(const CounterexampleCertificate& c, const Signal& u) {
    ASSERT_TRUE(c.verified()) << c.diagnostics();
    EXPECT_GE(c.w.norm(), 1.0 - 1e-12);
    const Matrix data = stacked_data(c, u);
    Vector annihilator(c.v.size() + c.w.size());
    annihilator << c.v, c.w;
    const double scale = 1.0 + c.states.cwiseAbs().maxCoeff();
    EXPECT_LE((annihilator.transpose() * data).norm(), 1e-7 * scale * static_cast<double>(data.cols()));
    EXPECT_LT(rank_report(data, c.rtol).rank, c.L * c.m + c.n);
    EXPECT_TRUE(is_controllable(c.A, c.B).controllable);
    if (c.short_data_case) return;

    const Index big_n = c.n + c.L;
    EXPECT_EQ(c.E_at(big_n - 1), Matrix::Zero(c.n, c.m));
    const double e_scale = 1.0 + [&] {
        double s = 0.0;
        for (const auto& e : c.E) s = std::max(s, e.cwiseAbs().maxCoeff());
        return s;
    }();
    for (Index i = 0; i < big_n; ++i)
        EXPECT_LE((c.A * c.E_at(i) + c.zeta * c.eta.col(i).transpose() - c.E_at(i - 1)).cwiseAbs().maxCoeff(),
                  1e-12 * e_scale * (1.0 + c.A.cwiseAbs().maxCoeff()));
    for (Index i = c.L; i < big_n; ++i)
        EXPECT_LE((c.xi.transpose() * c.E_at(i)).cwiseAbs().maxCoeff(), 1e-9 * e_scale * c.xi.norm());
    EXPECT_GT(c.residuals.spectral_distance, c.cluster_radius);
    EXPECT_LE((closed_form_states(c, u) - c.states).cwiseAbs().maxCoeff(), 1e-8 * scale);
}

}  // namespace

TEST(Certificate, PrintedOverridesReproduceRecursion) {
    const Signal u = fixtures::load_signal("ex2/input.csv");
    const CounterexampleCertificate c = construct_certificate(u, 3, 1, printed_overrides());
    expect_sound(c, u);
    EXPECT_EQ(c.path, ConstructionPath::override);
    const io::Json want = fixtures::load_json("ex2/expected.json");
    for (const char* i : {"2", "1", "0", "-1"})
        EXPECT_LE((c.E_at(std::stoi(i)) - io::matrix_from_json(want.at("E").at(i))).cwiseAbs().maxCoeff(), 5e-4)
            << "E_" << i;
    EXPECT_LE((c.x0 - io::vector_from_json(want.at("x0"))).cwiseAbs().maxCoeff(), 5e-4);
    EXPECT_EQ(c.stacked_rank.rank, 4);
    EXPECT_LT(c.residuals.eta_snap, kEtaSnapLimit);
}

// The printed xi differs from the one implied by the printed A and zeta by
// about 3e-3; four-decimal rounding of A and zeta accounts for the gap, so this
// only checks the defining identity and the tolerance the rounding allows.
TEST(Certificate, XiSolvesKrylovSystem) {
    const Signal u = fixtures::load_signal("ex2/input.csv");
    const CounterexampleCertificate c = construct_certificate(u, 3, 1, printed_overrides());
    Matrix krylov(3, 3);
    krylov << c.zeta, c.A * c.zeta, c.A * c.A * c.zeta;
    EXPECT_LE((krylov.transpose() * c.xi - Vector::Unit(3, 2)).norm(), 1e-12);
    const Vector printed = io::vector_from_json(fixtures::load_json("ex2/expected.json").at("xi"));
    EXPECT_LE((c.xi - printed).cwiseAbs().maxCoeff(), 5e-3);
}

TEST(Certificate, ExampleOneInput) {
    const Signal u = Signal::from_samples({{1}, {0}, {0}});
    const CounterexampleCertificate c = construct_certificate(u, 2, 1);
    expect_sound(c, u);
    EXPECT_FALSE(c.short_data_case);
    EXPECT_LE(c.residual_annihilation, 1e-8);
    EXPECT_LE(oracle::exact_rank(stacked_data(c, u), 1e9), 2);
}

TEST(Certificate, ShortData) {
    Rng rng(1);
    const Signal u = fixtures::gaussian_signal(rng, 1, 2);
    const CounterexampleCertificate c = construct_certificate(u, 3, 1);
    EXPECT_TRUE(c.short_data_case);
    EXPECT_EQ(c.path, ConstructionPath::short_data);
    EXPECT_EQ(c.v, Vector::Zero(1));
    EXPECT_LE((c.w.transpose() * c.states).norm(), 1e-10 * (1.0 + c.states.cwiseAbs().maxCoeff()));
    expect_sound(c, u);
}

TEST(Certificate, PeInputIsRejected) {
    Rng rng(2);
    const Signal u = fixtures::gaussian_signal(rng, 2, 11);
    try {
        construct_certificate(u, 2, 2);
        FAIL() << "expected persistently_exciting";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::persistently_exciting);
    }
}

TEST(Certificate, OverrideRequiresBothAandZeta) {
    const Signal u = Signal::from_samples({{1}, {0}, {0}});
    CertificateOptions opt;
    opt.A = jordan_block(0.5, 2);
    EXPECT_THROW(construct_certificate(u, 2, 1, opt), Error);
}

TEST(Certificate, OverrideEigenvalueConflict) {
    // u satisfies u(t+2) = u(t), so eta = (-1, 0, 1) and Lambda = {1, -1}.
    const Signal u = Signal::from_samples({{1}, {2}, {1}, {2}, {1}, {2}});
    CertificateOptions opt;
    opt.eta = Matrix(1, 3);
    *opt.eta << -1, 0, 1;
    opt.A = jordan_block(1.0, 2);
    opt.zeta = Vector::Unit(2, 1);
    try {
        construct_certificate(u, 2, 1, opt);
        FAIL() << "expected eigenvalue_conflict";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::eigenvalue_conflict);
    }
}

TEST(Certificate, FuzzOnRecursionInputs) {
    for (int trial = 0; trial < 60; ++trial) {
        Rng rng(derive_seed(3, static_cast<std::uint64_t>(trial)));
        const Index n = 1 + trial % 4, m = 1 + (trial / 4) % 3, depth = 1 + (trial / 12) % 3;
        const Index big_n = n + depth;
        const Index length = big_n - 1 + static_cast<Index>(uniform(rng, 0, static_cast<double>(big_n * (m + 1) + 3)));
        const auto gen = fixtures::recursion_input(rng, m, big_n, length);
        if (length >= big_n) {
            ASSERT_FALSE(is_pe(gen.u, big_n).is_pe) << "trial " << trial;
        }
        const CounterexampleCertificate c = construct_certificate(gen.u, n, depth);
        SCOPED_TRACE("trial " + std::to_string(trial));
        expect_sound(c, gen.u);
        const OutputCounterexample out = extend_to_output(c, gen.u);
        EXPECT_FALSE(out.behavior_check.behavior_equal);
        EXPECT_NEAR(out.separation_value, 1.0, 1e-7);
        EXPECT_LE(out.annihilation_residual, out.annihilation_tolerance);
    }
}

TEST(CertificateL0, ZeroInput) {
    const CounterexampleCertificate c = construct_certificate_L0(Signal::zeros(1, 6), 2);
    EXPECT_LE(rank_report(c.states).rank, 1);
    EXPECT_LE((c.w.transpose() * c.states).norm(), 1e-10);
}

TEST(CertificateL0, ConstantInput) {
    const Signal u = Signal(Matrix::Ones(1, 5));
    const CounterexampleCertificate c = construct_certificate_L0(u, 2);
    EXPECT_EQ(c.L, 0);
    EXPECT_EQ(c.states.cols(), 5);
    EXPECT_LE((c.w.transpose() * c.states).norm(), 1e-10 * (1.0 + c.states.cwiseAbs().maxCoeff()));
    EXPECT_LT(oracle::exact_rank(c.states, 1e9), 2);
}

TEST(CertificateL0, ShortBranch) {
    Rng rng(4);
    const CounterexampleCertificate c = construct_certificate_L0(fixtures::gaussian_signal(rng, 1, 2), 3);
    EXPECT_TRUE(c.short_data_case);
    EXPECT_LT(rank_report(c.states).rank, 3);
}

// Length 3 means T = 2 = n - 1: the general branch with an empty Hankel
// matrix, so every eta is admissible.
TEST(CertificateL0, LengthThreeUsesGeneralBranch) {
    Rng rng(5);
    const CounterexampleCertificate c = construct_certificate_L0(fixtures::gaussian_signal(rng, 1, 3), 3);
    EXPECT_FALSE(c.short_data_case);
    EXPECT_TRUE(c.verified()) << c.diagnostics();
    EXPECT_LT(rank_report(c.states).rank, 3);
}

TEST(OutputCounterexample, WorkedExample) {
    const Signal u = fixtures::load_signal("ex2/input.csv");
    const CounterexampleCertificate c = construct_certificate(u, 3, 1, printed_overrides());
    const OutputCounterexample out = extend_to_output(c, u);
    EXPECT_FALSE(out.behavior_check.behavior_equal);
    EXPECT_NEAR(out.separation_value, 1.0, 1e-7);
}

TEST(OutputCounterexample, ExampleOneInput) {
    const Signal u = Signal::from_samples({{1}, {0}, {0}});
    const OutputCounterexample out = extend_to_output(construct_certificate(u, 2, 1), u);
    EXPECT_LE(out.annihilation_residual, 1e-8);
    EXPECT_NEAR(out.separation_value, 1.0, 1e-12);
    EXPECT_FALSE(out.behavior_check.behavior_equal);
}

TEST(OutputCounterexample, WitnessFirstOutput) {
    const Signal u = Signal::from_samples({{1}, {0}, {0}});
    const CounterexampleCertificate c = construct_certificate(u, 2, 1);
    const OutputCounterexample out = extend_to_output(c, u);
    EXPECT_DOUBLE_EQ(out.witness_y.samples()(0, 0), c.w.dot(out.witness_x0));
}

TEST(OutputCounterexample, RejectsStateOnlyCertificate) {
    const CounterexampleCertificate c = construct_certificate_L0(Signal(Matrix::Ones(1, 5)), 2);
    EXPECT_THROW(extend_to_output(c, Signal(Matrix::Ones(1, 4))), Error);
}

TEST(SingleInputFamily, DiagonalSystem) {
    Rng rng(6);
    Matrix u(1, 10);
    u.leftCols(2) = gaussian_matrix(rng, 1, 2);
    for (Index t = 2; t < 10; ++t) u(0, t) = u(0, t - 2);  // eta = (-1, 0, 1, 0)
    const Signal input(u);
    Matrix a = Matrix::Zero(3, 3);
    a.diagonal() << 2, 0.5, 3;
    CertificateOptions opt;
    opt.eta = Matrix(1, 4);
    *opt.eta << -1, 0, 1, 0;
    const CounterexampleCertificate c = single_input_family(input, 3, 1, a, Vector::Ones(3), opt);
    EXPECT_EQ(c.path, ConstructionPath::single_input_family);
    EXPECT_LE((c.B - Matrix::Ones(3, 1)).cwiseAbs().maxCoeff(), 1e-10);
    const Matrix data = stacked_data(c, input);
    EXPECT_LT(rank_report(data).rank, 4);
    EXPECT_LT(oracle::exact_rank(data, 1e6), 4);
}

TEST(SingleInputFamily, EigenvalueConflict) {
    Matrix u(1, 10);
    u << 1, 2, 1, 2, 1, 2, 1, 2, 1, 2;
    CertificateOptions opt;
    opt.eta = Matrix(1, 4);
    *opt.eta << -1, 0, 1, 0;
    Matrix a = Matrix::Zero(3, 3);
    a.diagonal() << 1, 0.5, 3;
    try {
        single_input_family(Signal(u), 3, 1, a, Vector::Ones(3), opt);
        FAIL() << "expected eigenvalue_conflict";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::eigenvalue_conflict);
    }
}

TEST(SingleInputFamily, ScalarHandCheck) {
    const Signal u(Matrix::Ones(1, 4));
    CertificateOptions opt;
    opt.eta = Matrix(1, 2);
    *opt.eta << 1, -1;
    const CounterexampleCertificate c =
        single_input_family(u, 1, 1, Matrix::Constant(1, 1, 0.5), Vector::Constant(1, 2.0), opt);
    // B = zeta (eta_0 + a eta_1) = zeta / 2, so zeta = 4; E_0 = zeta eta_1 = -4;
    // x0 = -E_0 u(0) = 4, the fixed point of x <- x / 2 + 2.
    EXPECT_NEAR(c.zeta(0), 4.0, 1e-12);
    EXPECT_NEAR(c.x0(0), 4.0, 1e-12);
    EXPECT_EQ(rank_report(stacked_data(c, u)).rank, 1);
}

TEST(SystemCloud, TableFourAllVerified) {
    const Signal u = fixtures::load_signal("ex3/input.csv");
    CloudOptions opt;
    opt.samples = 2000;
    const SystemCloud cloud = sample_system_cloud(u, 2, opt);
    EXPECT_EQ(cloud.points.size() + static_cast<std::size_t>(cloud.skipped), 2000u);
    EXPECT_EQ(cloud.verified_fraction(), 1.0);
}

TEST(SystemCloud, ZeroSamples) {
    CloudOptions opt;
    opt.samples = 0;
    EXPECT_TRUE(sample_system_cloud(fixtures::load_signal("ex3/input.csv"), 2, opt).points.empty());
}

TEST(SystemCloud, Deterministic) {
    const Signal u = fixtures::load_signal("ex3/input.csv");
    CloudOptions opt;
    opt.samples = 50;
    opt.certificate.seed = 99;
    const SystemCloud a = sample_system_cloud(u, 2, opt), b = sample_system_cloud(u, 2, opt);
    ASSERT_EQ(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_EQ(a.points[i].a, b.points[i].a);
        EXPECT_EQ(a.points[i].b, b.points[i].b);
        EXPECT_EQ(a.points[i].x0, b.points[i].x0);
    }
}

TEST(SystemCloud, ZetaScalingIsLinear) {
    const Signal u = fixtures::load_signal("ex3/input.csv");
    const Vector b(Vector::Constant(2, 0.3));
    const FamilyFit base = nearest_family_member(u, 2, -0.4, b);
    const FamilyFit scaled = nearest_family_member(u, 2, -0.4, -3.0 * b);
    EXPECT_NEAR(scaled.point.zeta, -3.0 * base.point.zeta, 1e-12 * std::abs(base.point.zeta) + 1e-15);
    EXPECT_LE((scaled.point.b + 3.0 * base.point.b).norm(), 1e-12);
    EXPECT_NEAR(scaled.point.x0, -3.0 * base.point.x0, 1e-12);
    EXPECT_EQ(scaled.point.verified, base.point.verified);
}

TEST(SystemCloud, RedDotLiesOnFamily) {
    const Signal u = fixtures::load_signal("ex3/input.csv");
    Vector b(2);
    b << -0.3273, -0.3356;
    const FamilyFit fit = nearest_family_member(u, 2, -0.9262, b);
    EXPECT_TRUE(fit.point.verified);
    EXPECT_LT(fit.fit_residual, 1e-3);
    EXPECT_NEAR(fit.point.x0, 0.5561, 5e-4);
}
