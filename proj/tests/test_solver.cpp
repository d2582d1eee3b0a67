#include <cmath>

#include <gtest/gtest.h>

#include "fkpp/solver.hpp"
#include "property_suite.hpp"

using namespace fkpp;

namespace {

Field uniform(const GridSpec& g, double c) {
    return sample_field(g, [c](double) { return c; }, TailModel::constant(c), TailModel::constant(c));
}

const GridSpec kGrid{1024, 8192};

}  // namespace

TEST(Nonlinearity, Logistic) {
    const auto f = KppNonlinearity::logistic();
    EXPECT_EQ(f(0), 0);
    EXPECT_EQ(f(1), 0);
    EXPECT_EQ(f(0.5), 0.25);
    EXPECT_EQ(f(-0.5), 0);  // clamped
    EXPECT_EQ(f(1.2), 0);
    EXPECT_EQ(f.fprime0(), 1);
    EXPECT_EQ(f.fprime1(), -1);
    EXPECT_EQ(KppNonlinearity::logistic(2).lipschitz(), 2);
    EXPECT_THROW(KppNonlinearity::logistic(0), DomainError);
}

TEST(Nonlinearity, CustomTable) {
    const auto f = KppNonlinearity::custom({0, 0.3, 0.4, 0.3, 0});
    EXPECT_NEAR(f.fprime0(), 1.2, 1e-15);
    EXPECT_NEAR(f.fprime1(), -1.2, 1e-15);
    EXPECT_NEAR(f(0.125), 0.15, 1e-15);
    EXPECT_NEAR(f(0.6), 0.36, 1e-15);
    EXPECT_THROW(KppNonlinearity::custom({0, 0.1, 0.4, 0.1, 0}), DomainError);  // not concave
    EXPECT_THROW(KppNonlinearity::custom({0, 0.3, 0.1}), DomainError);         // f(1) != 0
    EXPECT_THROW(KppNonlinearity::custom({0, 0}), DomainError);
    EXPECT_THROW(KppNonlinearity::custom({0, -0.1, -0.1, 0}), DomainError);
}

TEST(LogisticClosedForm, Examples) {
    for (double t : {0.0, 1.0, 50.0}) EXPECT_EQ(logistic_closed_form(1, t), 1.0);
    EXPECT_NEAR(logistic_closed_form(0.5, std::log(3.0)), 0.75, 1e-15);
    const double r = (1 - logistic_closed_form(0.3, 11)) / (1 - logistic_closed_form(0.3, 10));
    EXPECT_NEAR(r * std::exp(1.0), 1.0, 0.01);
    double prev = 0;
    for (double t = 0; t < 20; t += 0.25) {
        const double v = logistic_closed_form(0.01, t);
        EXPECT_GE(v, prev);
        prev = v;
    }
    EXPECT_THROW(logistic_closed_form(0, 1), DomainError);
    EXPECT_THROW(logistic_closed_form(0.5, -1), DomainError);
}

TEST(LogisticClosedForm, MatchesRungeKutta) {
    // fourth-order integration of phi' = phi (1 - phi)
    double y = 0.5;
    const int n = 4000;
    const double h = std::log(3.0) / n;
    auto f = [](double v) { return v * (1 - v); };
    for (int i = 0; i < n; ++i) {
        const double k1 = f(y), k2 = f(y + 0.5 * h * k1), k3 = f(y + 0.5 * h * k2), k4 = f(y + h * k3);
        y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    EXPECT_NEAR(y, 0.75, 1e-13);
}

TEST(Schedule, Validation) {
    const auto f = KppNonlinearity::logistic();
    EvolveSchedule s{0.01, 1.0, {0, 0.5, 1}};
    EXPECT_NO_THROW(s.validate(f));
    EXPECT_EQ(s.steps(), 100u);
    EXPECT_DOUBLE_EQ(s.eps_cmp(2.0), 2e-3);
    EXPECT_THROW((EvolveSchedule{0.2, 1.0, {}}).validate(f), DomainError);
    EXPECT_THROW((EvolveSchedule{0.06, 1.0, {}}).validate(KppNonlinearity::logistic(2)), DomainError);
    EXPECT_THROW((EvolveSchedule{0.01, 1.0, {0.5, 0.2}}).validate(f), DomainError);
    EXPECT_THROW((EvolveSchedule{0.01, 1.0, {1.5}}).validate(f), DomainError);
    EXPECT_THROW((EvolveSchedule{0, 1.0, {}}).validate(f), DomainError);
}

TEST(Step, UniformFieldFollowsTheOde) {
    const auto f = KppNonlinearity::logistic();
    for (double alpha : {0.5, 0.75}) {
        SpectralFlow flow(kGrid, KernelSpec::for_alpha(alpha));
        for (double c : {0.1, 0.5, 0.8}) {
            const double dt = 0.01;
            const Field out = step_etd1(flow, uniform(kGrid, c), dt, f);
            const double exact = logistic_closed_form(c, dt);
            for (double v : out.values) EXPECT_NEAR(v, exact, 2 * dt * dt);
            EXPECT_NEAR(out.left.level, exact, 2 * dt * dt);
            EXPECT_NEAR(out.right.level, exact, 2 * dt * dt);
            EXPECT_DOUBLE_EQ(out.time, dt);
        }
    }
}

TEST(Step, SecondOrderConvergence) {
    const GridSpec g{256, 2048};
    SpectralFlow flow(g, KernelSpec::for_alpha(0.5));
    const auto f = KppNonlinearity::logistic();
    const Field u0 = canonical_decaying_datum(0.5, 1, g);
    auto run = [&](double dt) {
        Field u = u0;
        const int n = static_cast<int>(std::lround(1.0 / dt));
        for (int k = 0; k < n; ++k) u = step_etd1(flow, u, dt, f);
        return u;
    };
    const Field ref = run(0.0025), a = run(0.02), b = run(0.01);
    double ea = 0, eb = 0;
    for (std::size_t j = 0; j < g.num_points; ++j) {
        if (!g.interior(j)) continue;
        ea = std::max(ea, std::abs(a.values[j] - ref.values[j]));
        eb = std::max(eb, std::abs(b.values[j] - ref.values[j]));
    }
    const double ratio = ea / eb;
    EXPECT_GT(ratio, 3.2);
    EXPECT_LT(ratio, 4.8);
}

TEST(Step, Errors) {
    const auto f = KppNonlinearity::logistic();
    SpectralFlow flow(kGrid, KernelSpec::for_alpha(0.5));
    Field bad = uniform(kGrid, 0.5);
    bad.values[100] = std::nan("");
    EXPECT_THROW(step_etd1(flow, bad, 0.01, f), BlowUp);
    Field big = uniform(kGrid, 0.5);
    for (auto& v : big.values) v = 1.5;
    big.left = big.right = TailModel::constant(1.5);
    try {
        step_etd1(flow, big, 0.01, f);
        FAIL() << "expected RangeViolation";
    } catch (const RangeViolation& e) {
        EXPECT_DOUBLE_EQ(e.time(), 0.01);
    }
    EXPECT_THROW(step_etd1(flow, uniform(kGrid, 0.5), 0, f), DomainError);
}

TEST(Evolve, Equilibria) {
    SpectralFlow flow(kGrid, KernelSpec::for_alpha(0.5));
    const auto f = KppNonlinearity::logistic();
    const EvolveSchedule s{0.01, 1.0, {0, 0.5, 1}};
    for (double c : {0.0, 1.0}) {
        const auto tr = evolve(flow, uniform(kGrid, c), s, f);
        ASSERT_EQ(tr.snapshots.size(), 3u);
        for (const auto& u : tr.snapshots)
            for (double v : u.values) EXPECT_EQ(v, c);
        EXPECT_EQ(tr.max_overshoot, 0.0);
    }
}

TEST(Evolve, UniformHalfAtTimeThree) {
    SpectralFlow flow(kGrid, KernelSpec::for_alpha(0.75));
    const auto tr = evolve(flow, uniform(kGrid, 0.5), EvolveSchedule{0.01, 3.0, {3.0}}, KppNonlinearity::logistic());
    ASSERT_EQ(tr.snapshots.size(), 1u);
    EXPECT_NEAR(tr.snapshots[0].time, 3.0, 1e-12);
    for (double v : tr.snapshots[0].values) EXPECT_NEAR(v, logistic_closed_form(0.5, 3.0), 1e-4);
}

TEST(Evolve, SnapshotsAndObserverAreDeterministic) {
    SpectralFlow flow(kGrid, KernelSpec::for_alpha(0.5));
    const Field u0 = canonical_decaying_datum(0.5, 1, kGrid);
    const EvolveSchedule s{0.01, 0.2, {0, 0.104, 0.2}};
    int calls = 0;
    const auto a = evolve(flow, u0, s, KppNonlinearity::logistic(), [&](const Field&) { ++calls; });
    const auto b = evolve(u0, s, 0.5, KppNonlinearity::logistic());
    EXPECT_EQ(calls, 21);
    ASSERT_EQ(a.snapshots.size(), 3u);
    EXPECT_NEAR(a.snapshots[1].time, 0.10, 1e-12);  // nearest step
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(a.snapshots[k].values, b.snapshots[k].values);
    EXPECT_EQ(&a.at(0.19), &a.snapshots[2]);
    Field bad = u0;
    bad.values[5] = 1.5;
    EXPECT_THROW(evolve(flow, bad, s, KppNonlinearity::logistic()), DomainError);
}

TEST(Duhamel, UniformHalf) {
    SpectralFlow flow(kGrid, KernelSpec::for_alpha(0.5));
    const auto tr = evolve(flow, uniform(kGrid, 0.5), props::every_step(0.01, 1.0), KppNonlinearity::logistic());
    EXPECT_LE(duhamel_residual(flow, tr, 1.0, 16), 1e-4);
    EXPECT_THROW(duhamel_residual(flow, tr, 1.0, 4), DomainError);
}

TEST(Duhamel, CoverageErrors) {
    SpectralFlow flow(kGrid, KernelSpec::for_alpha(0.5));
    const auto sparse = evolve(flow, uniform(kGrid, 0.5), EvolveSchedule{0.01, 1.0, {0, 0.5, 0.6, 0.7, 1.0}},
                               KppNonlinearity::logistic());
    EXPECT_THROW(duhamel_residual(flow, sparse, 1.0, 8), CoverageError);
    EXPECT_THROW(interpolate_snapshot(sparse, 2.0), CoverageError);
    const auto few = evolve(flow, uniform(kGrid, 0.5), EvolveSchedule{0.01, 1.0, {0, 1.0}}, KppNonlinearity::logistic());
    EXPECT_THROW(interpolate_snapshot(few, 0.5), CoverageError);
}

TEST(FracLaplacian, LorentzianValues) {
    const GridSpec g{1024, 32768};
    const Field u = sample_field(g, [](double x) { return 1 / (1 + x * x); }, TailModel::power_law(1, 2),
                                 TailModel::power_law(1, 2));
    const Field L = frac_laplacian(u, 0.5);
    EXPECT_NEAR(L.values[g.index_of(0)], 1.0, 1e-4);
    EXPECT_NEAR(L.values[g.index_of(1)], 0.0, 1e-4);
    EXPECT_NEAR(L.values[g.index_of(2)], -0.12, 1.2e-5);
}

TEST(FracLaplacian, ConstantAndStep) {
    const GridSpec g{512, 4096};
    for (double v : frac_laplacian(uniform(g, 0.3), 0.75).values) EXPECT_NEAR(v, 0.0, 1e-12);
}

// Property suites on a modest grid; the acceptance run repeats them.
class Properties : public ::testing::Test {
protected:
    props::Setup setup;
};

#define FKPP_PROPERTY(check)                                                               \
    TEST_F(Properties, check) {                                                            \
        const auto r = props::check(setup);                                                \
        EXPECT_TRUE(r.pass) << r.name << ": " << r.measured << " (" << r.detail << ")"; \
    }

FKPP_PROPERTY(comparison)
FKPP_PROPERTY(nonlinearity_comparison)
FKPP_PROPERTY(range)
FKPP_PROPERTY(monotone)
FKPP_PROPERTY(radial_monotone)
FKPP_PROPERTY(kato)
FKPP_PROPERTY(linearized_growth)
FKPP_PROPERTY(duhamel_order)
FKPP_PROPERTY(uniform_logistic)
