#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "forceagg/annealer.hpp"
#include "reference.hpp"

using namespace forceagg;

namespace {

const TypeUniverse kABCD({"A", "B", "C", "D"});

std::vector<Report> random_reports(std::mt19937_64& g, std::size_t n) {
    std::uniform_int_distribution<TypeMask> mask(1, kABCD.full_mask());
    std::uniform_real_distribution<double> mass(0.1, 0.95);
    std::vector<Report> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(make_report("r" + std::to_string(i), Proposition::from_mask(kABCD, mask(g)), mass(g)));
    return out;
}

// Two groups: A-typed and B-typed singletons.
std::vector<Report> two_groups(std::size_t per_group) {
    std::vector<Report> out;
    for (std::size_t i = 0; i < per_group; ++i) {
        out.push_back(make_report("a" + std::to_string(i), Proposition::of(kABCD, {"A"}), 0.8));
        out.push_back(make_report("b" + std::to_string(i), Proposition::of(kABCD, {"B"}), 0.7));
    }
    return out;
}

} // namespace

TEST(AnnealConfig, PublishedDefaults) {
    const AnnealConfig c;
    EXPECT_EQ(c.epsilon, 0.001);
    EXPECT_EQ(c.tau, 0.9);
    EXPECT_EQ(c.gamma, 0.5);
    EXPECT_EQ(c.inner_tol, 0.01);
    EXPECT_EQ(c.freeze_tol, 0.99);
    EXPECT_EQ(alpha_for_k(8), 1e-6);
    EXPECT_EQ(alpha_for_k(10), 3e-7);
    EXPECT_EQ(alpha_for_k(11), 3e-8);
    EXPECT_EQ(alpha_for_k(2), 0.0);
    EXPECT_EQ(alpha_for_k(9), 0.0);
}

TEST(AnnealConfig, ExplicitAlphaOverridesTable) {
    AnnealConfig c;
    c.k = 8;
    EXPECT_EQ(c.effective_alpha(), 1e-6);
    c.alpha = 0.25;
    EXPECT_EQ(c.effective_alpha(), 0.25);
}

TEST(AnnealConfig, RejectsBadParameters) {
    AnnealConfig c;
    c.k = 0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = {};
    c.tau = 1.0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = {};
    c.freeze_tol = 0.0;
    EXPECT_THROW(c.validate(), ValidationError);
}

TEST(CriticalTemperature, ZeroConflictsGiveGammaOverK) {
    const std::vector<Report> same{make_report("a", Proposition::of(kABCD, {"A"}), 0.5),
                                   make_report("b", Proposition::of(kABCD, {"A"}), 0.5)};
    const auto est = critical_temperature(build_conflict_matrix(same), 0.0, 0.5, 2);
    EXPECT_NEAR(est.t_c, 0.25, 1e-15);
}

TEST(CriticalTemperature, MatchesJacobiEigenvalues) {
    std::mt19937_64 g(21);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + g() % 12;
        const std::size_t k = 1 + g() % 4;
        const double alpha = (g() % 2) ? 3e-7 : 0.0;
        const auto rs = random_reports(g, n);
        const auto j = build_conflict_matrix(rs);
        std::vector<std::vector<double>> m(n, std::vector<double>(n));
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                m[a][b] = j(a, b) + alpha - (a == b ? 0.5 : 0.0);
        const auto ev = reference::jacobi_eigenvalues(m);
        const double expected = std::max(-ev.front(), ev.back()) / static_cast<double>(k);
        const auto est = critical_temperature(j, alpha, 0.5, k);
        EXPECT_NEAR(est.t_c, expected, 1e-9 * std::max(1.0, expected));
        EXPECT_NEAR(est.lambda_min, ev.front(), 1e-9);
        EXPECT_NEAR(est.lambda_max, ev.back(), 1e-9);
    }
}

TEST(SpinField, InitialRowsAreNearUniformDistributions) {
    AnnealConfig c;
    c.k = 3;
    NoiseSource noise(4);
    ClampMap clamps(5);
    clamps[2] = 1;
    const auto f = init_spin_field(5, c, clamps, noise);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_NEAR(f.v.row(static_cast<Eigen::Index>(i)).sum(), 1.0, 1e-15);
        if (i == 2)
            continue;
        for (Eigen::Index a = 0; a < 3; ++a)
            EXPECT_NEAR(f.v(static_cast<Eigen::Index>(i), a), 1.0 / 3.0, c.epsilon);
    }
    EXPECT_EQ(f.v(2, 1), 1.0);
    EXPECT_EQ(f.v(2, 0), 0.0);
}

TEST(MeanFieldUpdate, RowIsADistributionEvenForExtremeFields) {
    NoiseSource noise(9);
    Eigen::VectorXd h(3);
    h << 1e6, -1e6, 0.0;
    const auto row = mean_field_update(h, 1e-6, 0.001, noise);
    EXPECT_NEAR(row.sum(), 1.0, 1e-12);
    for (Eigen::Index a = 0; a < 3; ++a) {
        EXPECT_TRUE(std::isfinite(row(a)));
        EXPECT_GE(row(a), 0.0);
    }
    EXPECT_GT(row(1), 0.99);
}

TEST(MeanFieldUpdate, LowerFieldGetsMoreWeight) {
    NoiseSource noise(1);
    Eigen::VectorXd h(2);
    h << 0.2, 0.1;
    const auto row = mean_field_update(h, 0.05, 0.0, noise);
    EXPECT_NEAR(row(1) / row(0), std::exp(0.1 / 0.05), 1e-12);
}

TEST(Harden, TiesGoToLowestIndex) {
    SpinField f;
    f.v = Eigen::MatrixXd(2, 3);
    f.v << 0.4, 0.4, 0.2, 0.1, 0.45, 0.45;
    f.clamp = ClampMap(2);
    const auto h = harden(f);
    EXPECT_EQ(h.cluster_of[0], 0u);
    EXPECT_EQ(h.cluster_of[1], 1u);
}

TEST(Anneal, SeparatesTwoCleanGroups) {
    const auto rs = two_groups(5);
    AnnealConfig c;
    c.k = 2;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        c.seed = seed;
        const auto r = anneal(rs, c);
        EXPECT_EQ(energy(r.assignment, build_conflict_matrix(rs)), 0.0) << "seed " << seed;
        EXPECT_TRUE(r.converged);
    }
}

TEST(Anneal, DeterministicPerSeed) {
    std::mt19937_64 g(3);
    const auto rs = random_reports(g, 10);
    AnnealConfig c;
    c.k = 3;
    c.seed = 77;
    const auto a = anneal(rs, c), b = anneal(rs, c);
    EXPECT_EQ(a.assignment.cluster_of, b.assignment.cluster_of);
    EXPECT_EQ(a.field.v, b.field.v);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t s = 0; s < a.trace.size(); ++s)
        EXPECT_EQ(a.trace[s].temperature, b.trace[s].temperature);
}

TEST(Anneal, ClampedRowsNeverMove) {
    std::mt19937_64 g(8);
    const auto rs = random_reports(g, 8);
    AnnealConfig c;
    c.k = 3;
    ClampMap clamps(8);
    clamps[0] = 2;
    clamps[5] = 0;
    const auto r = anneal(rs, c, clamps);
    EXPECT_EQ(r.assignment.cluster_of[0], 2u);
    EXPECT_EQ(r.assignment.cluster_of[5], 0u);
    EXPECT_EQ(r.field.v(0, 2), 1.0);
    EXPECT_EQ(r.field.v(5, 0), 1.0);
}

TEST(Anneal, NeedsAtLeastKReportsWithoutClamps) {
    const auto rs = two_groups(1);
    AnnealConfig c;
    c.k = 3;
    EXPECT_THROW(anneal(rs, c), ValidationError);
    ClampMap clamps(2);
    clamps[0] = 2;
    EXPECT_NO_THROW(anneal(rs, c, clamps));
}

TEST(Anneal, SaturationWithinBoundsAndFinalAboveFreeze) {
    std::mt19937_64 g(12);
    for (int trial = 0; trial < 10; ++trial) {
        const auto rs = random_reports(g, 9);
        AnnealConfig c;
        c.k = 2 + trial % 3;
        c.seed = 100 + static_cast<std::uint64_t>(trial);
        const auto r = anneal(rs, c);
        for (const auto& t : r.trace) {
            EXPECT_GE(t.saturation, 1.0 / static_cast<double>(c.k) - 1e-9);
            EXPECT_LE(t.saturation, 1.0 + 1e-12);
        }
        if (r.converged) {
            EXPECT_GE(r.trace.back().saturation, c.freeze_tol);
        }
    }
}

TEST(Anneal, OuterStepsFollowTheGeometricSchedule) {
    std::mt19937_64 g(30);
    for (int trial = 0; trial < 20; ++trial) {
        const auto rs = random_reports(g, 6 + trial % 5);
        AnnealConfig c;
        c.k = 2 + trial % 2;
        c.seed = static_cast<std::uint64_t>(trial) + 1;
        const auto r = anneal(rs, c);
        ASSERT_FALSE(r.trace.empty());
        const double t_c = r.temperature.t_c;
        for (std::size_t s = 0; s < r.trace.size(); ++s)
            EXPECT_NEAR(r.trace[s].temperature, t_c * std::pow(c.tau, static_cast<double>(s)), 1e-12 * t_c);
        // The schedule would next run at T_final = T_last * tau; the step count
        // is the number of cooling factors between T_c and T_final.
        const double t_final = r.trace.back().temperature * c.tau;
        const double steps = std::log(t_final / t_c) / std::log(c.tau);
        EXPECT_EQ(static_cast<std::size_t>(std::llround(steps)), r.trace.size());
        EXPECT_NEAR(steps, std::round(steps), 1e-6);
    }
}
