#include "amerlevy/error.hpp"
#include "amerlevy/levy_model.hpp"
#include "amerlevy/monte_carlo.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace amerlevy;

namespace {

LevyModel bs_model(double r = 0.05, double sigma = 0.2) {
    return LevyModel(GaussianPart(Matrix::Constant(1, 1, sigma * sigma)), JumpSpec(), Rates{r, Vector::Zero(1)});
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an amerlevy::Error";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(GaussianPart, RejectsAsymmetricAndSingularMatrices) {
    Matrix asym(2, 2);
    asym << 0.04, 0.01, 0.0, 0.04;
    EXPECT_EQ(code_of([&] { GaussianPart g(asym); }), ErrorCode::InvalidArgument);
    Matrix singular(2, 2);
    singular << 0.04, 0.04, 0.04, 0.04;
    EXPECT_EQ(code_of([&] { GaussianPart g(singular); }), ErrorCode::InvalidArgument);
}

TEST(GaussianPart, FactorReproducesCovariance) {
    Matrix a(2, 2);
    a << 0.04, 0.012, 0.012, 0.09;
    GaussianPart g(a);
    EXPECT_LT((g.factor() * g.factor().transpose() - a).norm(), 1e-15);
}

TEST(Rates, RejectNegativeValues) {
    EXPECT_EQ(code_of([] { Rates{-0.01, Vector::Zero(1)}.validate(); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { Rates{0.01, Vector::Constant(1, -0.1)}.validate(); }), ErrorCode::InvalidArgument);
}

TEST(JumpSpec, RejectsInvalidLaws) {
    EXPECT_THROW(JumpSpec(-1.0, MertonNormal{Vector::Zero(1), Matrix::Identity(1, 1)}), Error);
    EXPECT_THROW(JumpSpec(0.3, KouDoubleExponential{Vector::Constant(1, 1.5), Vector::Constant(1, 10),
                                                    Vector::Constant(1, 5)}),
                 Error);
    EXPECT_THROW(JumpSpec(0.3, EmpiricalJumps{{Vector::Constant(1, 0.1)}, {0.5}}), Error);
}

TEST(Drift, BlackScholesDriftIsRMinusHalfVariance) {
    auto m = bs_model(0.05, 0.2);
    EXPECT_NEAR(m.log_drift()(0), 0.05 - 0.02, 1e-15);
}

TEST(Drift, MertonCompensationMatchesClosedForm) {
    auto m = fixture::model("merton");
    const double k = std::exp(-0.1 + 0.5 * 0.0225) - 1.0;
    EXPECT_NEAR(m.log_drift()(0), 0.05 - 0.02 - 0.1 * k, 1e-14);
}

TEST(Drift, KouCompensationMatchesClosedForm) {
    auto m = fixture::model("kou");
    const double mean_exp = 0.4 * 10.0 / 9.0 + 0.6 * 5.0 / 6.0;
    EXPECT_NEAR(m.log_drift()(0), 0.05 - 0.02 - 0.3 * (mean_exp - 1.0), 1e-14);
}

TEST(Moments, JumpMgfAgreesWithQuadrature) {
    for (const auto& name : {"merton", "kou", "merton_2d"}) {
        auto m = fixture::model(name);
        for (int i = 0; i < m.dim(); ++i)
            for (double q : {-2.0, 0.5, 1.0, 2.0})
                EXPECT_NEAR(m.jumps().mgf(i, q), jump_exp_moment_quadrature(m.jumps(), i, q), 1e-10)
                    << name << " q=" << q;
    }
}

TEST(Moments, LogReturnMomentIsMartingaleAtUnitExponent) {
    for (const auto& name : fixture::shipped_models()) {
        auto m = fixture::model(name);
        for (int i = 0; i < m.dim(); ++i)
            EXPECT_NEAR(log_return_exp_moment(m, 1.0, i, 0.7),
                        std::exp((m.rates().r - m.rates().delta(i)) * 0.7), 1e-12)
                << name;
    }
}

TEST(Moments, KouMgfDivergesBeyondTailRate) {
    auto m = fixture::model("kou");
    EXPECT_EQ(code_of([&] { m.jumps().mgf(0, 10.0); }), ErrorCode::NonIntegrableJump);
    EXPECT_EQ(code_of([&] { m.jumps().mgf(0, -5.0); }), ErrorCode::NonIntegrableJump);
}

TEST(Integrability, MertonHoldsAnalytically) {
    auto m = fixture::model("merton");
    auto rep = validate_integrability(m.jumps(), 1.0, 2.0, 0.1);
    ASSERT_EQ(rep.conditions.size(), 4u);
    for (const auto& c : rep.conditions) EXPECT_EQ(c.status, ConditionStatus::HoldsAnalytically) << c.name;
    EXPECT_TRUE(rep.all_hold());
}

TEST(Integrability, HeavyKouUpperTailFailsWeightedMoment) {
    auto m = fixture::rejected_model("kou_heavy_tail");
    auto rep = validate_integrability(m.jumps(), 1.0, 1.5, 0.1);
    EXPECT_FALSE(rep.all_hold());
    for (const auto& c : rep.conditions) {
        if (c.name == "unit_exp_moment") EXPECT_NE(c.status, ConditionStatus::Fails);
        if (c.name == "weighted_first_moment") EXPECT_EQ(c.status, ConditionStatus::Fails);
    }
}

TEST(Integrability, KouThresholdIsTwiceBetaBelowTailRate) {
    auto m = fixture::model("kou");
    EXPECT_TRUE(validate_integrability(m.jumps(), 1.0, 2.4, 0.1).all_hold());
    EXPECT_FALSE(validate_integrability(m.jumps(), 1.0, 2.6, 0.1).all_hold());
}

TEST(Integrability, NoJumpsAlwaysHold) {
    EXPECT_TRUE(validate_integrability(JumpSpec(), 1.0, 50.0, 0.1).all_hold());
}

TEST(Martingale, QuadratureMatchesForwardGrowth) {
    for (const auto& name : fixture::shipped_models()) {
        auto m = fixture::model(name);
        for (int i = 0; i < m.dim(); ++i) {
            const double target = std::exp(m.rates().r - m.rates().delta(i));
            EXPECT_NEAR(martingale_check_quadrature(m, i, 1.0), target, 1e-10 * target) << name;
        }
    }
}

TEST(Simulation, SubstreamsDifferAndRepeat) {
    EXPECT_NE(substream_seed(1, 0), substream_seed(1, 1));
    EXPECT_NE(substream_seed(1, 0), substream_seed(2, 0));
    EXPECT_EQ(substream_seed(7, 42), substream_seed(7, 42));
}

TEST(Simulation, PathsAreIndependentOfThreadCount) {
    auto m = fixture::model("merton_2d");
    std::vector<double> x{100.0, 100.0};
    auto a = simulate_paths(m, 0.0, x, 0.5, 10, 257, 99, 1);
    auto b = simulate_paths(m, 0.0, x, 0.5, 10, 257, 99, 3);
    EXPECT_EQ(a.prices, b.prices);
}

TEST(Simulation, LogReturnMeanAndVariance) {
    auto m = fixture::model("merton");
    std::vector<double> x{1.0};
    auto set = simulate_paths(m, 0.0, x, 1.0, 1, 200000, 5, 0);
    double s1 = 0.0, s2 = 0.0;
    for (int p = 0; p < set.n_paths; ++p) {
        const double l = std::log(set.at(p, 1, 0));
        s1 += l;
        s2 += l * l;
    }
    const double n = set.n_paths;
    const double mean = s1 / n, var = s2 / n - mean * mean;
    const double jm = -0.1, jv = 0.0225, lam = 0.1;
    const double exact_mean = m.log_drift()(0) + lam * jm;
    const double exact_var = 0.04 + lam * (jv + jm * jm);
    EXPECT_NEAR(mean, exact_mean, 4.0 * std::sqrt(exact_var / n));
    EXPECT_NEAR(var, exact_var, 0.02 * exact_var);
}

TEST(Simulation, MartingaleWithinThreeStandardErrors) {
    for (const auto& name : fixture::shipped_models()) {
        auto m = fixture::model(name);
        auto est = martingale_check_mc(m, 1.0, 100000, 11, 0);
        for (int i = 0; i < m.dim(); ++i) {
            const double target = std::exp(m.rates().r - m.rates().delta(i));
            EXPECT_LE(std::abs(est[i].mean - target), 3.0 * est[i].std_error) << name << " axis " << i;
        }
    }
}

TEST(Simulation, EmpiricalAtomsAreSampledWithTheirWeights) {
    EmpiricalJumps law{{Vector::Constant(1, -0.2), Vector::Constant(1, 0.1)}, {0.25, 0.75}};
    LevyModel m(GaussianPart(Matrix::Constant(1, 1, 0.04)), JumpSpec(0.5, law), Rates{0.03, Vector::Zero(1)});
    PathSimulator sim(m, 1.0);
    auto st = sim.stream(3, 0);
    int low = 0, n = 40000;
    double y[1];
    for (int k = 0; k < n; ++k) {
        sim.sample_jump(st, y);
        if (y[0] < 0.0) ++low;
    }
    EXPECT_NEAR(static_cast<double>(low) / n, 0.25, 4.0 * std::sqrt(0.25 * 0.75 / n));
    EXPECT_NEAR(martingale_check_quadrature(m, 0, 1.0), std::exp(0.03), 1e-12);
}
