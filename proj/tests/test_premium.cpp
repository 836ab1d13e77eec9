#include "amerlevy/error.hpp"
#include "amerlevy/premium.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace amerlevy;

namespace {

SolverConfig config(int n, int nt, double beta) {
    SolverConfig c;
    c.n_space = n;
    c.n_time = nt;
    c.beta = beta;
    return c;
}

McConfig paths(long n) {
    McConfig m;
    m.n_paths = n;
    return m;
}

}  // namespace

TEST(Premium, BlackScholesIdentityHolds) {
    std::vector<double> spot{100.0};
    auto rep = premium_identity(fixture::model("bs"), fixture::payoff("put"), spot, 1.0, config(1601, 200, 8.0),
                                paths(20000));
    EXPECT_TRUE(rep.pass) << "gap " << rep.identity_gap << " tol " << rep.tolerance;
    EXPECT_FALSE(rep.tolerance_sensitive);
    EXPECT_EQ(rep.sensitivity.size(), 3u);
    EXPECT_GT(rep.premium_mc.mean, 0.0);
    EXPECT_LT(rep.diagnostics.exit_fraction, kMaxExitFraction);
    EXPECT_NEAR(rep.tolerance, std::max(0.005 * rep.american_pide, 3.0 * rep.premium_mc.std_error), 1e-15);
}

TEST(Premium, ZeroRateHasNoPremium) {
    std::vector<double> spot{100.0};
    auto rep = premium_identity(fixture::model("bs_zero_rate"), fixture::payoff("put"), spot, 1.0,
                                config(801, 400, 8.0), paths(20000));
    EXPECT_EQ(rep.premium_mc.mean, 0.0);
    EXPECT_LE(std::abs(rep.american_pide - rep.european_pide), 2.0 * rep.grid_tolerance);
    EXPECT_TRUE(rep.pass);
}

TEST(Premium, RejectsNonIntegrableModels) {
    std::vector<double> spot{100.0};
    try {
        premium_identity(fixture::rejected_model("kou_heavy_tail"), fixture::payoff("put"), spot, 0.5, config(201, 20, 1.5),
                         paths(100));
        FAIL() << "expected ModelRejected";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ModelRejected);
    }
}

TEST(Premium, RegionReportValidatesTime) {
    auto m = fixture::model("bs");
    auto p = fixture::payoff("put");
    std::vector<double> spot{100.0};
    Grid g = build_grid(m, p, spot, 1.0, 201, 50, 8.0);
    auto op = assemble(m, g);
    auto s = solve_american_penalty(m, p, g, op);
    EXPECT_THROW(exercise_region_report(s, p, 1.5), Error);
    auto last = exercise_region_report(s, p, 1.0 - g.dt);
    EXPECT_GT(last.exercised_nodes, 0u);
    EXPECT_TRUE(last.inclusion);
    EXPECT_EQ(last.mask.size(), g.size());
}

TEST(Premium, FreeBoundaryNeedsOneDimension) {
    auto m = fixture::model("merton_2d");
    auto p = fixture::payoff("min_put_2d");
    std::vector<double> spot{100.0, 100.0};
    Grid g = build_grid(m, p, spot, 0.5, 51, 10, 12.0);
    auto op = assemble(m, g);
    auto s = solve_american_penalty(m, p, g, op);
    EXPECT_THROW(free_boundary(s, p), Error);
}

TEST(Convergence, NeedsThreeLevels) {
    std::vector<double> spot{100.0};
    std::vector<ConvergenceLevel> two{{201, 50, 1000}, {401, 100, 1000}};
    EXPECT_THROW(convergence_study(fixture::model("bs"), fixture::payoff("put"), spot, 1.0, config(201, 50, 8.0),
                                   paths(1000), two),
                 Error);
}

TEST(Convergence, BlackScholesStudyRefines) {
    std::vector<double> spot{100.0};
    std::vector<ConvergenceLevel> levels{{201, 100, 5000}, {401, 200, 10000}, {801, 400, 20000}};
    auto rows = convergence_study(fixture::model("bs"), fixture::payoff("put"), spot, 1.0, config(201, 100, 8.0),
                                  paths(1000), levels);
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t l = 1; l < rows.size(); ++l) {
        EXPECT_GE(rows[l - 1].complementarity_maxnorm / rows[l].complementarity_maxnorm, 1.5);
        EXPECT_GT(rows[l].runtime, 0.0);
    }
}

TEST(Convergence, RefinementOptionsUseParabolicWindow) {
    auto m = fixture::model("merton_2d");
    auto o = refinement_residual_options(m, 0.02, 0.5);
    EXPECT_NEAR(o.min_margin_z, 0.06, 1e-15);
    EXPECT_NEAR(o.min_time_to_expiry, std::pow(0.06 / 0.2, 2), 1e-15);
    auto small = refinement_residual_options(m, 0.001, 0.5);
    EXPECT_NEAR(small.min_time_to_expiry, 0.05, 1e-15);
}
