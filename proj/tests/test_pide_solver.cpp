#include "amerlevy/error.hpp"
#include "amerlevy/pide_solver.hpp"
#include "amerlevy/premium.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace amerlevy;

namespace {

struct Solved {
    Grid grid;
    DiscreteOperator op;
    Solution american;
    Solution european;
};

Solved solve(const std::string& model, const std::string& payoff, std::vector<double> spot, double T, int n, int nt,
             double beta) {
    auto m = fixture::model(model);
    auto p = fixture::payoff(payoff);
    Solved s;
    s.grid = build_grid(m, p, spot, T, n, nt, beta);
    s.op = assemble(m, s.grid);
    s.american = solve_american_penalty(m, p, s.grid, s.op);
    s.european = solve_european(m, p, s.grid, s.op);
    return s;
}

void expect_obstacle(const Solution& s) {
    for (int k = 0; k <= s.grid.n_time; ++k)
        for (std::size_t j = 0; j < s.psi.size(); ++j)
            ASSERT_GE(s.values(k, j), s.psi[j] - 1e-9 * (1.0 + s.psi[j])) << "level " << k << " node " << j;
    for (std::size_t j = 0; j < s.psi.size(); ++j) ASSERT_EQ(s.values(s.grid.n_time, j), s.psi[j]);
}

}  // namespace

TEST(Operator, GeneratorOfPriceIsForwardDrift) {
    for (const auto& name : {"bs", "merton", "kou"}) {
        auto m = fixture::model(name);
        std::vector<double> spot{100.0};
        Grid g = build_grid(m, fixture::payoff("put"), spot, 0.5, 1601, 20, 4.0);
        auto op = assemble(m, g);
        std::vector<double> v(g.size());
        double z[1];
        for (std::size_t j = 0; j < v.size(); ++j) {
            g.coords(j, z);
            v[j] = std::exp(z[0]);
        }
        auto ext = [](std::span<const double> zz) { return std::exp(zz[0]); };
        auto gen = apply_generator(op, g, v, ext);
        auto jump = apply_jump_operator(op, g, v, ext);
        const double drift = m.rates().r - m.rates().delta(0);
        for (int i = -50; i <= 50; i += 10) {
            const std::size_t j = g.center_node() + i;
            EXPECT_NEAR(gen[j] / v[j], drift, 2e-4) << name;
            EXPECT_NEAR(jump[j] / v[j], 0.0, 2e-4) << name;
        }
    }
}

TEST(Operator, JumpKernelMassEqualsIntensity) {
    for (const auto& name : {"merton", "kou", "merton_2d"}) {
        auto m = fixture::model(name);
        std::vector<double> spot(m.dim(), 100.0);
        auto p = m.dim() == 1 ? fixture::payoff("put") : fixture::payoff("min_put_2d");
        Grid g = build_grid(m, p, spot, 0.5, m.dim() == 1 ? 801 : 101, 20, m.dim() == 1 ? 4.0 : 12.0);
        auto op = assemble(m, g);
        double mass = 0.0;
        for (const auto& e : op.jumps) mass += e.weight;
        EXPECT_NEAR(mass, m.jumps().intensity(), 1e-12) << name;
        std::vector<double> ones(g.size(), 1.0);
        auto jump = apply_jump_operator(op, g, ones, [](std::span<const double>) { return 1.0; });
        EXPECT_NEAR(jump[g.center_node()], 0.0, 1e-12) << name;
    }
}

TEST(Operator, TooNarrowGridForJumpsIsRejected) {
    auto m = fixture::model("kou");
    std::vector<double> spot{100.0};
    Grid g = build_grid(m, fixture::payoff("put"), spot, 0.5, 201, 20, 2.0);
    EXPECT_THROW(assemble(m, g, 1e-300), Error);
}

TEST(European, BlackScholesPutMatchesClosedForm) {
    auto s = solve("bs", "put", {100.0}, 1.0, 801, 400, 8.0);
    const double exact = oracle::bs_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0);
    EXPECT_NEAR(s.european.spot_value(), exact, 1e-3 * exact);
    std::vector<double> x{90.0};
    EXPECT_NEAR(interpolate(s.european, 0.0, x), oracle::bs_put(90.0, 100.0, 0.05, 0.0, 0.2, 1.0), 5e-3);
}

TEST(European, MertonPutMatchesPoissonMixture) {
    auto s = solve("merton", "put", {100.0}, 0.5, 1601, 200, 8.0);
    const double exact = oracle::merton_put(100.0, 100.0, 0.05, 0.0, 0.2, 0.5, 0.1, -0.1, 0.15);
    EXPECT_NEAR(s.european.spot_value(), exact, 1e-3 * exact);
}

TEST(European, ConstantPayoffIsDiscounted) {
    auto s = solve("bs", "constant", {100.0}, 1.0, 201, 50, 2.0);
    EXPECT_NEAR(s.european.spot_value(), 5.0 * std::exp(-0.05), 1e-12);
    EXPECT_NEAR(s.american.spot_value(), 5.0, 1e-12);
}

TEST(American, BlackScholesPutMatchesBinomial) {
    auto s = solve("bs", "put", {100.0}, 1.0, 801, 400, 8.0);
    const double crr = oracle::crr_put(100.0, 100.0, 0.05, 0.0, 0.2, 1.0, 5000, true);
    EXPECT_NEAR(s.american.spot_value(), crr, 5e-3 * crr);
    EXPECT_GT(s.american.spot_value(), s.european.spot_value());
    expect_obstacle(s.american);
}

TEST(American, ObstacleAndTerminalConditionOnJumpFixtures) {
    for (const auto& name : {"merton", "kou"}) {
        auto s = solve(name, "put", {100.0}, 0.5, 801, 100, name == std::string("kou") ? 2.0 : 8.0);
        expect_obstacle(s.american);
        EXPECT_GE(s.american.spot_value(), s.european.spot_value());
    }
}

TEST(American, PenaltyLadderIsMonotone) {
    auto s = solve("merton", "put", {100.0}, 0.5, 801, 100, 8.0);
    ASSERT_EQ(s.american.ladder.size(), 3u);
    for (double inc : s.american.ladder_min_increase) EXPECT_GE(inc, -1e-8);
}

TEST(American, NonMonotoneLadderIsRejected) {
    auto m = fixture::model("bs");
    auto p = fixture::payoff("put");
    std::vector<double> spot{100.0};
    Grid g = build_grid(m, p, spot, 1.0, 201, 50, 8.0);
    auto op = assemble(m, g);
    SolverOptions o;
    o.penalty_ladder = {1e4, 1e2};
    EXPECT_THROW(solve_american_penalty(m, p, g, op, o), Error);
}

TEST(American, ZeroRatePutHasNoEarlyExercise) {
    auto s = solve("bs_zero_rate", "put", {100.0}, 1.0, 801, 400, 8.0);
    EXPECT_LE(std::abs(s.american.spot_value() - s.european.spot_value()), 2.0 * grid_tolerance(s.grid, s.american.payoff));
    // The exact region is empty: u - psi is the call price. The band only flags nodes where that price is below
    // the band width tol (1 + psi).
    const double tol = s.american.exercise_tol;
    double z[1];
    for (int k = 0; k < s.grid.n_time; ++k)
        for (std::size_t j = 0; j < s.american.psi.size(); ++j) {
            if (!s.american.exercised(k, j)) continue;
            s.grid.coords(j, z);
            const double x = std::exp(z[0]);
            const double time_value = oracle::bs_call(x, 100.0, 0.0, 0.0, 0.2, 1.0 - s.grid.t(k));
            ASSERT_LE(time_value, 2.0 * tol * (1.0 + s.american.psi[j])) << "level " << k << " x " << x;
        }
}

TEST(American, ExerciseSetLiesWherePayoffIsPositive) {
    auto s = solve("kou", "put", {100.0}, 0.5, 801, 100, 2.0);
    for (int k = 0; k < s.grid.n_time; ++k) {
        auto r = exercise_region_report(s.american, s.american.payoff, s.grid.t(k));
        EXPECT_TRUE(r.inclusion);
        ASSERT_TRUE(r.boundary_price.has_value());
        EXPECT_LT(*r.boundary_price, 100.0);
    }
}

TEST(American, BoundaryIsNondecreasingAndNearBinomial) {
    auto s = solve("bs", "put", {100.0}, 1.0, 801, 400, 8.0);
    auto fb = free_boundary(s.american, s.american.payoff);
    const auto crr = oracle::crr_put_boundary(100.0, 100.0, 0.05, 0.0, 0.2, 1.0, 2000);
    double prev = 0.0;
    for (const auto& b : fb) {
        ASSERT_TRUE(b.price.has_value());
        EXPECT_GE(*b.price, prev - 1e-12);
        prev = *b.price;
    }
    // Compare where the tree has nodes on both sides of the boundary.
    for (double t : {0.25, 0.5, 0.75}) {
        const double tree = crr[static_cast<std::size_t>(t * crr.size())];
        const double pide = *fb[static_cast<std::size_t>(t * fb.size())].price;
        EXPECT_NEAR(pide, tree, 0.01 * tree) << "t = " << t;
    }
}

TEST(American, ResidualShrinksUnderRefinement) {
    auto m = fixture::model("bs");
    auto coarse = solve("bs", "put", {100.0}, 1.0, 401, 200, 8.0);
    auto fine = solve("bs", "put", {100.0}, 1.0, 801, 400, 8.0);
    const auto opts = refinement_residual_options(m, coarse.grid.max_dz(), 1.0);
    const double rc = complementarity_residual(coarse.american, coarse.op, opts).max_norm;
    const double rf = complementarity_residual(fine.american, fine.op, opts).max_norm;
    EXPECT_GE(rc / rf, 1.5) << rc << " -> " << rf;
}

TEST(American, TwoDimensionalMinPutProperties) {
    auto s = solve("merton_2d", "min_put_2d", {100.0, 100.0}, 0.5, 101, 30, 12.0);
    expect_obstacle(s.american);
    EXPECT_GT(s.american.spot_value(), s.european.spot_value());
    for (int k = 0; k < s.grid.n_time; k += 5) EXPECT_TRUE(exercise_region_report(s.american, s.american.payoff, s.grid.t(k)).inclusion);
    // Symmetric model and payoff: the solution is symmetric under swapping assets.
    const int n = s.grid.axes[0].n;
    for (int i0 = 0; i0 < n; i0 += 7)
        for (int i1 = 0; i1 < n; i1 += 11) {
            int a[2] = {i0, i1}, b[2] = {i1, i0};
            EXPECT_NEAR(s.american.values(0, s.grid.node(a)), s.american.values(0, s.grid.node(b)), 1e-8);
        }
}

TEST(Interpolate, OutsideTheGridIsOutOfDomain) {
    auto s = solve("bs", "put", {100.0}, 1.0, 201, 50, 8.0);
    std::vector<double> far{1e9}, zero{0.0}, inside{100.0};
    EXPECT_THROW(interpolate(s.american, 0.0, far), Error);
    EXPECT_THROW(interpolate(s.american, 0.0, zero), Error);
    EXPECT_THROW(interpolate(s.american, 2.0, inside), Error);
    EXPECT_NEAR(interpolate(s.american, 0.0, inside), s.american.spot_value(), 1e-12);
}

TEST(Solver, RejectsMismatchedInputs) {
    auto m = fixture::model("merton_2d");
    auto p1 = fixture::payoff("put");
    auto s1 = fixture::model("bs");
    std::vector<double> spot{100.0};
    Grid g = build_grid(s1, p1, spot, 1.0, 201, 50, 8.0);
    auto op = assemble(s1, g);
    EXPECT_THROW(solve_european(m, p1, g, op), Error);
}
