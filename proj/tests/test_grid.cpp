#include "amerlevy/error.hpp"
#include "amerlevy/grid.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace amerlevy;

namespace {

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

TEST(Grid, CentersSpotOnANode) {
    auto m = fixture::model("merton");
    auto p = fixture::payoff("put");
    std::vector<double> spot{93.0};
    Grid g = build_grid(m, p, spot, 0.5, 201, 20, 2.0);
    double z[1];
    g.coords(g.center_node(), z);
    EXPECT_NEAR(std::exp(z[0]), 93.0, 1e-12);
    EXPECT_EQ(g.axes[0].n, 201);
    EXPECT_NEAR(g.dt * g.n_time, 0.5, 1e-15);
    EXPECT_EQ(g.t(g.n_time), 0.5);
}

TEST(Grid, EvenNodeCountsAreRoundedUp) {
    auto m = fixture::model("bs");
    std::vector<double> spot{100.0};
    Grid g = build_grid(m, fixture::payoff("put"), spot, 1.0, 200, 20, 2.0);
    EXPECT_EQ(g.axes[0].n, 201);
}

TEST(Grid, HalfWidthCoversTruncationAndJumps) {
    auto m = fixture::model("kou");
    GridOptions o;
    const double W = grid_half_width(m, 0, 0.5, 2.0, o);
    EXPECT_GE(W, std::log(1.0 / o.trunc_tol) / 2.0 + m.jumps().tail_radius(0, o.y_max_tail));
    EXPECT_GT(grid_half_width(m, 0, 0.5, 1.0, o), W);
}

TEST(Grid, TwoDimensionalIndexing) {
    auto m = fixture::model("merton_2d");
    std::vector<double> spot{100.0, 110.0};
    Grid g = build_grid(m, fixture::payoff("min_put_2d"), spot, 0.5, 51, 10, 12.0);
    EXPECT_EQ(g.size(), 51u * 51u);
    int idx[2] = {7, 33};
    const std::size_t node = g.node(idx);
    int back[2];
    g.index(node, back);
    EXPECT_EQ(back[0], 7);
    EXPECT_EQ(back[1], 33);
    double z[2];
    g.coords(g.center_node(), z);
    EXPECT_NEAR(std::exp(z[1]), 110.0, 1e-10);
    int edge[2] = {0, 20};
    EXPECT_TRUE(g.is_boundary(g.node(edge)));
    EXPECT_FALSE(g.is_boundary(g.center_node()));
}

TEST(Grid, RejectsInvalidInputs) {
    auto m = fixture::model("bs");
    auto p = fixture::payoff("put");
    std::vector<double> spot{100.0}, bad{-1.0};
    EXPECT_EQ(code_of([&] { build_grid(m, p, spot, 1.0, 21, 20, 2.0); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { build_grid(m, p, spot, 1.0, 201, 5, 2.0); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { build_grid(m, p, spot, 0.0, 201, 20, 2.0); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { build_grid(m, p, bad, 1.0, 201, 20, 2.0); }), ErrorCode::InvalidDomain);
}

TEST(Grid, BetaMustExceedGrowth) {
    auto m = fixture::model("bs");
    std::vector<double> spot{100.0};
    auto call = Payoff::index_call({1.0}, 100.0);
    EXPECT_EQ(code_of([&] { build_grid(m, call, spot, 1.0, 201, 20, 1.0); }), ErrorCode::BetaTooSmall);
    EXPECT_NO_THROW(build_grid(m, call, spot, 1.0, 201, 20, 1.5));
}
