#include "amerlevy/grid.hpp"

#include "amerlevy/error.hpp"

#include <algorithm>
#include <cmath>

namespace amerlevy {

std::size_t Grid::size() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= static_cast<std::size_t>(a.n);
    return n;
}

void Grid::index(std::size_t node, std::span<int> idx) const {
    if (dim == 1) {
        idx[0] = static_cast<int>(node);
    } else {
        idx[0] = static_cast<int>(node / axes[1].n);
        idx[1] = static_cast<int>(node % axes[1].n);
    }
}

std::size_t Grid::node(std::span<const int> idx) const {
    if (dim == 1) return static_cast<std::size_t>(idx[0]);
    return static_cast<std::size_t>(idx[0]) * axes[1].n + idx[1];
}

void Grid::coords(std::size_t n, std::span<double> z) const {
    int idx[2];
    index(n, idx);
    for (int i = 0; i < dim; ++i) z[i] = axes[i].z(idx[i]);
}

bool Grid::is_boundary(std::size_t n) const {
    int idx[2];
    index(n, idx);
    for (int i = 0; i < dim; ++i)
        if (idx[i] == 0 || idx[i] == axes[i].n - 1) return true;
    return false;
}

std::size_t Grid::center_node() const {
    int idx[2] = {axes[0].n / 2, dim > 1 ? axes[1].n / 2 : 0};
    return node(idx);
}

double Grid::max_dz() const {
    double m = 0.0;
    for (const auto& a : axes) m = std::max(m, a.dz);
    return m;
}

double grid_half_width(const LevyModel& model, int axis, double T, double beta, const GridOptions& options) {
    const auto& jumps = model.jumps();
    const double y_max = jumps.active() ? jumps.tail_radius(axis, options.y_max_tail / model.dim()) : 0.0;
    const double spread =
        std::abs(model.log_drift()(axis)) * T + 5.0 * std::sqrt(model.gaussian().variance(axis) * T);
    return std::log(1.0 / options.trunc_tol) / beta + std::max(spread, y_max);
}

Grid build_grid(const LevyModel& model, const Payoff& payoff, std::span<const double> spot, double T, int n_space,
                int n_time, double beta, const GridOptions& options) {
    const int d = model.dim();
    if (d < 1 || d > 2) throw Error(ErrorCode::InvalidArgument, "the PIDE solver supports d = 1 or 2");
    if (payoff.dim != d || static_cast<int>(spot.size()) != d)
        throw Error(ErrorCode::InvalidArgument, "payoff/spot dimension differs from the model dimension");
    for (double s : spot)
        if (!(s > 0.0)) throw Error(ErrorCode::InvalidDomain, "spot prices must be strictly positive");
    if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "maturity must be positive");
    if (n_space < kMinSpaceNodes || n_time < kMinTimeSteps)
        throw Error(ErrorCode::InvalidArgument, "need n_space >= 51 and n_time >= 10");
    if (!(options.trunc_tol > 0.0 && options.trunc_tol < 1.0))
        throw Error(ErrorCode::InvalidArgument, "truncation tolerance must lie in (0, 1)");
    const double p = growth_exponent(payoff);
    if (!(beta > p))
        throw Error(ErrorCode::BetaTooSmall, "beta = " + std::to_string(beta) +
                                                 " must exceed the payoff growth exponent " + std::to_string(p));
    if (n_space % 2 == 0) ++n_space;

    Grid g;
    g.dim = d;
    g.T = T;
    g.n_time = n_time;
    g.dt = T / n_time;
    g.beta = beta;
    g.trunc_tol = options.trunc_tol;
    for (int i = 0; i < d; ++i) {
        const double W = grid_half_width(model, i, T, beta, options);
        Axis a;
        a.center = std::log(spot[i]);
        a.n = n_space;
        a.dz = 2.0 * W / (n_space - 1);
        a.z_min = a.center - W;
        a.z_max = a.center + W;
        g.axes.push_back(a);
    }
    return g;
}

}  // namespace amerlevy
