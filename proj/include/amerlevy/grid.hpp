#ifndef AMERLEVY_GRID_HPP
#define AMERLEVY_GRID_HPP

#include "amerlevy/levy_model.hpp"
#include "amerlevy/payoffs.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace amerlevy {

/// One log-price axis: n uniformly spaced nodes on [z_min, z_max].
struct Axis {
    double z_min = 0.0;
    double z_max = 0.0;
    double dz = 0.0;
    double center = 0.0;
    int n = 0;

    double z(int i) const { return z_min + i * dz; }
};

/**
 * Tensor log-price grid (d = 1 or 2) with a uniform time axis on [0, T].
 *
 * Nodes are stored row-major with axis 0 varying slowest. The spot is the
 * middle node of every axis.
 */
struct Grid {
    int dim = 1;
    std::vector<Axis> axes;
    double T = 0.0;
    int n_time = 0;
    double dt = 0.0;
    double beta = 0.0;
    double trunc_tol = 0.0;

    std::size_t size() const;
    std::size_t stride(int axis) const { return axis + 1 < dim ? static_cast<std::size_t>(axes[1].n) : 1; }
    /// Multi-index of a node.
    void index(std::size_t node, std::span<int> idx) const;
    std::size_t node(std::span<const int> idx) const;
    void coords(std::size_t node, std::span<double> z) const;
    bool is_boundary(std::size_t node) const;
    std::size_t center_node() const;
    double t(int k) const { return k == n_time ? T : k * dt; }
    double max_dz() const;
};

struct GridOptions {
    double trunc_tol = 1e-8;
    double y_max_tail = 1e-10;
};

/// Minimum number of nodes per axis and time steps accepted by build_grid.
inline constexpr int kMinSpaceNodes = 51;
inline constexpr int kMinTimeSteps = 10;

/**
 * Grid centred on ln(spot) with half-width
 *   W_i = ln(1/trunc_tol)/beta + max(|b_i| T + 5 sqrt(a_ii T), y_max_i),
 * where y_max_i holds all but y_max_tail of the jump mass on axis i.
 * Throws BetaTooSmall unless beta exceeds the payoff growth exponent.
 * An even n_space is rounded up so that the spot is a node.
 */
Grid build_grid(const LevyModel& model, const Payoff& payoff, std::span<const double> spot, double T, int n_space,
                int n_time, double beta, const GridOptions& options = {});

/// Half-width used by build_grid on one axis.
double grid_half_width(const LevyModel& model, int axis, double T, double beta, const GridOptions& options);

}  // namespace amerlevy

#endif  // AMERLEVY_GRID_HPP
