#ifndef AMERLEVY_PIDE_SOLVER_HPP
#define AMERLEVY_PIDE_SOLVER_HPP

#include "amerlevy/grid.hpp"
#include "amerlevy/levy_model.hpp"
#include "amerlevy/payoffs.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace amerlevy {

/// One weighted neighbour of a constant-coefficient stencil.
struct StencilEntry {
    int offset[2] = {0, 0};
    double weight = 0.0;
};

/**
 * Discrete generator of the log-price process on a Grid.
 *
 * The local part encodes (1/2) sum a_ij d_ij + sum b_i d_i (the rate term is
 * kept separately in `rate`); its weights sum to zero. The jump part is the
 * cell-mass kernel lambda P(J in cell), whose weights sum to lambda. When the
 * jump law factorizes over the axes, `separable` holds the per-axis
 * probability masses (offsets -reach..reach) and the convolution is applied
 * axis by axis.
 */
struct DiscreteOperator {
    int dim = 1;
    std::vector<double> dz;
    double dt = 0.0;
    double rate = 0.0;
    std::vector<StencilEntry> local;
    std::vector<bool> upwind;
    double intensity = 0.0;
    std::vector<StencilEntry> jumps;
    std::vector<std::vector<double>> separable;
    std::vector<int> jump_reach;
    std::vector<double> y_max;
    /// lambda (E[e^{J_i}] - 1), the price-coordinate compensator.
    std::vector<double> compensation;
    /// Halo width per axis used when applying the stencils.
    std::vector<int> halo;
    double tail_mass = 0.0;
};

/**
 * Builds the local stencil (central differences, upwind where the cell Péclet
 * number exceeds one, monotone seven-point mixed term) and the jump kernel.
 * Throws InvalidArgument when the grid aspect breaks the M-matrix property or
 * dt * lambda > 1, and QuadratureTailTooHeavy when the jump kernel does not fit
 * on the grid.
 */
DiscreteOperator assemble(const LevyModel& model, const Grid& grid, double y_max_tail = 1e-10);

/// Values of a field outside the grid, as a function of log-prices.
using Exterior = std::function<double(std::span<const double>)>;

/// Local plus jump generator (without -r) applied at every node.
std::vector<double> apply_generator(const DiscreteOperator& op, const Grid& grid, std::span<const double> values,
                                    const Exterior& exterior);

/**
 * Price-coordinate jump operator
 *   L_I u = sum_c K[c] u(z + y_c) - lambda u(z) - sum_i lambda (E e^{J_i} - 1) d_{z_i} u
 * with central differences for d_{z_i}.
 */
std::vector<double> apply_jump_operator(const DiscreteOperator& op, const Grid& grid, std::span<const double> values,
                                        const Exterior& exterior);

/// Far-field value: e^{-r tau} psi(F) with forwards F_i = x_i e^{(r - delta_i) tau}; American takes the max with psi(x).
double far_field(const Payoff& payoff, const Rates& rates, std::span<const double> z, double tau, bool american);

/// Dense (time level x node) storage.
class LevelField {
public:
    LevelField() = default;
    LevelField(int levels, std::size_t nodes, double fill = 0.0)
        : levels_(levels), nodes_(nodes), data_(static_cast<std::size_t>(levels) * nodes, fill) {}

    int levels() const { return levels_; }
    std::size_t nodes() const { return nodes_; }
    std::span<double> level(int k) { return {data_.data() + static_cast<std::size_t>(k) * nodes_, nodes_}; }
    std::span<const double> level(int k) const {
        return {data_.data() + static_cast<std::size_t>(k) * nodes_, nodes_};
    }
    double operator()(int k, std::size_t j) const { return data_[static_cast<std::size_t>(k) * nodes_ + j]; }
    double& operator()(int k, std::size_t j) { return data_[static_cast<std::size_t>(k) * nodes_ + j]; }
    bool empty() const { return data_.empty(); }

private:
    int levels_ = 0;
    std::size_t nodes_ = 0;
    std::vector<double> data_;
};

struct SolverOptions {
    std::vector<double> penalty_ladder{1e2, 1e3, 1e4};
    double exercise_tol = 1e-6;
    int newton_max_iter = 100;
    double monotone_slack = 1e-8;
    /// Successive ladder solutions within this relative distance count as converged.
    double ladder_rtol = 1e-4;
    int threads = 0;
};

/// Everything needed to build a grid, assemble and solve.
struct SolverConfig {
    int n_space = 801;
    int n_time = 400;
    double beta = 2.0;
    /// Slack of the payoff growth moment condition checked before solving.
    double epsilon = 0.1;
    GridOptions grid;
    SolverOptions solver;
};

struct Solution {
    Grid grid;
    Payoff payoff;
    Rates rates;
    bool american = false;
    std::vector<double> psi;
    LevelField values;
    LevelField jump_field;
    /// n (psi - u~)^+ of the last ladder solve; zero for European solutions.
    LevelField penalty_density;
    std::vector<std::uint8_t> exercise;
    double exercise_tol = 0.0;

    double penalty = 0.0;
    std::vector<double> ladder;
    /// min over nodes and levels of u_{n_{k+1}} - u_{n_k}, one entry per ladder step.
    std::vector<double> ladder_min_increase;
    /// max relative distance between the last two ladder solutions.
    double ladder_change = 0.0;
    bool ladder_converged = true;
    int newton_iterations_max = 0;

    bool exercised(int k, std::size_t j) const { return exercise[static_cast<std::size_t>(k) * psi.size() + j] != 0; }
    /// Value at the spot node at t = 0.
    double spot_value() const { return values(0, grid.center_node()); }
};

/// Exercise mask {psi > 0} and {u - psi <= tol (1 + psi)} at one node.
inline bool in_exercise_band(double u, double psi, double tol) { return psi > 0.0 && u - psi <= tol * (1.0 + psi); }

/// Recomputes the exercise mask of an American solution for another tolerance.
void recompute_exercise_set(Solution& solution, double tol);

Solution solve_european(const LevyModel& model, const Payoff& payoff, const Grid& grid, const DiscreteOperator& op,
                        const SolverOptions& options = {});

/**
 * Penalized obstacle solve for each value of the ladder. Each time step solves
 * the implicit local system with source n (psi - u)^+ by policy iteration and
 * then projects onto u >= psi. Throws PenaltyNonMonotone when a larger penalty
 * lowers the solution by more than the slack, NewtonStall when the inner
 * iteration does not settle.
 */
Solution solve_american_penalty(const LevyModel& model, const Payoff& payoff, const Grid& grid,
                                const DiscreteOperator& op, const SolverOptions& options = {});

/// L_I u at time level k, far field beyond the grid.
std::vector<double> apply_jump_operator(const Solution& solution, const DiscreteOperator& op, int k);

struct ResidualOptions {
    int cell_margin = 3;
    /// Lower bound on the exclusion margin in log-price units; lets refinement studies compare the same region.
    double min_margin_z = 0.0;
    /// Levels with T - t below this are left out of the max-norm (the terminal kink is singular in t too).
    double min_time_to_expiry = 0.0;
};

struct ResidualReport {
    /// Residual at levels 0..n_time-1; NaN on boundary nodes.
    LevelField field;
    double max_norm = 0.0;
    std::size_t nodes_used = 0;
    int argmax_level = -1;
    std::size_t argmax_node = 0;
};

/**
 * min(-(u^{k+1} - u^k)/dt - L u_bar + r u_bar, u^k - psi) with u_bar the average
 * of the two levels, L the assembled generator. The max-norm skips nodes
 * within the margin of a kink of psi or of a change in the exercise mask.
 */
ResidualReport complementarity_residual(const Solution& solution, const DiscreteOperator& op,
                                        const ResidualOptions& options = {});

/// Cell of a bilinear (d = 1: linear) interpolation stencil.
struct Cell {
    std::size_t corner[4] = {0, 0, 0, 0};
    double weight[4] = {0, 0, 0, 0};
    int count = 0;
};

/// Locates z on the grid; false when it falls outside.
bool locate(const Grid& grid, std::span<const double> z, Cell& cell);

inline double interpolate(const Cell& cell, std::span<const double> field) {
    double v = 0.0;
    for (int c = 0; c < cell.count; ++c) v += cell.weight[c] * field[cell.corner[c]];
    return v;
}

/// Linear in t, (bi)linear in log-price. Throws OutOfDomain outside the grid.
double interpolate(const Solution& solution, double t, std::span<const double> x);

/// max(dt, dz^2) times the payoff scale.
double grid_tolerance(const Grid& grid, const Payoff& payoff);

}  // namespace amerlevy

#endif  // AMERLEVY_PIDE_SOLVER_HPP
