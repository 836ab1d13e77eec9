#include "amerlevy/pide_solver.hpp"

#include "amerlevy/error.hpp"
#include "amerlevy/parallel.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace amerlevy {

namespace {

// Copy of a field surrounded by a halo of exterior values, row-major like the grid.
class Halo {
public:
    Halo(const Grid& grid, const std::vector<int>& width) : grid_(grid) {
        h0_ = width[0];
        h1_ = grid.dim > 1 ? width[1] : 0;
        p0_ = grid.axes[0].n + 2 * h0_;
        p1_ = grid.dim > 1 ? grid.axes[1].n + 2 * h1_ : 1;
        data_.assign(static_cast<std::size_t>(p0_) * p1_, 0.0);
    }

    void fill(std::span<const double> u, const Exterior& exterior) {
        const int n0 = grid_.axes[0].n;
        const int n1 = grid_.dim > 1 ? grid_.axes[1].n : 1;
        double z[2];
        for (int q0 = 0; q0 < p0_; ++q0) {
            const int i0 = q0 - h0_;
            for (int q1 = 0; q1 < p1_; ++q1) {
                const int i1 = q1 - h1_;
                double& slot = data_[static_cast<std::size_t>(q0) * p1_ + q1];
                if (i0 >= 0 && i0 < n0 && i1 >= 0 && i1 < n1) {
                    slot = u[static_cast<std::size_t>(i0) * n1 + i1];
                } else {
                    z[0] = grid_.axes[0].z(i0);
                    if (grid_.dim > 1) z[1] = grid_.axes[1].z(i1);
                    slot = exterior(std::span<const double>(z, grid_.dim));
                }
            }
        }
    }

    std::ptrdiff_t offset(int o0, int o1) const { return static_cast<std::ptrdiff_t>(o0) * p1_ + o1; }
    std::size_t base(int i0, int i1) const { return static_cast<std::size_t>(i0 + h0_) * p1_ + (i1 + h1_); }
    const double* data() const { return data_.data(); }
    int rows() const { return p0_; }
    int cols() const { return p1_; }
    int h0() const { return h0_; }
    int h1() const { return h1_; }

private:
    const Grid& grid_;
    int h0_ = 0, h1_ = 0, p0_ = 0, p1_ = 1;
    std::vector<double> data_;
};

int cols_of(const Grid& g) { return g.dim > 1 ? g.axes[1].n : 1; }

// sum_c K[c] u(z + y_c) at every node.
void convolve(const DiscreteOperator& op, const Grid& grid, const Halo& H, std::span<double> out, int threads) {
    const int n0 = grid.axes[0].n, n1 = cols_of(grid);
    if (op.jumps.empty()) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    const double* P = H.data();
    if (op.separable.size() == 2) {
        const auto& m0 = op.separable[0];
        const auto& m1 = op.separable[1];
        const int R0 = static_cast<int>(m0.size() / 2), R1 = static_cast<int>(m1.size() / 2);
        const int rows = H.rows();
        std::vector<double> tmp(static_cast<std::size_t>(rows) * n1);
        parallel_for(static_cast<std::size_t>(rows), threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t q0 = b; q0 < e; ++q0) {
                const double* row = P + q0 * H.cols() + H.h1() - R1;
                for (int i1 = 0; i1 < n1; ++i1) {
                    double s = 0.0;
                    for (std::size_t c = 0; c < m1.size(); ++c) s += m1[c] * row[i1 + c];
                    tmp[q0 * n1 + i1] = s;
                }
            }
        });
        parallel_for(static_cast<std::size_t>(n0), threads, [&](std::size_t b, std::size_t e) {
            for (std::size_t i0 = b; i0 < e; ++i0) {
                double* o = out.data() + i0 * n1;
                std::fill(o, o + n1, 0.0);
                for (std::size_t c = 0; c < m0.size(); ++c) {
                    if (m0[c] == 0.0) continue;
                    const double w = op.intensity * m0[c];
                    const double* t = tmp.data() + (i0 + H.h0() - R0 + c) * n1;
                    for (int i1 = 0; i1 < n1; ++i1) o[i1] += w * t[i1];
                }
            }
        });
        return;
    }
    std::vector<std::ptrdiff_t> offs;
    std::vector<double> w;
    for (const auto& e : op.jumps) {
        offs.push_back(H.offset(e.offset[0], e.offset[1]));
        w.push_back(e.weight);
    }
    parallel_for(static_cast<std::size_t>(n0), threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i0 = b; i0 < e; ++i0)
            for (int i1 = 0; i1 < n1; ++i1) {
                const double* c = P + H.base(static_cast<int>(i0), i1);
                double s = 0.0;
                for (std::size_t k = 0; k < offs.size(); ++k) s += w[k] * c[offs[k]];
                out[i0 * n1 + i1] = s;
            }
    });
}

void apply_local(const DiscreteOperator& op, const Grid& grid, const Halo& H, std::span<double> out) {
    const int n0 = grid.axes[0].n, n1 = cols_of(grid);
    const double* P = H.data();
    for (int i0 = 0; i0 < n0; ++i0)
        for (int i1 = 0; i1 < n1; ++i1) {
            const double* c = P + H.base(i0, i1);
            double s = 0.0;
            for (const auto& e : op.local) s += e.weight * c[H.offset(e.offset[0], e.offset[1])];
            out[static_cast<std::size_t>(i0) * n1 + i1] = s;
        }
}

// conv - lambda u - sum_i c_i d_i u, given conv.
void jump_field_from(const DiscreteOperator& op, const Grid& grid, const Halo& H, std::span<const double> conv,
                     std::span<double> out) {
    const int n0 = grid.axes[0].n, n1 = cols_of(grid);
    const double* P = H.data();
    for (int i0 = 0; i0 < n0; ++i0)
        for (int i1 = 0; i1 < n1; ++i1) {
            const std::size_t j = static_cast<std::size_t>(i0) * n1 + i1;
            const double* c = P + H.base(i0, i1);
            double v = conv[j] - op.intensity * c[0];
            for (int i = 0; i < grid.dim; ++i) {
                if (op.compensation[i] == 0.0) continue;
                const std::ptrdiff_t s = i == 0 ? H.offset(1, 0) : H.offset(0, 1);
                v -= op.compensation[i] * (c[s] - c[-s]) / (2.0 * op.dz[i]);
            }
            out[j] = v;
        }
}

// rho (I/dt - A) restricted to interior nodes, Dirichlet data moved to the right-hand side.
class ImplicitSystem {
public:
    ImplicitSystem(const Grid& grid, const DiscreteOperator& op) : grid_(grid) {
        const std::size_t nodes = grid.size();
        rho_ = std::exp(op.rate * grid.dt);
        index_.assign(nodes, -1);
        for (std::size_t j = 0; j < nodes; ++j)
            if (!grid.is_boundary(j)) {
                index_[j] = static_cast<long>(interior_.size());
                interior_.push_back(j);
            }
        const long m = static_cast<long>(interior_.size());
        const int n1 = cols_of(grid);
        std::vector<Eigen::Triplet<double>> triplets;
        diag_base_.assign(m, 0.0);
        for (long ii = 0; ii < m; ++ii) {
            const std::size_t j = interior_[ii];
            for (const auto& e : op.local) {
                const std::size_t nb = j + static_cast<std::ptrdiff_t>(e.offset[0]) * n1 + e.offset[1];
                if (e.offset[0] == 0 && e.offset[1] == 0) {
                    diag_base_[ii] = rho_ * (1.0 / grid.dt - e.weight);
                } else if (index_[nb] >= 0) {
                    triplets.emplace_back(ii, index_[nb], -rho_ * e.weight);
                } else {
                    coupling_.push_back({ii, nb, rho_ * e.weight});
                }
            }
        }
        if (grid.dim == 1) {
            // Tridiagonal: entries (ii, ii-1) and (ii, ii+1).
            lower_.assign(m, 0.0);
            upper_.assign(m, 0.0);
            for (const auto& t : triplets) {
                if (t.col() == t.row() - 1) lower_[t.row()] = t.value();
                else if (t.col() == t.row() + 1) upper_[t.row()] = t.value();
            }
            cprime_.resize(m);
            dprime_.resize(m);
        } else {
            for (long ii = 0; ii < m; ++ii) triplets.emplace_back(ii, ii, diag_base_[ii]);
            A_.resize(m, m);
            A_.setFromTriplets(triplets.begin(), triplets.end());
            A_.makeCompressed();
            diag_pos_.assign(m, -1);
            for (long ii = 0; ii < m; ++ii)
                for (Eigen::Index p = A_.outerIndexPtr()[ii]; p < A_.outerIndexPtr()[ii + 1]; ++p)
                    if (A_.innerIndexPtr()[p] == ii) diag_pos_[ii] = p;
            x_.resize(m);
            b_.resize(m);
            solver_.setTolerance(1e-13);
            solver_.setMaxIterations(5000);
        }
    }

    const std::vector<std::size_t>& interior() const { return interior_; }

    /// Solves (M + diag(pen)) u = rhs + pen psi on interior nodes; u carries the Dirichlet values on entry.
    void solve(std::span<const double> rhs, std::span<const double> pen, std::span<const double> psi,
               std::span<double> u) {
        const long m = static_cast<long>(interior_.size());
        std::vector<double>& b = scratch_;
        b.resize(m);
        for (long ii = 0; ii < m; ++ii) {
            const std::size_t j = interior_[ii];
            b[ii] = rhs[j] + pen[j] * psi[j];
        }
        for (const auto& c : coupling_) b[c.row] += c.weight * u[c.node];
        if (grid_.dim == 1) {
            // Thomas algorithm; diagonally dominant so no pivoting is needed.
            for (long ii = 0; ii < m; ++ii) {
                const double diag = diag_base_[ii] + pen[interior_[ii]];
                const double denom = ii == 0 ? diag : diag - lower_[ii] * cprime_[ii - 1];
                if (!(std::abs(denom) > 0.0)) throw Error(ErrorCode::LinearSolveFailure, "zero pivot");
                cprime_[ii] = upper_[ii] / denom;
                dprime_[ii] = (ii == 0 ? b[ii] : b[ii] - lower_[ii] * dprime_[ii - 1]) / denom;
            }
            double next = 0.0;
            for (long ii = m - 1; ii >= 0; --ii) {
                next = dprime_[ii] - (ii + 1 < m ? cprime_[ii] * next : 0.0);
                u[interior_[ii]] = next;
            }
            return;
        }
        double* values = A_.valuePtr();
        for (long ii = 0; ii < m; ++ii) {
            values[diag_pos_[ii]] = diag_base_[ii] + pen[interior_[ii]];
            b_[ii] = b[ii];
            x_[ii] = u[interior_[ii]];
        }
        solver_.compute(A_);
        x_ = solver_.solveWithGuess(b_, x_);
        if (solver_.info() != Eigen::Success && !(solver_.error() < 1e-10))
            throw Error(ErrorCode::LinearSolveFailure,
                        "BiCGSTAB stopped at relative residual " + std::to_string(solver_.error()));
        for (long ii = 0; ii < m; ++ii) u[interior_[ii]] = x_[ii];
    }

private:
    struct Coupling {
        long row;
        std::size_t node;
        double weight;
    };

    const Grid& grid_;
    double rho_ = 1.0;
    std::vector<long> index_;
    std::vector<std::size_t> interior_;
    std::vector<double> diag_base_;
    std::vector<Coupling> coupling_;
    std::vector<double> lower_, upper_, cprime_, dprime_, scratch_;
    Eigen::SparseMatrix<double, Eigen::RowMajor> A_;
    std::vector<Eigen::Index> diag_pos_;
    Eigen::VectorXd x_, b_;
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::DiagonalPreconditioner<double>> solver_;
};

std::vector<double> payoff_on_nodes(const Payoff& payoff, const Grid& grid) {
    std::vector<double> psi(grid.size());
    double z[2];
    for (std::size_t j = 0; j < psi.size(); ++j) {
        grid.coords(j, std::span<double>(z, grid.dim));
        psi[j] = log_transform(payoff, std::span<const double>(z, grid.dim));
    }
    return psi;
}

struct March {
    LevelField values, jump_field, density;
    int newton_max = 0;
};

March march(const LevyModel& model, const Payoff& payoff, const Grid& grid, const DiscreteOperator& op,
            const std::vector<double>& psi, bool american, double penalty, const SolverOptions& options) {
    const int N = grid.n_time;
    const std::size_t nodes = grid.size();
    const Rates& rates = model.rates();
    March out{LevelField(N + 1, nodes), LevelField(N + 1, nodes), LevelField(N + 1, nodes), 0};
    auto last = out.values.level(N);
    std::copy(psi.begin(), psi.end(), last.begin());

    Halo H(grid, op.halo);
    std::vector<double> conv(nodes), rhs(nodes), u(nodes), pen(nodes, 0.0);
    auto exterior_at = [&](double tau) {
        return Exterior([&payoff, &rates, tau, american](std::span<const double> z) {
            return far_field(payoff, rates, z, tau, american);
        });
    };
    H.fill(last, exterior_at(0.0));
    convolve(op, grid, H, conv, options.threads);
    jump_field_from(op, grid, H, conv, out.jump_field.level(N));

    ImplicitSystem system(grid, op);
    std::vector<std::size_t> boundary;
    for (std::size_t j = 0; j < nodes; ++j)
        if (grid.is_boundary(j)) boundary.push_back(j);
    std::vector<std::uint8_t> active(nodes, 0);
    double z[2];

    for (int k = N - 1; k >= 0; --k) {
        const double tau = grid.T - grid.t(k);
        auto next = out.values.level(k + 1);
        for (std::size_t j = 0; j < nodes; ++j) {
            rhs[j] = next[j] / grid.dt + conv[j] - op.intensity * next[j];
            u[j] = next[j];
        }
        for (std::size_t j : boundary) {
            grid.coords(j, std::span<double>(z, grid.dim));
            u[j] = far_field(payoff, rates, std::span<const double>(z, grid.dim), tau, american);
        }
        auto dens = out.density.level(k);
        if (!american) {
            system.solve(rhs, pen, psi, u);
        } else {
            int it = 0;
            for (;;) {
                for (std::size_t j : system.interior()) pen[j] = active[j] ? penalty : 0.0;
                system.solve(rhs, pen, psi, u);
                ++it;
                bool changed = false;
                for (std::size_t j : system.interior()) {
                    const std::uint8_t a = u[j] < psi[j];
                    if (a != active[j]) {
                        active[j] = a;
                        changed = true;
                    }
                }
                if (!changed) break;
                if (it >= options.newton_max_iter)
                    throw Error(ErrorCode::NewtonStall, "penalty iteration did not settle at time level " +
                                                            std::to_string(k) + " (n = " + std::to_string(penalty) +
                                                            ")");
            }
            out.newton_max = std::max(out.newton_max, it);
            for (std::size_t j : system.interior()) {
                dens[j] = penalty * std::max(psi[j] - u[j], 0.0);
                u[j] = std::max(u[j], psi[j]);
            }
        }
        auto level = out.values.level(k);
        std::copy(u.begin(), u.end(), level.begin());
        H.fill(level, exterior_at(tau));
        convolve(op, grid, H, conv, options.threads);
        jump_field_from(op, grid, H, conv, out.jump_field.level(k));
    }
    return out;
}

Solution make_solution(const LevyModel& model, const Payoff& payoff, const Grid& grid, bool american,
                       std::vector<double> psi, March&& m, const SolverOptions& options) {
    Solution s;
    s.grid = grid;
    s.payoff = payoff;
    s.rates = model.rates();
    s.american = american;
    s.psi = std::move(psi);
    s.values = std::move(m.values);
    s.jump_field = std::move(m.jump_field);
    s.penalty_density = std::move(m.density);
    s.newton_iterations_max = m.newton_max;
    s.exercise.assign(static_cast<std::size_t>(grid.n_time + 1) * grid.size(), 0);
    recompute_exercise_set(s, options.exercise_tol);
    return s;
}

void check_inputs(const LevyModel& model, const Payoff& payoff, const Grid& grid, const DiscreteOperator& op) {
    payoff.validate();
    if (model.dim() != grid.dim || payoff.dim != grid.dim || op.dim != grid.dim)
        throw Error(ErrorCode::InvalidArgument, "model, payoff, grid and operator dimensions differ");
    if (op.dt != grid.dt) throw Error(ErrorCode::InvalidArgument, "operator was assembled for another grid");
}

// Marks nodes within `margin` cells (per axis, box distance) of a marked node.
std::vector<std::uint8_t> dilate(const Grid& grid, std::vector<std::uint8_t> mask, const int margin[2]) {
    const int n0 = grid.axes[0].n, n1 = cols_of(grid);
    std::vector<std::uint8_t> tmp(mask.size(), 0);
    for (int i0 = 0; i0 < n0; ++i0)
        for (int i1 = 0; i1 < n1; ++i1) {
            if (!mask[static_cast<std::size_t>(i0) * n1 + i1]) continue;
            for (int q = std::max(0, i0 - margin[0]); q <= std::min(n0 - 1, i0 + margin[0]); ++q)
                tmp[static_cast<std::size_t>(q) * n1 + i1] = 1;
        }
    if (grid.dim == 1) return tmp;
    std::fill(mask.begin(), mask.end(), 0);
    for (int i0 = 0; i0 < n0; ++i0)
        for (int i1 = 0; i1 < n1; ++i1) {
            if (!tmp[static_cast<std::size_t>(i0) * n1 + i1]) continue;
            for (int q = std::max(0, i1 - margin[1]); q <= std::min(n1 - 1, i1 + margin[1]); ++q)
                mask[static_cast<std::size_t>(i0) * n1 + q] = 1;
        }
    return mask;
}

// Nodes whose label differs from an axis or diagonal neighbour.
template <class Label>
std::vector<std::uint8_t> label_edges(const Grid& grid, Label label) {
    const int n0 = grid.axes[0].n, n1 = cols_of(grid);
    std::vector<std::uint8_t> edge(grid.size(), 0);
    for (int i0 = 0; i0 < n0; ++i0)
        for (int i1 = 0; i1 < n1; ++i1) {
            const std::size_t j = static_cast<std::size_t>(i0) * n1 + i1;
            for (int d0 = -1; d0 <= 1 && !edge[j]; ++d0)
                for (int d1 = (grid.dim > 1 ? -1 : 0); d1 <= (grid.dim > 1 ? 1 : 0); ++d1) {
                    const int q0 = i0 + d0, q1 = i1 + d1;
                    if (q0 < 0 || q0 >= n0 || q1 < 0 || q1 >= n1) continue;
                    if (label(static_cast<std::size_t>(q0) * n1 + q1) != label(j)) {
                        edge[j] = 1;
                        break;
                    }
                }
        }
    return edge;
}

}  // namespace

double far_field(const Payoff& payoff, const Rates& rates, std::span<const double> z, double tau, bool american) {
    double x[2], F[2];
    const int d = static_cast<int>(z.size());
    for (int i = 0; i < d; ++i) {
        x[i] = std::exp(z[i]);
        F[i] = x[i] * std::exp((rates.r - rates.delta(i)) * tau);
    }
    const double european = std::exp(-rates.r * tau) * evaluate(payoff, std::span<const double>(F, d));
    if (!american) return european;
    return std::max(european, evaluate(payoff, std::span<const double>(x, d)));
}

std::vector<double> apply_generator(const DiscreteOperator& op, const Grid& grid, std::span<const double> values,
                                    const Exterior& exterior) {
    Halo H(grid, op.halo);
    H.fill(values, exterior);
    std::vector<double> local(grid.size()), conv(grid.size());
    apply_local(op, grid, H, local);
    convolve(op, grid, H, conv, 1);
    for (std::size_t j = 0; j < local.size(); ++j) local[j] += conv[j] - op.intensity * values[j];
    return local;
}

std::vector<double> apply_jump_operator(const DiscreteOperator& op, const Grid& grid, std::span<const double> values,
                                        const Exterior& exterior) {
    Halo H(grid, op.halo);
    H.fill(values, exterior);
    std::vector<double> conv(grid.size()), out(grid.size());
    convolve(op, grid, H, conv, 1);
    jump_field_from(op, grid, H, conv, out);
    return out;
}

std::vector<double> apply_jump_operator(const Solution& solution, const DiscreteOperator& op, int k) {
    if (k < 0 || k > solution.grid.n_time) throw Error(ErrorCode::InvalidArgument, "time level out of range");
    const double tau = solution.grid.T - solution.grid.t(k);
    const Payoff& payoff = solution.payoff;
    const Rates& rates = solution.rates;
    const bool american = solution.american;
    return apply_jump_operator(op, solution.grid, solution.values.level(k), [&](std::span<const double> z) {
        return far_field(payoff, rates, z, tau, american);
    });
}

void recompute_exercise_set(Solution& s, double tol) {
    s.exercise_tol = tol;
    const std::size_t nodes = s.psi.size();
    s.exercise.assign(static_cast<std::size_t>(s.grid.n_time + 1) * nodes, 0);
    if (!s.american) return;
    for (int k = 0; k <= s.grid.n_time; ++k)
        for (std::size_t j = 0; j < nodes; ++j)
            s.exercise[static_cast<std::size_t>(k) * nodes + j] = in_exercise_band(s.values(k, j), s.psi[j], tol);
}

Solution solve_european(const LevyModel& model, const Payoff& payoff, const Grid& grid, const DiscreteOperator& op,
                        const SolverOptions& options) {
    check_inputs(model, payoff, grid, op);
    auto psi = payoff_on_nodes(payoff, grid);
    March m = march(model, payoff, grid, op, psi, false, 0.0, options);
    return make_solution(model, payoff, grid, false, std::move(psi), std::move(m), options);
}

Solution solve_american_penalty(const LevyModel& model, const Payoff& payoff, const Grid& grid,
                                const DiscreteOperator& op, const SolverOptions& options) {
    check_inputs(model, payoff, grid, op);
    const auto& ladder = options.penalty_ladder;
    if (ladder.empty()) throw Error(ErrorCode::InvalidArgument, "empty penalty ladder");
    for (std::size_t i = 0; i < ladder.size(); ++i)
        if (!(ladder[i] > 0.0) || (i > 0 && !(ladder[i] > ladder[i - 1])))
            throw Error(ErrorCode::InvalidArgument, "penalty ladder must be positive and increasing");

    auto psi = payoff_on_nodes(payoff, grid);
    std::vector<double> min_increase;
    double change = 0.0;
    int newton_max = 0;
    March prev;
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        March cur = march(model, payoff, grid, op, psi, true, ladder[i], options);
        newton_max = std::max(newton_max, cur.newton_max);
        if (i > 0) {
            double lowest = std::numeric_limits<double>::infinity();
            change = 0.0;
            for (int k = 0; k <= grid.n_time; ++k)
                for (std::size_t j = 0; j < psi.size(); ++j) {
                    const double a = prev.values(k, j), b = cur.values(k, j);
                    lowest = std::min(lowest, b - a);
                    change = std::max(change, std::abs(b - a) / std::max(1.0, std::abs(b)));
                }
            min_increase.push_back(lowest);
            if (lowest < -options.monotone_slack)
                throw Error(ErrorCode::PenaltyNonMonotone, "solution decreased by " + std::to_string(-lowest) +
                                                               " when the penalty rose to " +
                                                               std::to_string(ladder[i]));
        }
        prev = std::move(cur);
    }
    Solution s = make_solution(model, payoff, grid, true, std::move(psi), std::move(prev), options);
    s.penalty = ladder.back();
    s.ladder = ladder;
    s.ladder_min_increase = std::move(min_increase);
    s.ladder_change = change;
    s.ladder_converged = change <= options.ladder_rtol;
    s.newton_iterations_max = newton_max;
    return s;
}

ResidualReport complementarity_residual(const Solution& s, const DiscreteOperator& op,
                                        const ResidualOptions& options) {
    const Grid& grid = s.grid;
    const int N = grid.n_time;
    const std::size_t nodes = grid.size();
    ResidualReport rep;
    rep.field = LevelField(N, nodes, std::numeric_limits<double>::quiet_NaN());

    int margin[2] = {0, 0};
    for (int i = 0; i < grid.dim; ++i)
        margin[i] = std::max(options.cell_margin,
                             static_cast<int>(std::ceil(options.min_margin_z / grid.axes[i].dz - 1e-9)));

    std::vector<int> piece(nodes);
    double z[2], x[2];
    for (std::size_t j = 0; j < nodes; ++j) {
        grid.coords(j, std::span<double>(z, grid.dim));
        for (int i = 0; i < grid.dim; ++i) x[i] = std::exp(z[i]);
        piece[j] = smooth_piece(s.payoff, std::span<const double>(x, grid.dim));
    }
    const auto kink = dilate(grid, label_edges(grid, [&](std::size_t j) { return piece[j]; }), margin);

    Halo H(grid, op.halo);
    std::vector<double> ubar(nodes), local(nodes), conv(nodes);
    for (int k = 0; k < N; ++k) {
        const double tau0 = grid.T - grid.t(k), tau1 = grid.T - grid.t(k + 1);
        auto uk = s.values.level(k);
        auto uk1 = s.values.level(k + 1);
        for (std::size_t j = 0; j < nodes; ++j) ubar[j] = 0.5 * (uk[j] + uk1[j]);
        H.fill(ubar, [&](std::span<const double> zz) {
            return 0.5 * (far_field(s.payoff, s.rates, zz, tau0, s.american) +
                          far_field(s.payoff, s.rates, zz, tau1, s.american));
        });
        apply_local(op, grid, H, local);
        convolve(op, grid, H, conv, 1);

        std::vector<std::uint8_t> fb(nodes, 0);
        if (s.american) {
            auto ex0 = label_edges(grid, [&](std::size_t j) { return s.exercised(k, j); });
            auto ex1 = label_edges(grid, [&](std::size_t j) { return s.exercised(k + 1, j); });
            for (std::size_t j = 0; j < nodes; ++j) fb[j] = ex0[j] | ex1[j];
            fb = dilate(grid, std::move(fb), margin);
        }
        auto field = rep.field.level(k);
        const bool window_out = tau0 < options.min_time_to_expiry - 1e-12;
        for (std::size_t j = 0; j < nodes; ++j) {
            if (grid.is_boundary(j)) continue;
            const double gen = local[j] + conv[j] - op.intensity * ubar[j];
            const double pde = -(uk1[j] - uk[j]) / grid.dt - gen + op.rate * ubar[j];
            const double r = s.american ? std::min(pde, uk[j] - s.psi[j]) : pde;
            field[j] = r;
            if (kink[j] || fb[j] || window_out) continue;
            ++rep.nodes_used;
            if (std::abs(r) > rep.max_norm) {
                rep.max_norm = std::abs(r);
                rep.argmax_level = k;
                rep.argmax_node = j;
            }
        }
    }
    return rep;
}

bool locate(const Grid& grid, std::span<const double> z, Cell& cell) {
    int lo[2] = {0, 0};
    double f[2] = {0.0, 0.0};
    for (int i = 0; i < grid.dim; ++i) {
        const Axis& a = grid.axes[i];
        double t = (z[i] - a.z_min) / a.dz;
        if (!(t >= -1e-9 && t <= a.n - 1 + 1e-9)) return false;
        t = std::clamp(t, 0.0, static_cast<double>(a.n - 1));
        lo[i] = std::min(static_cast<int>(std::floor(t)), a.n - 2);
        f[i] = t - lo[i];
    }
    if (grid.dim == 1) {
        cell.count = 2;
        cell.corner[0] = lo[0];
        cell.corner[1] = lo[0] + 1;
        cell.weight[0] = 1.0 - f[0];
        cell.weight[1] = f[0];
        return true;
    }
    const std::size_t n1 = grid.axes[1].n;
    cell.count = 4;
    for (int s0 = 0; s0 < 2; ++s0)
        for (int s1 = 0; s1 < 2; ++s1) {
            const int c = 2 * s0 + s1;
            cell.corner[c] = static_cast<std::size_t>(lo[0] + s0) * n1 + (lo[1] + s1);
            cell.weight[c] = (s0 ? f[0] : 1.0 - f[0]) * (s1 ? f[1] : 1.0 - f[1]);
        }
    return true;
}

double interpolate(const Solution& s, double t, std::span<const double> x) {
    const Grid& grid = s.grid;
    if (static_cast<int>(x.size()) != grid.dim) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
    if (!(t >= 0.0 && t <= grid.T)) throw Error(ErrorCode::OutOfDomain, "time outside [0, T]");
    double z[2];
    for (int i = 0; i < grid.dim; ++i) {
        if (!(x[i] > 0.0)) throw Error(ErrorCode::OutOfDomain, "prices must be positive");
        z[i] = std::log(x[i]);
    }
    Cell cell;
    if (!locate(grid, std::span<const double>(z, grid.dim), cell))
        throw Error(ErrorCode::OutOfDomain, "point outside the grid");
    const double pos = t / grid.dt;
    const int k = std::min(static_cast<int>(std::floor(pos)), grid.n_time - 1);
    const double w = std::clamp(pos - k, 0.0, 1.0);
    const double a = interpolate(cell, s.values.level(k));
    if (w == 0.0) return a;
    const double b = interpolate(cell, s.values.level(k + 1));
    return w == 1.0 ? b : (1.0 - w) * a + w * b;
}

double grid_tolerance(const Grid& grid, const Payoff& payoff) {
    const double dz = grid.max_dz();
    return std::max(grid.dt, dz * dz) * payoff_scale(payoff);
}

}  // namespace amerlevy
