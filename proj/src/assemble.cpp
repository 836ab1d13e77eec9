#include "amerlevy/error.hpp"
#include "amerlevy/pide_solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>

namespace amerlevy {

namespace {

constexpr double kPruneMass = 1e-14;

void add_entry(std::vector<StencilEntry>& stencil, int o0, int o1, double w) {
    if (w == 0.0) return;
    for (auto& e : stencil)
        if (e.offset[0] == o0 && e.offset[1] == o1) {
            e.weight += w;
            return;
        }
    StencilEntry e;
    e.offset[0] = o0;
    e.offset[1] = o1;
    e.weight = w;
    stencil.push_back(e);
}

void build_local(const LevyModel& model, const Grid& grid, DiscreteOperator& op) {
    const auto& a = model.gaussian().covariance();
    const auto& b = model.log_drift();
    const int d = grid.dim;
    op.upwind.assign(d, false);
    const double mixed = d == 2 ? std::abs(a(0, 1)) / (2.0 * grid.axes[0].dz * grid.axes[1].dz) : 0.0;

    double center = 0.0;
    for (int i = 0; i < d; ++i) {
        const double h = grid.axes[i].dz;
        const double base = a(i, i) / (2.0 * h * h) - mixed;
        if (base < 0.0)
            throw Error(ErrorCode::InvalidArgument,
                        "grid aspect breaks the monotone mixed stencil: need a_ii dz_j >= |a_ij| dz_i");
        double down = base - b(i) / (2.0 * h);
        double up = base + b(i) / (2.0 * h);
        if (down < 0.0 || up < 0.0) {
            op.upwind[i] = true;
            down = base + std::max(-b(i), 0.0) / h;
            up = base + std::max(b(i), 0.0) / h;
        }
        int lo[2] = {0, 0}, hi[2] = {0, 0};
        lo[i] = -1;
        hi[i] = 1;
        add_entry(op.local, lo[0], lo[1], down);
        add_entry(op.local, hi[0], hi[1], up);
        center -= down + up;
    }
    if (d == 2 && mixed > 0.0) {
        const int s = a(0, 1) > 0.0 ? 1 : -1;
        add_entry(op.local, 1, s, mixed);
        add_entry(op.local, -1, -s, mixed);
        center -= 2.0 * mixed;
    }
    add_entry(op.local, 0, 0, center);
}

// Probability masses of the cells [(c - 1/2) h, (c + 1/2) h], c = -R..R, of a continuous marginal.
std::vector<double> marginal_cells(const JumpSpec& jumps, int axis, double h, int R) {
    std::vector<double> m(2 * R + 1);
    double prev = jumps.marginal_cdf(axis, (-R - 0.5) * h);
    for (int c = -R; c <= R; ++c) {
        const double next = jumps.marginal_cdf(axis, (c + 0.5) * h);
        m[c + R] = std::max(next - prev, 0.0);
        prev = next;
    }
    return m;
}

void prune_and_normalize(std::vector<double>& m) {
    double total = 0.0;
    for (double& v : m) {
        if (v < kPruneMass) v = 0.0;
        total += v;
    }
    if (!(total > 0.0)) throw Error(ErrorCode::QuadratureTailTooHeavy, "jump kernel has no mass on the grid");
    for (double& v : m) v /= total;
}

int reach_of(double y_max, double h) { return std::max(0, static_cast<int>(std::ceil(y_max / h - 0.5))); }

void build_separable(const JumpSpec& jumps, const Grid& grid, DiscreteOperator& op) {
    const int d = grid.dim;
    op.separable.resize(d);
    for (int i = 0; i < d; ++i) {
        const double h = grid.axes[i].dz;
        const int R = reach_of(op.y_max[i], h);
        auto m = marginal_cells(jumps, i, h, R);
        op.tail_mass += jumps.marginal_tail(i, (R + 0.5) * h);
        prune_and_normalize(m);
        op.separable[i] = std::move(m);
    }
    const double lambda = op.intensity;
    const auto& m0 = op.separable[0];
    const int R0 = static_cast<int>(m0.size() / 2);
    if (d == 1) {
        for (int c = -R0; c <= R0; ++c)
            if (m0[c + R0] > 0.0) op.jumps.push_back({{c, 0}, lambda * m0[c + R0]});
        return;
    }
    const auto& m1 = op.separable[1];
    const int R1 = static_cast<int>(m1.size() / 2);
    for (int c0 = -R0; c0 <= R0; ++c0)
        for (int c1 = -R1; c1 <= R1; ++c1) {
            const double w = m0[c0 + R0] * m1[c1 + R1];
            if (w > 0.0) op.jumps.push_back({{c0, c1}, lambda * w});
        }
}

// Correlated Gaussian jumps in d = 2: sub-cell midpoint quadrature of the density.
void build_gaussian_2d(const MertonNormal& law, const JumpSpec& jumps, const Grid& grid, DiscreteOperator& op) {
    constexpr int sub = 4;
    const double h0 = grid.axes[0].dz, h1 = grid.axes[1].dz;
    const int R0 = reach_of(op.y_max[0], h0), R1 = reach_of(op.y_max[1], h1);
    op.tail_mass = jumps.marginal_tail(0, (R0 + 0.5) * h0) + jumps.marginal_tail(1, (R1 + 0.5) * h1);
    const Eigen::Matrix2d S = law.cov.topLeftCorner<2, 2>();
    const Eigen::Matrix2d P = S.inverse();
    const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(S.determinant()));
    const double cell = h0 * h1 / (sub * sub);
    std::vector<StencilEntry> out;
    double total = 0.0;
    for (int c0 = -R0; c0 <= R0; ++c0)
        for (int c1 = -R1; c1 <= R1; ++c1) {
            double mass = 0.0;
            for (int s0 = 0; s0 < sub; ++s0)
                for (int s1 = 0; s1 < sub; ++s1) {
                    const double y0 = (c0 - 0.5 + (s0 + 0.5) / sub) * h0 - law.mean(0);
                    const double y1 = (c1 - 0.5 + (s1 + 0.5) / sub) * h1 - law.mean(1);
                    const double q = P(0, 0) * y0 * y0 + 2.0 * P(0, 1) * y0 * y1 + P(1, 1) * y1 * y1;
                    mass += std::exp(-0.5 * q);
                }
            mass *= norm * cell;
            if (mass < kPruneMass) continue;
            out.push_back({{c0, c1}, mass});
            total += mass;
        }
    if (!(total > 0.0)) throw Error(ErrorCode::QuadratureTailTooHeavy, "jump kernel has no mass on the grid");
    for (auto& e : out) e.weight *= op.intensity / total;
    op.jumps = std::move(out);
}

// Atoms split linearly (bilinearly in d = 2) onto the neighbouring nodes; keeps the mean jump exact.
void build_empirical(const EmpiricalJumps& law, const Grid& grid, DiscreteOperator& op) {
    const int d = grid.dim;
    std::map<std::pair<int, int>, double> acc;
    for (std::size_t k = 0; k < law.atoms.size(); ++k) {
        int lo[2] = {0, 0};
        double frac[2] = {0.0, 0.0};
        for (int i = 0; i < d; ++i) {
            const double t = law.atoms[k](i) / grid.axes[i].dz;
            lo[i] = static_cast<int>(std::floor(t));
            frac[i] = t - lo[i];
        }
        const double p = law.probs[k];
        if (d == 1) {
            acc[{lo[0], 0}] += p * (1.0 - frac[0]);
            acc[{lo[0] + 1, 0}] += p * frac[0];
        } else {
            for (int s0 = 0; s0 < 2; ++s0)
                for (int s1 = 0; s1 < 2; ++s1) {
                    const double w = (s0 ? frac[0] : 1.0 - frac[0]) * (s1 ? frac[1] : 1.0 - frac[1]);
                    acc[{lo[0] + s0, lo[1] + s1}] += p * w;
                }
        }
    }
    double total = 0.0;
    for (const auto& [off, w] : acc) total += w;
    for (const auto& [off, w] : acc)
        if (w > 0.0) op.jumps.push_back({{off.first, off.second}, op.intensity * w / total});
}

}  // namespace

DiscreteOperator assemble(const LevyModel& model, const Grid& grid, double y_max_tail) {
    if (model.dim() != grid.dim) throw Error(ErrorCode::InvalidArgument, "grid and model dimensions differ");
    if (!(y_max_tail > 0.0 && y_max_tail < 1.0))
        throw Error(ErrorCode::InvalidArgument, "y_max tail mass must lie in (0, 1)");
    DiscreteOperator op;
    op.dim = grid.dim;
    op.dt = grid.dt;
    op.rate = model.rates().r;
    for (const auto& ax : grid.axes) op.dz.push_back(ax.dz);

    build_local(model, grid, op);

    const auto& jumps = model.jumps();
    op.compensation.assign(grid.dim, 0.0);
    op.y_max.assign(grid.dim, 0.0);
    op.jump_reach.assign(grid.dim, 0);
    if (jumps.active()) {
        op.intensity = jumps.intensity();
        if (grid.dt * op.intensity > 1.0)
            throw Error(ErrorCode::InvalidArgument,
                        "explicit jump step needs dt * lambda <= 1, got " + std::to_string(grid.dt * op.intensity));
        for (int i = 0; i < grid.dim; ++i) {
            op.compensation[i] = op.intensity * (jumps.mgf(i, 1.0) - 1.0);
            op.y_max[i] = jumps.tail_radius(i, y_max_tail / grid.dim);
            const double half_width = 0.5 * (grid.axes[i].z_max - grid.axes[i].z_min);
            if (op.y_max[i] > half_width)
                throw Error(ErrorCode::QuadratureTailTooHeavy,
                            "jump radius " + std::to_string(op.y_max[i]) + " exceeds the grid half-width");
        }
        const auto& law = jumps.law();
        if (const auto* emp = std::get_if<EmpiricalJumps>(&law)) {
            build_empirical(*emp, grid, op);
        } else if (const auto* mer = std::get_if<MertonNormal>(&law); mer && grid.dim == 2 && mer->cov(0, 1) != 0.0) {
            build_gaussian_2d(*mer, jumps, grid, op);
        } else {
            build_separable(jumps, grid, op);
        }
        if (op.tail_mass > y_max_tail * (1.0 + 1e-6) + 1e-15)
            throw Error(ErrorCode::QuadratureTailTooHeavy,
                        "jump mass beyond the kernel " + std::to_string(op.tail_mass) + " exceeds the requested tail");
        for (const auto& e : op.jumps)
            for (int i = 0; i < grid.dim; ++i) op.jump_reach[i] = std::max(op.jump_reach[i], std::abs(e.offset[i]));
    }
    op.halo.resize(grid.dim);
    for (int i = 0; i < grid.dim; ++i) {
        op.halo[i] = std::max(1, op.jump_reach[i]);
        if (!op.separable.empty()) op.halo[i] = std::max(op.halo[i], static_cast<int>(op.separable[i].size() / 2));
    }
    return op;
}

}  // namespace amerlevy
