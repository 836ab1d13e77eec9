#include "amerlevy/premium.hpp"

#include "amerlevy/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace amerlevy {

ValidationReport require_integrable(const LevyModel& model, const Payoff& payoff, const SolverConfig& cfg) {
    auto report = validate_integrability(model.jumps(), growth_exponent(payoff), cfg.beta, cfg.epsilon);
    if (!report.all_hold()) {
        std::string failed;
        for (const auto& c : report.conditions)
            if (c.status == ConditionStatus::Fails) failed += (failed.empty() ? "" : ", ") + c.name;
        throw Error(ErrorCode::ModelRejected, "integrability conditions fail: " + failed);
    }
    return report;
}

PremiumReport premium_identity(const LevyModel& model, const Payoff& payoff, std::span<const double> spot, double T,
                               const SolverConfig& cfg, const McConfig& mc, int threads, PremiumArtifacts* artifacts) {
    PremiumReport rep;
    rep.validation = require_integrable(model, payoff, cfg);
    rep.spot.assign(spot.begin(), spot.end());
    rep.T = T;

    SolverOptions opts = cfg.solver;
    opts.threads = threads;
    Grid grid = build_grid(model, payoff, spot, T, cfg.n_space, cfg.n_time, cfg.beta, cfg.grid);
    DiscreteOperator op = assemble(model, grid, cfg.grid.y_max_tail);
    Solution american = solve_american_penalty(model, payoff, grid, op, opts);
    Solution european = solve_european(model, payoff, grid, op, opts);
    rep.american_pide = american.spot_value();
    rep.european_pide = european.spot_value();
    rep.grid_tolerance = grid_tolerance(grid, payoff);

    std::vector<double> tols{opts.exercise_tol};
    for (double t : kSensitivityTolerances)
        if (t != opts.exercise_tol) tols.push_back(t);
    auto estimates = estimate_premium_mc(model, payoff, american, 0.0, spot, mc.n_paths, mc.seed, tols, threads,
                                         &rep.diagnostics);
    rep.premium_mc = estimates.front();
    const double target = rep.american_pide - rep.european_pide;
    rep.identity_gap = std::abs(target - rep.premium_mc.mean);
    rep.tolerance = std::max(0.005 * rep.american_pide, 3.0 * rep.premium_mc.std_error);

    double lo = rep.identity_gap, hi = rep.identity_gap;
    bool all_within = true;
    for (double t : kSensitivityTolerances) {
        const auto it = std::find(tols.begin(), tols.end(), t);
        const auto& est = estimates[static_cast<std::size_t>(it - tols.begin())];
        SensitivityRow row{t, est, std::abs(target - est.mean)};
        lo = std::min(lo, row.identity_gap);
        hi = std::max(hi, row.identity_gap);
        all_within = all_within && row.identity_gap <= rep.tolerance;
        rep.sensitivity.push_back(row);
    }
    rep.sensitivity_spread = hi - lo;
    rep.tolerance_sensitive = !(rep.sensitivity_spread < rep.tolerance) || !all_within;
    rep.pass = rep.identity_gap <= rep.tolerance && !rep.tolerance_sensitive;

    if (artifacts) {
        artifacts->grid = grid;
        artifacts->op = std::move(op);
        artifacts->american = std::move(american);
        artifacts->european = std::move(european);
    }
    return rep;
}

RegionSummary exercise_region_report(const Solution& s, const Payoff& payoff, double t) {
    const Grid& grid = s.grid;
    if (!(t >= 0.0 && t <= grid.T)) throw Error(ErrorCode::OutOfDomain, "time outside [0, T]");
    RegionSummary out;
    out.level = std::clamp(static_cast<int>(std::lround(t / grid.dt)), 0, grid.n_time);
    out.t = grid.t(out.level);
    const std::size_t nodes = s.psi.size();
    out.mask.resize(nodes);
    const bool put = is_put_like(payoff);
    double z[2];
    for (std::size_t j = 0; j < nodes; ++j) {
        out.mask[j] = s.exercised(out.level, j);
        if (!out.mask[j]) continue;
        ++out.exercised_nodes;
        if (!(s.psi[j] > s.exercise_tol)) out.inclusion = false;
        if (grid.dim == 1) {
            grid.coords(j, std::span<double>(z, 1));
            const double x = std::exp(z[0]);
            if (!out.boundary_price || (put ? x > *out.boundary_price : x < *out.boundary_price))
                out.boundary_price = x;
        }
    }
    return out;
}

std::vector<BoundaryPoint> free_boundary(const Solution& s, const Payoff& payoff) {
    if (s.grid.dim != 1) throw Error(ErrorCode::InvalidArgument, "free boundary curves exist for d = 1 only");
    std::vector<BoundaryPoint> out;
    for (int k = 0; k < s.grid.n_time; ++k) {
        auto r = exercise_region_report(s, payoff, s.grid.t(k));
        out.push_back({r.t, r.boundary_price});
    }
    return out;
}

ResidualOptions refinement_residual_options(const LevyModel& model, double coarse_dz, double T) {
    double sigma = std::numeric_limits<double>::infinity();
    for (int i = 0; i < model.dim(); ++i) sigma = std::min(sigma, std::sqrt(model.gaussian().variance(i)));
    const double margin = 3.0 * coarse_dz;
    ResidualOptions o;
    o.cell_margin = 3;
    o.min_margin_z = margin;
    // Payoff kinks spread over sigma sqrt(tau); keep levels where that exceeds the margin.
    o.min_time_to_expiry = std::min(T, std::max(0.1 * T, (margin / sigma) * (margin / sigma)));
    return o;
}

std::vector<ConvergenceRow> convergence_study(const LevyModel& model, const Payoff& payoff,
                                              std::span<const double> spot, double T, const SolverConfig& base,
                                              const McConfig& mc, std::span<const ConvergenceLevel> levels,
                                              int threads) {
    if (levels.size() < 3) throw Error(ErrorCode::InvalidArgument, "a convergence study needs at least 3 levels");
    std::vector<ConvergenceRow> rows;
    double coarse_dz = 0.0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const auto start = std::chrono::steady_clock::now();
        SolverConfig cfg = base;
        cfg.n_space = levels[l].n_space;
        cfg.n_time = levels[l].n_time;
        McConfig m = mc;
        m.n_paths = levels[l].n_paths;
        PremiumArtifacts art;
        auto rep = premium_identity(model, payoff, spot, T, cfg, m, threads, &art);
        if (l == 0) coarse_dz = art.grid.max_dz();
        auto res = complementarity_residual(art.american, art.op, refinement_residual_options(model, coarse_dz, T));
        ConvergenceRow row;
        row.level = static_cast<int>(l);
        row.grid = levels[l];
        row.american = rep.american_pide;
        row.european = rep.european_pide;
        row.premium_gap = rep.identity_gap;
        row.complementarity_maxnorm = res.max_norm;
        row.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rows.push_back(row);
    }
    return rows;
}

}  // namespace amerlevy
