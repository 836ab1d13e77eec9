#ifndef AMERLEVY_PREMIUM_HPP
#define AMERLEVY_PREMIUM_HPP

#include "amerlevy/levy_model.hpp"
#include "amerlevy/monte_carlo.hpp"
#include "amerlevy/payoffs.hpp"
#include "amerlevy/pide_solver.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace amerlevy {

/// Exercise tolerances probed by the sensitivity rows of the premium report.
inline constexpr double kSensitivityTolerances[] = {1e-5, 1e-6, 1e-7};

struct SensitivityRow {
    double exercise_tol = 0.0;
    Estimate premium;
    double identity_gap = 0.0;
};

/**
 * American = European + premium, checked at the spot:
 * identity_gap = |american - european - premium|, tolerance =
 * max(0.5% of american, 3 stderr). The report fails when the gap exceeds the
 * tolerance or when the gap moves by the tolerance or more across the
 * sensitivity tolerances (flagged tolerance_sensitive).
 */
struct PremiumReport {
    std::vector<double> spot;
    double T = 0.0;
    double american_pide = 0.0;
    double european_pide = 0.0;
    Estimate premium_mc;
    double identity_gap = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::vector<SensitivityRow> sensitivity;
    double sensitivity_spread = 0.0;
    bool tolerance_sensitive = false;
    PremiumDiagnostics diagnostics;
    double grid_tolerance = 0.0;
    ValidationReport validation;
};

/// Solver objects kept by premium_identity for diagnostics and export.
struct PremiumArtifacts {
    Grid grid;
    DiscreteOperator op;
    Solution american;
    Solution european;
};

/// Throws ModelRejected unless every integrability condition holds for beta and the payoff growth.
ValidationReport require_integrable(const LevyModel& model, const Payoff& payoff, const SolverConfig& cfg);

PremiumReport premium_identity(const LevyModel& model, const Payoff& payoff, std::span<const double> spot, double T,
                               const SolverConfig& solver_cfg, const McConfig& mc_cfg, int threads = 0,
                               PremiumArtifacts* artifacts = nullptr);

struct RegionSummary {
    int level = 0;
    double t = 0.0;
    std::size_t exercised_nodes = 0;
    /// Exercised nodes all satisfy psi > exercise_tol.
    bool inclusion = true;
    /// Largest (put-like) or smallest (call) exercised price; d = 1 only.
    std::optional<double> boundary_price;
    std::vector<std::uint8_t> mask;
};

/// Exercise-set slice at the time level nearest to t.
RegionSummary exercise_region_report(const Solution& solution, const Payoff& payoff, double t);

struct BoundaryPoint {
    double t = 0.0;
    std::optional<double> price;
};

/// d = 1 free boundary at every level before T.
std::vector<BoundaryPoint> free_boundary(const Solution& solution, const Payoff& payoff);

struct ConvergenceLevel {
    int n_space = 0;
    int n_time = 0;
    long n_paths = 0;
};

struct ConvergenceRow {
    int level = 0;
    ConvergenceLevel grid;
    double american = 0.0;
    double european = 0.0;
    double premium_gap = 0.0;
    double complementarity_maxnorm = 0.0;
    double runtime = 0.0;
};

/**
 * Solves the fixture on successively finer levels. Residual norms share one
 * region, given by refinement_residual_options on the coarsest level.
 */
std::vector<ConvergenceRow> convergence_study(const LevyModel& model, const Payoff& payoff,
                                              std::span<const double> spot, double T, const SolverConfig& base,
                                              const McConfig& mc, std::span<const ConvergenceLevel> levels,
                                              int threads = 0);

/**
 * Residual options for comparing grids against the coarsest axis spacing:
 * margins of three coarse cells, and only levels whose time to expiry
 * exceeds max(T/10, (3 coarse_dz / sigma_min)^2), where payoff kinks have
 * spread beyond the margin.
 */
ResidualOptions refinement_residual_options(const LevyModel& model, double coarse_dz, double T);

}  // namespace amerlevy

#endif  // AMERLEVY_PREMIUM_HPP
