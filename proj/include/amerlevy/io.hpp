#ifndef AMERLEVY_IO_HPP
#define AMERLEVY_IO_HPP

#include "amerlevy/levy_model.hpp"
#include "amerlevy/monte_carlo.hpp"
#include "amerlevy/payoffs.hpp"
#include "amerlevy/pide_solver.hpp"
#include "amerlevy/premium.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace amerlevy {

using Json = nlohmann::json;

/// Parses a JSON file; throws ParseError on I/O or syntax problems.
Json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const Json& value);

/**
 * Model spec:
 *   { "dim": d, "a": [[...]], "rates": {"r": r, "delta": [...]},
 *     "jumps": {"kind": "merton", "intensity": l, "mean": [...], "cov": [[...]]} }
 * Kou jumps carry "p_up", "eta_up", "eta_down"; empirical jumps "atoms" and
 * "probs"; {"kind": "none"} disables jumps. The calibrated drift is written
 * back as "log_drift" and ignored on input.
 */
LevyModel model_from_json(const Json& j);
Json to_json(const LevyModel& model);

/// { "kind": "min_put", "dim": 2, "K": 100 }, with "w" for index/spread kinds, "gamma" for power_product.
Payoff payoff_from_json(const Json& j);
Json to_json(const Payoff& payoff);

/// { "n_space", "n_time", "beta", "penalty_ladder", "trunc_tol", "y_max_tail", "exercise_tol", "epsilon" }.
SolverConfig solver_config_from_json(const Json& j);
Json to_json(const SolverConfig& cfg);

/// { "n_paths", "n_steps", "seed", "basis_degree" }.
McConfig mc_config_from_json(const Json& j);
Json to_json(const McConfig& cfg);

/// { "mean", "stderr", "n_paths", "seed" }.
Estimate estimate_from_json(const Json& j);
Json to_json(const Estimate& e);

Json to_json(const ValidationReport& report);
Json to_json(const PremiumReport& report);
PremiumReport premium_report_from_json(const Json& j);

/// Rows (t, z..., price..., u, psi, exercised, jump_field); every `stride`-th level and node.
void write_solution_csv(const std::filesystem::path& path, const Solution& solution, int time_stride = 1,
                        int space_stride = 1);
/// Rows (t, boundary_price); empty price when nothing is exercised.
void write_boundary_csv(const std::filesystem::path& path, std::span<const BoundaryPoint> boundary);
/// Rows (level, american, european, premium_gap, complementarity_maxnorm, runtime).
void write_convergence_csv(const std::filesystem::path& path, std::span<const ConvergenceRow> rows);

}  // namespace amerlevy

#endif  // AMERLEVY_IO_HPP
