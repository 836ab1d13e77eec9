#ifndef AMERLEVY_MONTE_CARLO_HPP
#define AMERLEVY_MONTE_CARLO_HPP

#include "amerlevy/levy_model.hpp"
#include "amerlevy/payoffs.hpp"
#include "amerlevy/pide_solver.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace amerlevy {

/// Sample mean with standard error sample_std / sqrt(n_paths).
struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    long n_paths = 0;
    std::uint64_t seed = 0;
};

/// Summarizes per-path values; the result depends only on their order.
Estimate summarize(std::span<const double> values, std::uint64_t seed);

/// Total-degree polynomial in normalized log-prices, optionally with psi appended.
struct RegressionBasis {
    int degree = 3;
    bool include_payoff = true;
};

struct McConfig {
    long n_paths = 100000;
    int n_steps = 50;
    std::uint64_t seed = 20240601;
    int basis_degree = 3;
};

/// e^{-r(T-s)} psi(X_T) with one exact step from s to T.
Estimate price_european_mc(const LevyModel& model, const Payoff& payoff, double s, std::span<const double> x, double T,
                           long n_paths, std::uint64_t seed, int threads = 0);

/**
 * Longstaff-Schwartz with split path sets: regression on paths [0, n), pricing
 * on paths [n, 2n). The pricing-set value is reported, then compared with
 * immediate exercise at s. Basis shrinkage is logged to std::clog.
 */
Estimate price_american_ls(const LevyModel& model, const Payoff& payoff, double s, std::span<const double> x,
                           double T, int n_steps, long n_paths, const RegressionBasis& basis, std::uint64_t seed,
                           int threads = 0);

struct PremiumDiagnostics {
    double exit_fraction = 0.0;
    /// Smallest sampled Psi^- - L_I u on the exercise set (+inf when never sampled).
    double min_integrand = 0.0;
    long exercised_samples = 0;
};

/**
 * Pathwise early-exercise premium
 *   sum_k e^{-r(t_k - s)} 1[exercised] 1[Psi^- > 0] (Psi^- - L_I u) dt
 * on the solution's time grid, one estimate per exercise tolerance. The mask is
 * recomputed from the stored values for every tolerance and its bilinear
 * interpolant is thresholded at 1/2. Paths leaving the grid contribute
 * nothing afterwards; throws GridCoverageTooSmall when 1e-3 or more exit.
 */
std::vector<Estimate> estimate_premium_mc(const LevyModel& model, const Payoff& payoff, const Solution& solution,
                                          double s, std::span<const double> x, long n_paths, std::uint64_t seed,
                                          std::span<const double> tolerances, int threads = 0,
                                          PremiumDiagnostics* diagnostics = nullptr);

/// Single-tolerance form using the solution's own exercise tolerance; n_steps must match the grid.
Estimate estimate_premium_mc(const LevyModel& model, const Payoff& payoff, const Solution& solution, double s,
                             std::span<const double> x, double T, long n_paths, int n_steps, std::uint64_t seed,
                             int threads = 0, PremiumDiagnostics* diagnostics = nullptr);

/// Per-component estimates of E[X^i_t / x_i] from one exact step; compare with exp((r - delta_i) t).
std::vector<Estimate> martingale_check_mc(const LevyModel& model, double t, long n_paths, std::uint64_t seed,
                                          int threads = 0);

inline constexpr double kMaxExitFraction = 1e-3;

}  // namespace amerlevy

#endif  // AMERLEVY_MONTE_CARLO_HPP
