#ifndef AMERLEVY_PAYOFFS_HPP
#define AMERLEVY_PAYOFFS_HPP

#include "amerlevy/levy_model.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace amerlevy {

enum class PayoffKind {
    MinPut,
    IndexPut,
    SpreadPut,
    IndexCall,
    SpreadCall,
    MaxCall,
    MultiStrike,
    PowerProduct,
    /// psi == c; a test fixture with known prices, not a traded contract.
    Constant,
};

std::string to_string(PayoffKind kind);
PayoffKind payoff_kind_from_string(std::string_view name);

/**
 * Catalog payoff. Which parameters are meaningful depends on the kind:
 *  - strike:  K for every kind except MultiStrike; the level c for Constant
 *  - strikes: per-asset strikes of MultiStrike
 *  - weights: index/spread weights
 *  - gamma:   exponent of PowerProduct (> 1)
 */
struct Payoff {
    PayoffKind kind = PayoffKind::MinPut;
    int dim = 1;
    double strike = 0.0;
    std::vector<double> strikes;
    std::vector<double> weights;
    double gamma = 0.0;

    static Payoff min_put(int dim, double K);
    static Payoff index_put(std::vector<double> w, double K);
    static Payoff spread_put(std::vector<double> w, double K);
    static Payoff index_call(std::vector<double> w, double K);
    static Payoff spread_call(std::vector<double> w, double K);
    static Payoff max_call(int dim, double K);
    static Payoff multi_strike(std::vector<double> K);
    static Payoff power_product(int dim, double K, double gamma);
    static Payoff constant(int dim, double c);

    void validate() const;
};

double evaluate(const Payoff& payoff, std::span<const double> x);

/// psi(e^{z_1}, ..., e^{z_d}).
double log_transform(const Payoff& payoff, std::span<const double> z);

double growth_exponent(const Payoff& payoff);

/// True when the payoff decreases in the prices (exercise region lies below the boundary).
bool is_put_like(const Payoff& payoff);

/// Monetary scale used to express grid tolerances.
double payoff_scale(const Payoff& payoff);

/**
 * Integer label of the smooth branch of psi containing x. Two points with the
 * same label lie on the same affine (or power) piece. Ties of the min/max
 * selectors get the label -1.
 */
int smooth_piece(const Payoff& payoff, std::span<const double> x);

/**
 * Closed form of Psi = -r psi + L_BS psi on {psi > 0}, zero elsewhere.
 * Requires x in the positive orthant; throws TieBreak when the active
 * min/max index is ambiguous.
 */
double psi_closed_form(const Payoff& payoff, std::span<const double> x, const Rates& rates,
                       const GaussianPart& gaussian);

/// Negative part of psi_closed_form.
double psi_minus(const Payoff& payoff, std::span<const double> x, const Rates& rates, const GaussianPart& gaussian);

/**
 * Power-product variant that drops the 1/2 in front of the covariance terms,
 * (r - g sum(r - delta_i - a_ii) - g^2 sum a_ij) f - rK. Kept to document the
 * disagreement with the finite-difference generator; not used for pricing.
 */
double power_product_psi_minus_unhalved(const Payoff& payoff, std::span<const double> x, const Rates& rates,
                                        const GaussianPart& gaussian);

struct FdCheck {
    double closed_form;    ///< psi_minus
    double fd_value;       ///< negative part of the finite-difference Psi
    double closed_signed;  ///< psi_closed_form
    double fd_signed;      ///< finite-difference Psi
};

/// Compares psi_minus with -r psi + L_BS psi evaluated by central differences of step h.
/// Throws KinkTooClose when psi is not smooth on the stencil.
FdCheck psi_minus_fd_check(const Payoff& payoff, std::span<const double> x, const Rates& rates,
                           const GaussianPart& gaussian, double h);

}  // namespace amerlevy

#endif  // AMERLEVY_PAYOFFS_HPP
