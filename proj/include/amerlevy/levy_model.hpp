#ifndef AMERLEVY_LEVY_MODEL_HPP
#define AMERLEVY_LEVY_MODEL_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace amerlevy {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * Covariance of the continuous part of the log-returns (annualized).
 *
 * The matrix must be exactly symmetric and strictly positive definite.
 */
class GaussianPart {
public:
    explicit GaussianPart(Matrix a);

    int dim() const { return static_cast<int>(a_.rows()); }
    const Matrix& covariance() const { return a_; }
    /// Lower-triangular factor with factor * factor^T == covariance.
    const Matrix& factor() const { return factor_; }
    double variance(int i) const { return a_(i, i); }

private:
    Matrix a_;
    Matrix factor_;
};

/// Gaussian jump sizes in log-price.
struct MertonNormal {
    Vector mean;
    Matrix cov;
};

/// Independent per-component double-exponential jump sizes, common arrival.
struct KouDoubleExponential {
    Vector p_up;
    Vector eta_up;
    Vector eta_down;
};

/// Jump sizes drawn from a finite list of atoms.
struct EmpiricalJumps {
    std::vector<Vector> atoms;
    std::vector<double> probs;
};

using JumpLaw = std::variant<std::monostate, MertonNormal, KouDoubleExponential, EmpiricalJumps>;

/**
 * Finite-activity jump measure: intensity times a probability law on R^d.
 *
 * A default-constructed spec has no jumps.
 */
class JumpSpec {
public:
    JumpSpec() = default;
    JumpSpec(double intensity, JumpLaw law);

    double intensity() const { return intensity_; }
    const JumpLaw& law() const { return law_; }
    bool active() const { return intensity_ > 0.0 && !std::holds_alternative<std::monostate>(law_); }
    /// Dimension of the jump law, 0 when there is none.
    int dim() const;
    std::string kind() const;

    /// Closed-form E[exp(q J_i)]; throws NonIntegrableJump when it diverges.
    double mgf(int i, double q) const;
    /// P(|J_i| > y).
    double marginal_tail(int i, double y) const;
    /// Smallest symmetric radius holding all but `tail` of the i-th marginal.
    double tail_radius(int i, double tail) const;
    /// P(J_i <= y) for the continuous laws; atoms are handled by the caller.
    double marginal_cdf(int i, double y) const;

private:
    double intensity_ = 0.0;
    JumpLaw law_{};
};

struct Rates {
    double r = 0.0;
    Vector delta;

    void validate() const;
};

/**
 * Risk-neutral exponential Lévy market.
 *
 * log_drift() holds the uncompensated drift b of log X, so that
 * X_t = x exp(b t + sigma W_t + sum of jumps) and the dividend-adjusted
 * discounted prices are martingales.
 */
class LevyModel {
public:
    LevyModel(GaussianPart gaussian, JumpSpec jumps, Rates rates);

    int dim() const { return gaussian_.dim(); }
    const GaussianPart& gaussian() const { return gaussian_; }
    const JumpSpec& jumps() const { return jumps_; }
    const Rates& rates() const { return rates_; }
    const Vector& log_drift() const { return drift_; }

    /// b_i - (r - delta_i): the drift of the Lévy process alone.
    double pure_levy_drift(int i) const;
    /// Drift of the Lévy triplet under the 1_{|y|<=1} truncation. Reporting only.
    Vector triplet_drift() const;

private:
    GaussianPart gaussian_;
    JumpSpec jumps_;
    Rates rates_;
    Vector drift_;
};

Vector calibrate_drift(const GaussianPart& gaussian, const JumpSpec& jumps, const Rates& rates);

enum class ConditionStatus { HoldsAnalytically, HoldsByQuadrature, Fails };

std::string to_string(ConditionStatus status);

struct IntegrabilityCondition {
    std::string name;
    std::string statement;
    double exponent = 0.0;
    ConditionStatus status = ConditionStatus::HoldsAnalytically;
    std::string detail;
};

struct ValidationReport {
    double p = 0.0;
    double beta = 0.0;
    double epsilon = 0.0;
    std::vector<IntegrabilityCondition> conditions;

    bool all_hold() const;
};

/**
 * Checks the four tail-moment conditions on the jump measure:
 *  - unit_exp_moment:        int_{|y|>1} e^{y_i} nu(dy) < inf
 *  - payoff_growth_moment:   int_{|y|>1} e^{((1 v p)+eps) y_i} nu(dy) < inf
 *  - weighted_first_moment:  int_{|y|>1} |y| e^{beta|y|} nu(dy) < inf
 *  - weighted_second_moment: int_{|y|>1} |y|^2 e^{2 beta|y|} nu(dy) < inf
 * Failures are reported, never thrown.
 */
ValidationReport validate_integrability(const JumpSpec& jumps, double p, double beta, double epsilon);

/// E[exp(q xi^i_t)] for the pure Lévy part xi (no (r - delta) drift).
double exp_moment(const LevyModel& model, double q, int i, double t);

/// E[exp(q ln(X^i_t / x_i))], including the (r - delta_i) drift.
double log_return_exp_moment(const LevyModel& model, double q, int i, double t);

/// E[exp(q J_i)] by numerical quadrature of the jump law, independent of mgf().
double jump_exp_moment_quadrature(const JumpSpec& jumps, int i, double q);

/// Quadrature value of E[X^i_t / x_i]; equals exp((r - delta_i) t) for a calibrated model.
double martingale_check_quadrature(const LevyModel& model, int i, double t);

/**
 * Exact-in-law path stepping on a fixed step dt.
 *
 * Each path owns an independent random stream derived from (seed, path index),
 * so results do not depend on how paths are distributed over threads.
 */
class PathSimulator {
public:
    struct Stream {
        std::mt19937_64 engine;
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> uniform;
        std::poisson_distribution<int> poisson;
        std::discrete_distribution<int> atom;
    };

    PathSimulator(const LevyModel& model, double dt);

    Stream stream(std::uint64_t seed, std::uint64_t path) const;
    /// Adds one step's log-increment to log_x.
    void advance(Stream& s, std::span<double> log_x) const;
    /// Draws a single jump into out.
    void sample_jump(Stream& s, std::span<double> out) const;

    int dim() const { return dim_; }
    double dt() const { return dt_; }

private:
    const LevyModel* model_;
    int dim_;
    double dt_;
    double sqrt_dt_;
    Vector drift_step_;
    Matrix diffusion_factor_;
    Matrix jump_factor_;
    double jump_rate_step_;
};

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t path);

struct PathSet {
    std::vector<double> times;
    int n_paths = 0;
    int n_steps = 0;
    int dim = 0;
    std::uint64_t seed = 0;
    std::vector<double> prices;  // [path][step][component]

    double at(int path, int step, int i) const {
        return prices[(static_cast<std::size_t>(path) * (n_steps + 1) + step) * dim + i];
    }
};

PathSet simulate_paths(const LevyModel& model, double s, std::span<const double> x, double T, int n_steps,
                       int n_paths, std::uint64_t seed, int threads = 0);

}  // namespace amerlevy

#endif  // AMERLEVY_LEVY_MODEL_HPP
