#include "amerlevy/levy_model.hpp"

#include "amerlevy/error.hpp"
#include "amerlevy/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace amerlevy {

namespace {

constexpr int kMaxDim = 16;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void require(bool ok, const std::string& msg) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, msg);
}

bool is_finite(const Matrix& m) { return m.allFinite(); }

Matrix symmetric_sqrt(const Matrix& s) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
    Vector ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

// ---------------------------------------------------------------------------
// GaussianPart

GaussianPart::GaussianPart(Matrix a) : a_(std::move(a)) {
    require(a_.rows() > 0 && a_.rows() == a_.cols(), "Gaussian covariance must be a non-empty square matrix");
    require(a_.rows() <= kMaxDim, "dimension above 16 is not supported");
    require(is_finite(a_), "Gaussian covariance must be finite");
    for (Eigen::Index i = 0; i < a_.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            require(a_(i, j) == a_(j, i), "Gaussian covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a_, Eigen::EigenvaluesOnly);
    require(eig.eigenvalues().minCoeff() > 0.0, "Gaussian covariance must be positive definite (det a > 0)");
    Eigen::LLT<Matrix> llt(a_);
    require(llt.info() == Eigen::Success, "Cholesky factorization of the Gaussian covariance failed");
    factor_ = llt.matrixL();
}

// ---------------------------------------------------------------------------
// JumpSpec

JumpSpec::JumpSpec(double intensity, JumpLaw law) : intensity_(intensity), law_(std::move(law)) {
    require(std::isfinite(intensity_) && intensity_ >= 0.0, "jump intensity must be finite and >= 0");
    std::visit(
        [](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MertonNormal>) {
                require(l.mean.size() > 0 && l.cov.rows() == l.mean.size() && l.cov.cols() == l.mean.size(),
                        "Merton jump mean/covariance dimensions disagree");
                require(l.mean.allFinite() && is_finite(l.cov), "Merton jump parameters must be finite");
                for (Eigen::Index i = 0; i < l.cov.rows(); ++i)
                    for (Eigen::Index j = 0; j < i; ++j)
                        require(l.cov(i, j) == l.cov(j, i), "Merton jump covariance must be symmetric");
                Eigen::SelfAdjointEigenSolver<Matrix> eig(l.cov, Eigen::EigenvaluesOnly);
                double scale = std::max(1.0, l.cov.cwiseAbs().maxCoeff());
                require(eig.eigenvalues().minCoeff() >= -1e-12 * scale,
                        "Merton jump covariance must be positive semidefinite");
            } else if constexpr (std::is_same_v<T, KouDoubleExponential>) {
                auto d = l.p_up.size();
                require(d > 0 && l.eta_up.size() == d && l.eta_down.size() == d, "Kou parameter dimensions disagree");
                for (Eigen::Index i = 0; i < d; ++i) {
                    require(l.p_up(i) >= 0.0 && l.p_up(i) <= 1.0, "Kou p_up must lie in [0, 1]");
                    require(l.eta_up(i) > 0.0 && l.eta_down(i) > 0.0, "Kou rates must be positive");
                }
            } else if constexpr (std::is_same_v<T, EmpiricalJumps>) {
                require(!l.atoms.empty() && l.atoms.size() == l.probs.size(),
                        "empirical jumps need one probability per atom");
                auto d = l.atoms.front().size();
                require(d > 0, "empirical atoms must be non-empty vectors");
                double total = 0.0;
                for (std::size_t k = 0; k < l.atoms.size(); ++k) {
                    require(l.atoms[k].size() == d, "empirical atoms must share one dimension");
                    require(l.atoms[k].allFinite(), "empirical atoms must be finite");
                    require(l.probs[k] >= 0.0, "empirical probabilities must be >= 0");
                    total += l.probs[k];
                }
                require(std::abs(total - 1.0) <= 1e-12, "empirical probabilities must sum to 1");
            }
        },
        law_);
}

int JumpSpec::dim() const {
    return std::visit(
        [](const auto& l) -> int {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MertonNormal>) return static_cast<int>(l.mean.size());
            else if constexpr (std::is_same_v<T, KouDoubleExponential>) return static_cast<int>(l.p_up.size());
            else if constexpr (std::is_same_v<T, EmpiricalJumps>) return static_cast<int>(l.atoms.front().size());
            else return 0;
        },
        law_);
}

std::string JumpSpec::kind() const {
    return std::visit(
        [](const auto& l) -> std::string {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MertonNormal>) return "merton";
            else if constexpr (std::is_same_v<T, KouDoubleExponential>) return "kou";
            else if constexpr (std::is_same_v<T, EmpiricalJumps>) return "empirical";
            else return "none";
        },
        law_);
}

double JumpSpec::mgf(int i, double q) const {
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MertonNormal>) {
                return std::exp(q * l.mean(i) + 0.5 * q * q * l.cov(i, i));
            } else if constexpr (std::is_same_v<T, KouDoubleExponential>) {
                double p = l.p_up(i), up = l.eta_up(i), down = l.eta_down(i);
                double value = 0.0;
                if (p > 0.0) {
                    if (q >= up)
                        throw Error(ErrorCode::NonIntegrableJump, "Kou upward tail: need eta_up > " + std::to_string(q));
                    value += p * up / (up - q);
                }
                if (p < 1.0) {
                    if (-q >= down)
                        throw Error(ErrorCode::NonIntegrableJump,
                                    "Kou downward tail: need eta_down > " + std::to_string(-q));
                    value += (1.0 - p) * down / (down + q);
                }
                return value;
            } else if constexpr (std::is_same_v<T, EmpiricalJumps>) {
                double value = 0.0;
                for (std::size_t k = 0; k < l.atoms.size(); ++k) value += l.probs[k] * std::exp(q * l.atoms[k](i));
                return value;
            } else {
                return 1.0;
            }
        },
        law_);
}

double JumpSpec::marginal_tail(int i, double y) const {
    y = std::abs(y);
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MertonNormal>) {
                double m = l.mean(i), s = std::sqrt(l.cov(i, i));
                if (s == 0.0) return std::abs(m) > y ? 1.0 : 0.0;
                return 0.5 * std::erfc((y - m) / (s * std::sqrt(2.0))) + 0.5 * std::erfc((y + m) / (s * std::sqrt(2.0)));
            } else if constexpr (std::is_same_v<T, KouDoubleExponential>) {
                return l.p_up(i) * std::exp(-l.eta_up(i) * y) + (1.0 - l.p_up(i)) * std::exp(-l.eta_down(i) * y);
            } else if constexpr (std::is_same_v<T, EmpiricalJumps>) {
                double mass = 0.0;
                for (std::size_t k = 0; k < l.atoms.size(); ++k)
                    if (std::abs(l.atoms[k](i)) > y) mass += l.probs[k];
                return mass;
            } else {
                return 0.0;
            }
        },
        law_);
}

double JumpSpec::tail_radius(int i, double tail) const {
    if (!active()) return 0.0;
    if (const auto* e = std::get_if<EmpiricalJumps>(&law_)) {
        double r = 0.0;
        for (const auto& a : e->atoms) r = std::max(r, std::abs(a(i)));
        return r;
    }
    double hi = 1.0;
    while (marginal_tail(i, hi) > tail) {
        hi *= 2.0;
        if (hi > 1e6) throw Error(ErrorCode::QuadratureTailTooHeavy, "jump tail radius diverges");
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (marginal_tail(i, mid) > tail ? lo : hi) = mid;
    }
    return hi;
}

double JumpSpec::marginal_cdf(int i, double y) const {
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MertonNormal>) {
                double m = l.mean(i), s = std::sqrt(l.cov(i, i));
                if (s == 0.0) return y >= m ? 1.0 : 0.0;
                return normal_cdf((y - m) / s);
            } else if constexpr (std::is_same_v<T, KouDoubleExponential>) {
                double p = l.p_up(i);
                if (y < 0.0) return (1.0 - p) * std::exp(l.eta_down(i) * y);
                return 1.0 - p * std::exp(-l.eta_up(i) * y);
            } else if constexpr (std::is_same_v<T, EmpiricalJumps>) {
                double mass = 0.0;
                for (std::size_t k = 0; k < l.atoms.size(); ++k)
                    if (l.atoms[k](i) <= y) mass += l.probs[k];
                return mass;
            } else {
                return y >= 0.0 ? 1.0 : 0.0;
            }
        },
        law_);
}

// ---------------------------------------------------------------------------
// Rates and model

void Rates::validate() const {
    require(std::isfinite(r) && r >= 0.0, "interest rate must be >= 0");
    require(delta.size() > 0, "dividend vector must be non-empty");
    for (Eigen::Index i = 0; i < delta.size(); ++i)
        require(std::isfinite(delta(i)) && delta(i) >= 0.0, "dividend yields must be >= 0");
}

Vector calibrate_drift(const GaussianPart& gaussian, const JumpSpec& jumps, const Rates& rates) {
    rates.validate();
    const int d = gaussian.dim();
    require(rates.delta.size() == d, "dividend vector dimension differs from the model dimension");
    require(jumps.dim() == 0 || jumps.dim() == d, "jump law dimension differs from the model dimension");
    Vector b(d);
    for (int i = 0; i < d; ++i) {
        double compensator = jumps.active() ? jumps.intensity() * (jumps.mgf(i, 1.0) - 1.0) : 0.0;
        b(i) = rates.r - rates.delta(i) - 0.5 * gaussian.variance(i) - compensator;
    }
    return b;
}

LevyModel::LevyModel(GaussianPart gaussian, JumpSpec jumps, Rates rates)
    : gaussian_(std::move(gaussian)), jumps_(std::move(jumps)), rates_(std::move(rates)) {
    drift_ = calibrate_drift(gaussian_, jumps_, rates_);
}

double LevyModel::pure_levy_drift(int i) const { return drift_(i) - (rates_.r - rates_.delta(i)); }

Vector LevyModel::triplet_drift() const {
    const int d = dim();
    Vector gamma(d);
    for (int i = 0; i < d; ++i) gamma(i) = pure_levy_drift(i);
    if (!jumps_.active()) return gamma;
    const double lambda = jumps_.intensity();

    // E[J_i 1_{|J| <= 1}]
    Vector truncated_mean = Vector::Zero(d);
    if (const auto* e = std::get_if<EmpiricalJumps>(&jumps_.law())) {
        for (std::size_t k = 0; k < e->atoms.size(); ++k)
            if (e->atoms[k].norm() <= 1.0) truncated_mean += e->probs[k] * e->atoms[k];
    } else if (d == 1) {
        if (const auto* m = std::get_if<MertonNormal>(&jumps_.law())) {
            double mu = m->mean(0), s = std::sqrt(m->cov(0, 0));
            if (s == 0.0) {
                truncated_mean(0) = std::abs(mu) <= 1.0 ? mu : 0.0;
            } else {
                double lo = (-1.0 - mu) / s, hi = (1.0 - mu) / s;
                auto pdf = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
                truncated_mean(0) = mu * (normal_cdf(hi) - normal_cdf(lo)) - s * (pdf(hi) - pdf(lo));
            }
        } else if (const auto* k = std::get_if<KouDoubleExponential>(&jumps_.law())) {
            auto part = [](double eta) { return (1.0 - std::exp(-eta) * (1.0 + eta)) / eta; };
            truncated_mean(0) = k->p_up(0) * part(k->eta_up(0)) - (1.0 - k->p_up(0)) * part(k->eta_down(0));
        }
    } else {
        // Multivariate continuous laws: fixed-seed sample average (reporting only).
        PathSimulator sim(*this, 1.0);
        auto stream = sim.stream(0x5eedULL, 0);
        constexpr int kSamples = 1 << 20;
        std::vector<double> y(d);
        for (int s = 0; s < kSamples; ++s) {
            sim.sample_jump(stream, y);
            double norm2 = 0.0;
            for (double v : y) norm2 += v * v;
            if (norm2 <= 1.0)
                for (int i = 0; i < d; ++i) truncated_mean(i) += y[i];
        }
        truncated_mean /= kSamples;
    }
    return gamma + lambda * truncated_mean;
}

// ---------------------------------------------------------------------------
// Integrability

std::string to_string(ConditionStatus status) {
    switch (status) {
        case ConditionStatus::HoldsAnalytically: return "holds analytically";
        case ConditionStatus::HoldsByQuadrature: return "holds by quadrature";
        case ConditionStatus::Fails: return "fails";
    }
    return "unknown";
}

bool ValidationReport::all_hold() const {
    return std::none_of(conditions.begin(), conditions.end(),
                        [](const auto& c) { return c.status == ConditionStatus::Fails; });
}

namespace {

// Kind of tail integrand: only the upper tail of e^{q y_i}, or both tails of e^{q|y|}.
enum class Tails { Upper, Both };

IntegrabilityCondition check_condition(const JumpSpec& jumps, std::string name, std::string statement,
                                       double exponent, Tails tails, int power) {
    IntegrabilityCondition c{std::move(name), std::move(statement), exponent, ConditionStatus::HoldsAnalytically, ""};
    if (!jumps.active()) {
        c.detail = "no jumps";
        return c;
    }
    const double lambda = jumps.intensity();
    std::visit(
        [&](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MertonNormal>) {
                c.detail = "Gaussian jump law has every exponential moment";
            } else if constexpr (std::is_same_v<T, KouDoubleExponential>) {
                std::ostringstream os;
                bool ok = true;
                for (Eigen::Index i = 0; i < l.p_up.size(); ++i) {
                    if (l.p_up(i) > 0.0 && !(l.eta_up(i) > exponent)) {
                        ok = false;
                        os << "component " << i << ": eta_up=" << l.eta_up(i) << " <= " << exponent << "; ";
                    }
                    if (tails == Tails::Both && l.p_up(i) < 1.0 && !(l.eta_down(i) > exponent)) {
                        ok = false;
                        os << "component " << i << ": eta_down=" << l.eta_down(i) << " <= " << exponent << "; ";
                    }
                }
                c.status = ok ? ConditionStatus::HoldsAnalytically : ConditionStatus::Fails;
                c.detail = ok ? "double-exponential rates exceed the required exponent" : os.str();
            } else if constexpr (std::is_same_v<T, EmpiricalJumps>) {
                // Finite support: the integral is a finite sum.
                double worst = 0.0;
                const auto d = l.atoms.front().size();
                for (Eigen::Index i = 0; i < (tails == Tails::Upper ? d : 1); ++i) {
                    double sum = 0.0;
                    for (std::size_t k = 0; k < l.atoms.size(); ++k) {
                        double n = l.atoms[k].norm();
                        if (n <= 1.0) continue;
                        double w = tails == Tails::Upper ? std::exp(exponent * l.atoms[k](i))
                                                         : std::pow(n, power) * std::exp(exponent * n);
                        sum += lambda * l.probs[k] * w;
                    }
                    worst = std::max(worst, sum);
                }
                c.status = ConditionStatus::HoldsByQuadrature;
                std::ostringstream os;
                os << "finite support, integral = " << worst;
                c.detail = os.str();
            }
        },
        jumps.law());
    return c;
}

}  // namespace

ValidationReport validate_integrability(const JumpSpec& jumps, double p, double beta, double epsilon) {
    require(p >= 0.0, "growth exponent must be >= 0");
    require(epsilon > 0.0, "epsilon must be > 0");
    require(beta > p, "beta must exceed the growth exponent");
    ValidationReport report{p, beta, epsilon, {}};
    const double payoff_exp = std::max(1.0, p) + epsilon;
    report.conditions.push_back(check_condition(jumps, "unit_exp_moment", "int_{|y|>1} e^{y_i} nu(dy) < inf", 1.0,
                                                Tails::Upper, 0));
    report.conditions.push_back(check_condition(jumps, "payoff_growth_moment",
                                                "int_{|y|>1} e^{((1 v p)+eps) y_i} nu(dy) < inf", payoff_exp,
                                                Tails::Upper, 0));
    report.conditions.push_back(check_condition(jumps, "weighted_first_moment",
                                                "int_{|y|>1} |y| e^{beta|y|} nu(dy) < inf", beta, Tails::Both, 1));
    report.conditions.push_back(check_condition(jumps, "weighted_second_moment",
                                                "int_{|y|>1} |y|^2 e^{2 beta|y|} nu(dy) < inf", 2.0 * beta,
                                                Tails::Both, 2));
    return report;
}

double exp_moment(const LevyModel& model, double q, int i, double t) {
    const auto& jumps = model.jumps();
    double jump_term = jumps.active() ? jumps.intensity() * (jumps.mgf(i, q) - 1.0) : 0.0;
    double a = model.gaussian().variance(i);
    return std::exp(t * (q * model.pure_levy_drift(i) + 0.5 * q * q * a + jump_term));
}

double log_return_exp_moment(const LevyModel& model, double q, int i, double t) {
    const auto& rates = model.rates();
    return std::exp(q * (rates.r - rates.delta(i)) * t) * exp_moment(model, q, i, t);
}

double jump_exp_moment_quadrature(const JumpSpec& jumps, int i, double q) {
    return std::visit(
        [&](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MertonNormal>) {
                double m = l.mean(i), s = std::sqrt(l.cov(i, i));
                if (s == 0.0) return std::exp(q * m);
                boost::math::quadrature::sinh_sinh<double> integrator;
                auto f = [&](double u) {
                    return std::exp(q * (m + s * u) - 0.5 * u * u) / std::sqrt(2.0 * M_PI);
                };
                return integrator.integrate(f, 1e-15);
            } else if constexpr (std::is_same_v<T, KouDoubleExponential>) {
                double p = l.p_up(i), up = l.eta_up(i), down = l.eta_down(i);
                boost::math::quadrature::exp_sinh<double> integrator;
                double value = 0.0;
                if (p > 0.0) {
                    if (q >= up) throw Error(ErrorCode::NonIntegrableJump, "Kou upward tail diverges");
                    value += p * integrator.integrate([&](double y) { return up * std::exp((q - up) * y); }, 1e-15);
                }
                if (p < 1.0) {
                    if (-q >= down) throw Error(ErrorCode::NonIntegrableJump, "Kou downward tail diverges");
                    value += (1.0 - p) *
                             integrator.integrate([&](double y) { return down * std::exp(-(q + down) * y); }, 1e-15);
                }
                return value;
            } else if constexpr (std::is_same_v<T, EmpiricalJumps>) {
                double value = 0.0;
                for (std::size_t k = 0; k < l.atoms.size(); ++k) value += l.probs[k] * std::exp(q * l.atoms[k](i));
                return value;
            } else {
                return 1.0;
            }
        },
        jumps.law());
}

double martingale_check_quadrature(const LevyModel& model, int i, double t) {
    const auto& jumps = model.jumps();
    double jump_term = jumps.active() ? jumps.intensity() * (jump_exp_moment_quadrature(jumps, i, 1.0) - 1.0) : 0.0;
    return std::exp(t * (model.log_drift()(i) + 0.5 * model.gaussian().variance(i) + jump_term));
}

// ---------------------------------------------------------------------------
// Simulation

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t path) {
    auto mix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    return mix(mix(seed) ^ (path * 0xd1b54a32d192ed03ULL + 1));
}

PathSimulator::PathSimulator(const LevyModel& model, double dt)
    : model_(&model), dim_(model.dim()), dt_(dt), sqrt_dt_(std::sqrt(dt)) {
    require(dt > 0.0, "time step must be positive");
    drift_step_ = model.log_drift() * dt;
    diffusion_factor_ = model.gaussian().factor() * sqrt_dt_;
    const auto& jumps = model.jumps();
    jump_rate_step_ = jumps.active() ? jumps.intensity() * dt : 0.0;
    if (const auto* m = std::get_if<MertonNormal>(&jumps.law())) jump_factor_ = symmetric_sqrt(m->cov);
}

PathSimulator::Stream PathSimulator::stream(std::uint64_t seed, std::uint64_t path) const {
    Stream s{std::mt19937_64(substream_seed(seed, path)), std::normal_distribution<double>(0.0, 1.0),
             std::uniform_real_distribution<double>(0.0, 1.0),
             std::poisson_distribution<int>(jump_rate_step_ > 0.0 ? jump_rate_step_ : 1.0), {}};
    if (const auto* e = std::get_if<EmpiricalJumps>(&model_->jumps().law()))
        s.atom = std::discrete_distribution<int>(e->probs.begin(), e->probs.end());
    return s;
}

void PathSimulator::sample_jump(Stream& s, std::span<double> out) const {
    std::visit(
        [&](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MertonNormal>) {
                double z[kMaxDim];
                for (int j = 0; j < dim_; ++j) z[j] = s.normal(s.engine);
                for (int i = 0; i < dim_; ++i) {
                    double v = l.mean(i);
                    for (int j = 0; j < dim_; ++j) v += jump_factor_(i, j) * z[j];
                    out[i] = v;
                }
            } else if constexpr (std::is_same_v<T, KouDoubleExponential>) {
                for (int i = 0; i < dim_; ++i) {
                    double u = s.uniform(s.engine);
                    double e = -std::log1p(-s.uniform(s.engine));
                    out[i] = u < l.p_up(i) ? e / l.eta_up(i) : -e / l.eta_down(i);
                }
            } else if constexpr (std::is_same_v<T, EmpiricalJumps>) {
                const auto& atom = l.atoms[static_cast<std::size_t>(s.atom(s.engine))];
                for (int i = 0; i < dim_; ++i) out[i] = atom(i);
            } else {
                for (int i = 0; i < dim_; ++i) out[i] = 0.0;
            }
        },
        model_->jumps().law());
}

void PathSimulator::advance(Stream& s, std::span<double> log_x) const {
    double z[kMaxDim];
    for (int j = 0; j < dim_; ++j) z[j] = s.normal(s.engine);
    for (int i = 0; i < dim_; ++i) {
        double v = drift_step_(i);
        for (int j = 0; j <= i; ++j) v += diffusion_factor_(i, j) * z[j];
        log_x[i] += v;
    }
    if (jump_rate_step_ > 0.0) {
        int n = s.poisson(s.engine);
        double y[kMaxDim];
        for (int k = 0; k < n; ++k) {
            sample_jump(s, std::span<double>(y, static_cast<std::size_t>(dim_)));
            for (int i = 0; i < dim_; ++i) log_x[i] += y[i];
        }
    }
}

PathSet simulate_paths(const LevyModel& model, double s, std::span<const double> x, double T, int n_steps,
                       int n_paths, std::uint64_t seed, int threads) {
    const int d = model.dim();
    require(static_cast<int>(x.size()) == d, "initial price dimension differs from the model dimension");
    for (double v : x)
        if (!(v > 0.0)) throw Error(ErrorCode::InvalidDomain, "initial prices must be strictly positive");
    require(T > s, "maturity must exceed the start time");
    require(n_steps >= 1 && n_paths >= 1, "need at least one step and one path");

    PathSet out;
    out.n_paths = n_paths;
    out.n_steps = n_steps;
    out.dim = d;
    out.seed = seed;
    const double dt = (T - s) / n_steps;
    out.times.resize(static_cast<std::size_t>(n_steps) + 1);
    for (int k = 0; k <= n_steps; ++k) out.times[k] = k == n_steps ? T : s + k * dt;
    out.prices.resize(static_cast<std::size_t>(n_paths) * (n_steps + 1) * d);

    PathSimulator sim(model, dt);
    parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> log_x(d);
        for (std::size_t p = begin; p < end; ++p) {
            auto stream = sim.stream(seed, p);
            std::fill(log_x.begin(), log_x.end(), 0.0);
            double* row = &out.prices[p * (n_steps + 1) * d];
            for (int i = 0; i < d; ++i) row[i] = x[i];
            for (int k = 1; k <= n_steps; ++k) {
                sim.advance(stream, log_x);
                for (int i = 0; i < d; ++i) row[k * d + i] = x[i] * std::exp(log_x[i]);
            }
        }
    });
    return out;
}

}  // namespace amerlevy
