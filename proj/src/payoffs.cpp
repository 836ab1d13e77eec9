#include "amerlevy/payoffs.hpp"

#include "amerlevy/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace amerlevy {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, msg);
}

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

double dot(const std::vector<double>& w, std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
    return s;
}

// Index of the strict minimum (or maximum) of v; -1 on a tie for the extreme value.
template <class Better>
int strict_extreme(std::span<const double> v, Better better) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (better(v[i], v[best])) best = i;
    for (int i = 0; i < static_cast<int>(v.size()); ++i)
        if (i != best && v[i] == v[best]) return -1;
    return best;
}

int argmin_strict(std::span<const double> v) { return strict_extreme(v, std::less<>{}); }
int argmax_strict(std::span<const double> v) { return strict_extreme(v, std::greater<>{}); }

int sign_pattern(std::span<const double> x) {
    int bits = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < 0.0) bits |= 1 << i;
    return bits;
}

void require_positive(std::span<const double> x) {
    for (double v : x)
        if (!(v > 0.0)) throw Error(ErrorCode::InvalidDomain, "Psi closed forms need a positive price vector");
}

}  // namespace

std::string to_string(PayoffKind kind) {
    switch (kind) {
        case PayoffKind::MinPut: return "min_put";
        case PayoffKind::IndexPut: return "index_put";
        case PayoffKind::SpreadPut: return "spread_put";
        case PayoffKind::IndexCall: return "index_call";
        case PayoffKind::SpreadCall: return "spread_call";
        case PayoffKind::MaxCall: return "max_call";
        case PayoffKind::MultiStrike: return "multi_strike";
        case PayoffKind::PowerProduct: return "power_product";
        case PayoffKind::Constant: return "constant";
    }
    return "unknown";
}

PayoffKind payoff_kind_from_string(std::string_view name) {
    for (auto k : {PayoffKind::MinPut, PayoffKind::IndexPut, PayoffKind::SpreadPut, PayoffKind::IndexCall,
                   PayoffKind::SpreadCall, PayoffKind::MaxCall, PayoffKind::MultiStrike, PayoffKind::PowerProduct,
                   PayoffKind::Constant})
        if (to_string(k) == name) return k;
    if (name == "put") return PayoffKind::MinPut;
    throw Error(ErrorCode::ParseError, "unknown payoff kind '" + std::string(name) + "'");
}

Payoff Payoff::min_put(int dim, double K) {
    Payoff p{PayoffKind::MinPut, dim, K, {}, {}, 0.0};
    p.validate();
    return p;
}

Payoff Payoff::index_put(std::vector<double> w, double K) {
    int d = static_cast<int>(w.size());
    Payoff p{PayoffKind::IndexPut, d, K, {}, std::move(w), 0.0};
    p.validate();
    return p;
}

Payoff Payoff::spread_put(std::vector<double> w, double K) {
    int d = static_cast<int>(w.size());
    Payoff p{PayoffKind::SpreadPut, d, K, {}, std::move(w), 0.0};
    p.validate();
    return p;
}

Payoff Payoff::index_call(std::vector<double> w, double K) {
    int d = static_cast<int>(w.size());
    Payoff p{PayoffKind::IndexCall, d, K, {}, std::move(w), 0.0};
    p.validate();
    return p;
}

Payoff Payoff::spread_call(std::vector<double> w, double K) {
    int d = static_cast<int>(w.size());
    Payoff p{PayoffKind::SpreadCall, d, K, {}, std::move(w), 0.0};
    p.validate();
    return p;
}

Payoff Payoff::max_call(int dim, double K) {
    Payoff p{PayoffKind::MaxCall, dim, K, {}, {}, 0.0};
    p.validate();
    return p;
}

Payoff Payoff::multi_strike(std::vector<double> K) {
    int d = static_cast<int>(K.size());
    Payoff p{PayoffKind::MultiStrike, d, 0.0, std::move(K), {}, 0.0};
    p.validate();
    return p;
}

Payoff Payoff::power_product(int dim, double K, double gamma) {
    Payoff p{PayoffKind::PowerProduct, dim, K, {}, {}, gamma};
    p.validate();
    return p;
}

Payoff Payoff::constant(int dim, double c) {
    Payoff p{PayoffKind::Constant, dim, c, {}, {}, 0.0};
    p.validate();
    return p;
}

void Payoff::validate() const {
    require(dim >= 1, "payoff dimension must be positive");
    require(std::isfinite(strike) && strike >= 0.0, "strike must be finite and >= 0");
    switch (kind) {
        case PayoffKind::IndexPut:
        case PayoffKind::IndexCall:
            require(static_cast<int>(weights.size()) == dim, "index payoffs need one weight per asset");
            for (double w : weights) require(w >= 0.0, "index weights must be >= 0");
            break;
        case PayoffKind::SpreadPut:
        case PayoffKind::SpreadCall:
            require(static_cast<int>(weights.size()) == dim, "spread payoffs need one weight per asset");
            for (double w : weights) require(std::isfinite(w), "spread weights must be finite");
            break;
        case PayoffKind::MultiStrike:
            require(static_cast<int>(strikes.size()) == dim, "multi-strike payoff needs one strike per asset");
            for (double k : strikes) require(std::isfinite(k) && k >= 0.0, "strikes must be >= 0");
            break;
        case PayoffKind::PowerProduct:
            require(gamma > 1.0 && std::isfinite(gamma), "power-product exponent must exceed 1");
            break;
        default:
            break;
    }
}

double evaluate(const Payoff& payoff, std::span<const double> x) {
    const double K = payoff.strike;
    switch (payoff.kind) {
        case PayoffKind::MinPut: {
            if (std::any_of(x.begin(), x.end(), [](double v) { return v < 0.0; })) return K;
            return positive_part(K - *std::min_element(x.begin(), x.end()));
        }
        case PayoffKind::IndexPut: {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
                if (x[i] >= 0.0) s += payoff.weights[i] * x[i];
            return positive_part(K - s);
        }
        case PayoffKind::SpreadPut: return positive_part(K - dot(payoff.weights, x));
        case PayoffKind::IndexCall:
        case PayoffKind::SpreadCall: return positive_part(dot(payoff.weights, x) - K);
        case PayoffKind::MaxCall: return positive_part(*std::max_element(x.begin(), x.end()) - K);
        case PayoffKind::MultiStrike: {
            double m = x[0] - payoff.strikes[0];
            for (std::size_t i = 1; i < x.size(); ++i) m = std::max(m, x[i] - payoff.strikes[i]);
            return positive_part(m);
        }
        case PayoffKind::PowerProduct: {
            double prod = 1.0;
            for (double v : x) prod *= v;
            return positive_part(std::pow(std::abs(prod), payoff.gamma) - K);
        }
        case PayoffKind::Constant: return K;
    }
    return 0.0;
}

double log_transform(const Payoff& payoff, std::span<const double> z) {
    double buf[16];
    for (std::size_t i = 0; i < z.size(); ++i) buf[i] = std::exp(z[i]);
    return evaluate(payoff, std::span<const double>(buf, z.size()));
}

double growth_exponent(const Payoff& payoff) {
    switch (payoff.kind) {
        case PayoffKind::MinPut:
        case PayoffKind::IndexPut:
        case PayoffKind::Constant: return 0.0;
        case PayoffKind::PowerProduct: return payoff.gamma * payoff.dim;
        default: return 1.0;
    }
}

bool is_put_like(const Payoff& payoff) {
    switch (payoff.kind) {
        case PayoffKind::MinPut:
        case PayoffKind::IndexPut:
        case PayoffKind::SpreadPut:
        case PayoffKind::Constant: return true;
        default: return false;
    }
}

double payoff_scale(const Payoff& payoff) {
    double s = payoff.strike;
    for (double k : payoff.strikes) s = std::max(s, k);
    return std::max(s, 1.0);
}

int smooth_piece(const Payoff& payoff, std::span<const double> x) {
    const int pattern = sign_pattern(x) << 8;
    const bool active = evaluate(payoff, x) > 0.0;
    switch (payoff.kind) {
        case PayoffKind::MinPut: {
            if (pattern != 0) return pattern;
            if (!active) return 0;
            int i = argmin_strict(x);
            return i < 0 ? -1 : 1 + i;
        }
        case PayoffKind::MaxCall: {
            if (!active) return pattern;
            int i = argmax_strict(x);
            return i < 0 ? -1 : pattern + 1 + i;
        }
        case PayoffKind::MultiStrike: {
            if (!active) return pattern;
            double shifted[16];
            for (std::size_t i = 0; i < x.size(); ++i) shifted[i] = x[i] - payoff.strikes[i];
            int i = argmax_strict(std::span<const double>(shifted, x.size()));
            return i < 0 ? -1 : pattern + 1 + i;
        }
        case PayoffKind::Constant: return 0;
        default: return pattern + (active ? 1 : 0);
    }
}

double psi_closed_form(const Payoff& payoff, std::span<const double> x, const Rates& rates,
                       const GaussianPart& gaussian) {
    require_positive(x);
    const double r = rates.r;
    const auto& delta = rates.delta;
    const double K = payoff.strike;
    if (payoff.kind == PayoffKind::Constant) return -r * K;
    if (!(evaluate(payoff, x) > 0.0)) return 0.0;
    switch (payoff.kind) {
        case PayoffKind::MinPut: {
            int i = argmin_strict(x);
            if (i < 0) throw Error(ErrorCode::TieBreak, "minimum attained by several assets");
            return -r * K + delta(i) * x[i];
        }
        case PayoffKind::IndexPut:
        case PayoffKind::SpreadPut: {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += payoff.weights[i] * delta(i) * x[i];
            return -r * K + s;
        }
        case PayoffKind::IndexCall:
        case PayoffKind::SpreadCall: {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += payoff.weights[i] * delta(i) * x[i];
            return r * K - s;
        }
        case PayoffKind::MaxCall: {
            int i = argmax_strict(x);
            if (i < 0) throw Error(ErrorCode::TieBreak, "maximum attained by several assets");
            return r * K - delta(i) * x[i];
        }
        case PayoffKind::MultiStrike: {
            double shifted[16];
            for (std::size_t i = 0; i < x.size(); ++i) shifted[i] = x[i] - payoff.strikes[i];
            int i = argmax_strict(std::span<const double>(shifted, x.size()));
            if (i < 0) throw Error(ErrorCode::TieBreak, "maximum of x - K attained by several assets");
            return r * payoff.strikes[i] - delta(i) * x[i];
        }
        case PayoffKind::PowerProduct: {
            const auto& a = gaussian.covariance();
            const double g = payoff.gamma;
            double prod = 1.0;
            for (double v : x) prod *= v;
            const double f = std::pow(std::abs(prod), g);
            double drift = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) drift += r - delta(i) - 0.5 * a(i, i);
            const double coeff = r - g * drift - 0.5 * g * g * a.sum();
            return -(coeff * f - r * K);
        }
        default: return 0.0;
    }
}

double psi_minus(const Payoff& payoff, std::span<const double> x, const Rates& rates, const GaussianPart& gaussian) {
    return positive_part(-psi_closed_form(payoff, x, rates, gaussian));
}

double power_product_psi_minus_unhalved(const Payoff& payoff, std::span<const double> x, const Rates& rates,
                                        const GaussianPart& gaussian) {
    require(payoff.kind == PayoffKind::PowerProduct, "power-product payoff expected");
    require_positive(x);
    if (!(evaluate(payoff, x) > 0.0)) return 0.0;
    const auto& a = gaussian.covariance();
    const double g = payoff.gamma, r = rates.r;
    double prod = 1.0;
    for (double v : x) prod *= v;
    const double f = std::pow(std::abs(prod), g);
    double drift = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) drift += r - rates.delta(i) - a(i, i);
    return positive_part((r - g * drift - g * g * a.sum()) * f - r * payoff.strike);
}

FdCheck psi_minus_fd_check(const Payoff& payoff, std::span<const double> x, const Rates& rates,
                           const GaussianPart& gaussian, double h) {
    require(h > 0.0, "finite-difference step must be positive");
    require_positive(x);
    const int d = static_cast<int>(x.size());
    std::vector<double> p(x.begin(), x.end());
    const int piece = smooth_piece(payoff, x);
    auto psi_at = [&](int i, double si, int j, double sj) {
        if (i >= 0) p[i] += si;
        if (j >= 0) p[j] += sj;
        double v = evaluate(payoff, p);
        int pc = smooth_piece(payoff, p);
        if (i >= 0) p[i] = x[i];
        if (j >= 0) p[j] = x[j];
        if (pc != piece || piece < 0) throw Error(ErrorCode::KinkTooClose, "payoff is not smooth near the point");
        return v;
    };
    // Smoothness ball: every stencil point and the axis/diagonal points at distance 2h.
    for (int i = 0; i < d; ++i) {
        psi_at(i, 2 * h, -1, 0);
        psi_at(i, -2 * h, -1, 0);
        for (int j = i + 1; j < d; ++j)
            for (double si : {-2 * h, 2 * h})
                for (double sj : {-2 * h, 2 * h}) psi_at(i, si, j, sj);
    }

    const auto& a = gaussian.covariance();
    const double psi0 = psi_at(-1, 0, -1, 0);
    double value = -rates.r * psi0;
    for (int i = 0; i < d; ++i) {
        const double up = psi_at(i, h, -1, 0), down = psi_at(i, -h, -1, 0);
        value += (rates.r - rates.delta(i)) * x[i] * (up - down) / (2 * h);
        value += 0.5 * a(i, i) * x[i] * x[i] * (up - 2 * psi0 + down) / (h * h);
        for (int j = i + 1; j < d; ++j) {
            const double cross = (psi_at(i, h, j, h) - psi_at(i, h, j, -h) - psi_at(i, -h, j, h) +
                                  psi_at(i, -h, j, -h)) /
                                 (4 * h * h);
            value += a(i, j) * x[i] * x[j] * cross;
        }
    }
    const double closed = psi_closed_form(payoff, x, rates, gaussian);
    return {positive_part(-closed), positive_part(-value), closed, value};
}

}  // namespace amerlevy
