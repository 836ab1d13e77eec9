#ifndef AMERLEVY_TESTS_PSI_SAMPLING_HPP
#define AMERLEVY_TESTS_PSI_SAMPLING_HPP

#include "amerlevy/error.hpp"
#include "amerlevy/payoffs.hpp"

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace psi_check {

struct Case {
    std::string name;
    amerlevy::Payoff payoff;
};

/// One instance of every catalog payoff kind.
inline std::vector<Case> catalog() {
    using amerlevy::Payoff;
    return {
        {"min_put", Payoff::min_put(2, 100.0)},
        {"index_put", Payoff::index_put({0.6, 0.4}, 100.0)},
        {"spread_put", Payoff::spread_put({1.0, -1.0}, 5.0)},
        {"index_call", Payoff::index_call({0.5, 0.5}, 100.0)},
        {"spread_call", Payoff::spread_call({1.0, -1.0}, 5.0)},
        {"max_call", Payoff::max_call(2, 100.0)},
        {"multi_strike", Payoff::multi_strike({95.0, 105.0})},
        {"power_product", Payoff::power_product(2, std::pow(1e4, 1.2), 1.2)},
        {"constant", Payoff::constant(2, 7.0)},
    };
}

inline amerlevy::Rates rates() { return {0.05, amerlevy::Vector::LinSpaced(2, 0.08, 0.10)}; }

inline amerlevy::GaussianPart gaussian() {
    amerlevy::Matrix a(2, 2);
    a << 0.04, 0.018, 0.018, 0.09;
    return amerlevy::GaussianPart(a);
}

inline constexpr double kStep = 1e-2;

struct Sample {
    std::vector<double> x;
    amerlevy::FdCheck check;
};

/// n points with prices in [60, 160] where the payoff is smooth on the whole fd stencil.
inline std::vector<Sample> smooth_samples(const amerlevy::Payoff& payoff, int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(std::log(60.0), std::log(160.0));
    const auto r = rates();
    const auto g = gaussian();
    std::vector<Sample> out;
    while (static_cast<int>(out.size()) < n) {
        std::vector<double> x(payoff.dim);
        for (double& v : x) v = std::exp(u(rng));
        try {
            out.push_back({x, amerlevy::psi_minus_fd_check(payoff, x, r, g, kStep)});
        } catch (const amerlevy::Error& e) {
            if (e.code() != amerlevy::ErrorCode::KinkTooClose && e.code() != amerlevy::ErrorCode::TieBreak) throw;
        }
    }
    return out;
}

/// |a - b| relative to the size of Psi at the point; zero when both sides vanish.
inline double relative_error(double a, double b, double scale) {
    const double diff = std::abs(a - b);
    return diff == 0.0 ? 0.0 : diff / scale;
}

inline double psi_minus_error(const amerlevy::FdCheck& c) {
    return relative_error(c.closed_form, c.fd_value, std::max(std::abs(c.closed_signed), std::abs(c.fd_signed)));
}

}  // namespace psi_check

#endif  // AMERLEVY_TESTS_PSI_SAMPLING_HPP
