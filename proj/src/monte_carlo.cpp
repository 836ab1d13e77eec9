#include "amerlevy/monte_carlo.hpp"

#include "amerlevy/error.hpp"
#include "amerlevy/parallel.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <string>

namespace amerlevy {

namespace {

void require_start(const LevyModel& model, const Payoff& payoff, double s, std::span<const double> x, double T) {
    payoff.validate();
    if (payoff.dim != model.dim() || static_cast<int>(x.size()) != model.dim())
        throw Error(ErrorCode::InvalidArgument, "payoff/spot dimension differs from the model dimension");
    for (double v : x)
        if (!(v > 0.0)) throw Error(ErrorCode::InvalidDomain, "initial prices must be strictly positive");
    if (!(T > s)) throw Error(ErrorCode::InvalidArgument, "maturity must exceed the start time");
}

// Exponent tuples of all monomials of total degree <= degree in d variables.
std::vector<std::vector<int>> monomials(int d, int degree) {
    std::vector<std::vector<int>> out;
    std::vector<int> e(d, 0);
    auto rec = [&](auto&& self, int i, int left) -> void {
        if (i == d) {
            out.push_back(e);
            return;
        }
        for (int p = 0; p <= left; ++p) {
            e[i] = p;
            self(self, i + 1, left - p);
        }
        e[i] = 0;
    };
    rec(rec, 0, degree);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        int sa = 0, sb = 0;
        for (int v : a) sa += v;
        for (int v : b) sb += v;
        return sa < sb;
    });
    return out;
}

struct Regressor {
    std::vector<std::vector<int>> terms;
    bool payoff = false;
    Eigen::VectorXd coef;

    int size() const { return static_cast<int>(terms.size()) + (payoff ? 1 : 0); }

    void features(std::span<const double> u, double psi_scaled, double* row) const {
        int c = 0;
        for (const auto& t : terms) {
            double v = 1.0;
            for (std::size_t i = 0; i < t.size(); ++i)
                for (int p = 0; p < t[i]; ++p) v *= u[i];
            row[c++] = v;
        }
        if (payoff) row[c] = psi_scaled;
    }

    double predict(std::span<const double> u, double psi_scaled) const {
        double row[1024];
        features(u, psi_scaled, row);
        double v = 0.0;
        for (int c = 0; c < size(); ++c) v += coef(c) * row[c];
        return v;
    }
};

}  // namespace

Estimate summarize(std::span<const double> values, std::uint64_t seed) {
    Estimate e;
    e.seed = seed;
    e.n_paths = static_cast<long>(values.size());
    if (values.empty()) return e;
    // Shifting by the first value keeps a constant sample exact.
    const double v0 = values[0];
    double sum = 0.0;
    for (double v : values) sum += v - v0;
    const double n = static_cast<double>(values.size());
    e.mean = v0 + sum / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - e.mean) * (v - e.mean);
        e.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return e;
}

Estimate price_european_mc(const LevyModel& model, const Payoff& payoff, double s, std::span<const double> x, double T,
                           long n_paths, std::uint64_t seed, int threads) {
    require_start(model, payoff, s, x, T);
    if (n_paths < 1) throw Error(ErrorCode::InvalidArgument, "need at least one path");
    const int d = model.dim();
    const double disc = std::exp(-model.rates().r * (T - s));
    PathSimulator sim(model, T - s);
    std::vector<double> values(static_cast<std::size_t>(n_paths));
    parallel_for(values.size(), threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> lx(d), px(d);
        for (std::size_t p = begin; p < end; ++p) {
            auto st = sim.stream(seed, p);
            std::fill(lx.begin(), lx.end(), 0.0);
            sim.advance(st, lx);
            for (int i = 0; i < d; ++i) px[i] = x[i] * std::exp(lx[i]);
            values[p] = disc * evaluate(payoff, px);
        }
    });
    return summarize(values, seed);
}

std::vector<Estimate> martingale_check_mc(const LevyModel& model, double t, long n_paths, std::uint64_t seed,
                                          int threads) {
    if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
    if (n_paths < 2) throw Error(ErrorCode::InvalidArgument, "need at least two paths");
    const int d = model.dim();
    const std::size_t n = static_cast<std::size_t>(n_paths);
    PathSimulator sim(model, t);
    std::vector<double> growth(n * d);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> lx(d);
        for (std::size_t p = begin; p < end; ++p) {
            auto st = sim.stream(seed, p);
            std::fill(lx.begin(), lx.end(), 0.0);
            sim.advance(st, lx);
            for (int i = 0; i < d; ++i) growth[i * n + p] = std::exp(lx[i]);
        }
    });
    std::vector<Estimate> out;
    for (int i = 0; i < d; ++i) out.push_back(summarize(std::span<const double>(growth).subspan(i * n, n), seed));
    return out;
}

Estimate price_american_ls(const LevyModel& model, const Payoff& payoff, double s, std::span<const double> x,
                           double T, int n_steps, long n_paths, const RegressionBasis& basis, std::uint64_t seed,
                           int threads) {
    require_start(model, payoff, s, x, T);
    if (n_steps < 10) throw Error(ErrorCode::InvalidArgument, "Longstaff-Schwartz needs at least 10 exercise dates");
    if (n_paths < 1) throw Error(ErrorCode::InvalidArgument, "need at least one path");
    if (basis.degree < 0) throw Error(ErrorCode::InvalidArgument, "basis degree must be nonnegative");
    const int d = model.dim();
    const int N = n_steps;
    const double dt = (T - s) / N;
    const double r = model.rates().r;
    const double scale = payoff_scale(payoff);
    const std::size_t n = static_cast<std::size_t>(n_paths);
    PathSimulator sim(model, dt);

    // Normalized regressors: log-return minus drift over the total standard deviation.
    std::vector<double> spread(d);
    for (int i = 0; i < d; ++i) spread[i] = std::sqrt(model.gaussian().variance(i) * (T - s));
    auto normalize = [&](const double* lx, int k, double* u) {
        for (int i = 0; i < d; ++i) u[i] = (lx[i] - model.log_drift()(i) * k * dt) / spread[i];
    };

    // Regression set: log-returns at dates 1..N.
    std::vector<double> paths(n * N * d);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> lx(d);
        for (std::size_t p = begin; p < end; ++p) {
            auto st = sim.stream(seed, p);
            std::fill(lx.begin(), lx.end(), 0.0);
            for (int k = 1; k <= N; ++k) {
                sim.advance(st, lx);
                std::copy(lx.begin(), lx.end(), paths.begin() + (p * N + (k - 1)) * d);
            }
        }
    });
    auto psi_at = [&](const double* lx, double* px) {
        for (int i = 0; i < d; ++i) px[i] = x[i] * std::exp(lx[i]);
        return evaluate(payoff, std::span<const double>(px, d));
    };

    std::vector<double> cash(n);
    std::vector<int> when(n, N);
    {
        std::vector<double> px(d);
        for (std::size_t p = 0; p < n; ++p) cash[p] = psi_at(&paths[(p * N + N - 1) * d], px.data());
    }
    std::vector<Regressor> rule(N);
    std::vector<double> u(d), px(d);
    for (int k = N - 1; k >= 1; --k) {
        std::vector<std::size_t> itm;
        std::vector<double> psi_k(n);
        for (std::size_t p = 0; p < n; ++p) {
            psi_k[p] = psi_at(&paths[(p * N + k - 1) * d], px.data());
            if (psi_k[p] > 0.0) itm.push_back(p);
        }
        if (itm.empty()) continue;
        Regressor reg;
        reg.payoff = basis.include_payoff;
        int degree = basis.degree;
        for (;;) {
            reg.terms = monomials(d, degree);
            const int cols = reg.size();
            bool ok = static_cast<int>(itm.size()) >= cols;
            if (ok) {
                Eigen::MatrixXd X(itm.size(), cols);
                Eigen::VectorXd Y(itm.size());
                std::vector<double> row(cols);
                for (std::size_t q = 0; q < itm.size(); ++q) {
                    const std::size_t p = itm[q];
                    normalize(&paths[(p * N + k - 1) * d], k, u.data());
                    reg.features(u, psi_k[p] / scale, row.data());
                    for (int c = 0; c < cols; ++c) X(q, c) = row[c];
                    Y(q) = std::exp(-r * (when[p] - k) * dt) * cash[p];
                }
                Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
                if (qr.rank() == cols) {
                    reg.coef = qr.solve(Y);
                    break;
                }
                ok = false;
            }
            if (degree > 0) {
                std::clog << "warning: regression basis reduced to degree " << degree - 1 << " at date " << k
                          << " (" << itm.size() << " in-the-money paths)\n";
                --degree;
                continue;
            }
            if (reg.payoff) {
                std::clog << "warning: dropping the payoff regressor at date " << k << "\n";
                reg.payoff = false;
                continue;
            }
            throw Error(ErrorCode::DegenerateRegression,
                        "no usable regression at date " + std::to_string(k) + " with " +
                            std::to_string(itm.size()) + " in-the-money paths");
        }
        for (std::size_t p : itm) {
            normalize(&paths[(p * N + k - 1) * d], k, u.data());
            if (psi_k[p] >= reg.predict(u, psi_k[p] / scale)) {
                cash[p] = psi_k[p];
                when[p] = k;
            }
        }
        rule[k] = std::move(reg);
    }
    paths.clear();
    paths.shrink_to_fit();

    // Pricing set: fresh paths [n, 2n) exercised by the fitted rule.
    std::vector<double> values(n);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> lx(d), uu(d), xx(d);
        for (std::size_t q = begin; q < end; ++q) {
            auto st = sim.stream(seed, n + q);
            std::fill(lx.begin(), lx.end(), 0.0);
            double v = 0.0;
            for (int k = 1; k <= N; ++k) {
                sim.advance(st, lx);
                const double psi = psi_at(lx.data(), xx.data());
                if (k == N) {
                    v = std::exp(-r * (T - s)) * psi;
                    break;
                }
                if (psi <= 0.0 || rule[k].terms.empty()) continue;
                normalize(lx.data(), k, uu.data());
                if (psi >= rule[k].predict(uu, psi / scale)) {
                    v = std::exp(-r * k * dt) * psi;
                    break;
                }
            }
            values[q] = v;
        }
    });
    Estimate e = summarize(values, seed);
    const double now = evaluate(payoff, x);
    if (now > e.mean) {
        e.mean = now;
        e.std_error = 0.0;
    }
    return e;
}

std::vector<Estimate> estimate_premium_mc(const LevyModel& model, const Payoff& payoff, const Solution& solution,
                                          double s, std::span<const double> x, long n_paths, std::uint64_t seed,
                                          std::span<const double> tolerances, int threads,
                                          PremiumDiagnostics* diagnostics) {
    const Grid& grid = solution.grid;
    require_start(model, payoff, s, x, grid.T);
    if (!solution.american) throw Error(ErrorCode::InvalidArgument, "the premium needs an American solution");
    if (n_paths < 1 || tolerances.empty()) throw Error(ErrorCode::InvalidArgument, "need paths and tolerances");
    const int ks = static_cast<int>(std::lround(s / grid.dt));
    if (std::abs(ks * grid.dt - s) > 1e-9 * std::max(1.0, grid.T) || ks >= grid.n_time)
        throw Error(ErrorCode::InvalidArgument, "start time must be a time node of the solution grid");

    const int d = model.dim();
    const int N = grid.n_time;
    const std::size_t m = tolerances.size();
    const std::size_t n = static_cast<std::size_t>(n_paths);
    const double r = model.rates().r;
    PathSimulator sim(model, grid.dt);
    std::vector<double> acc(n * m, 0.0);
    std::vector<std::uint8_t> exited(n, 0);
    std::vector<double> min_integrand(n, std::numeric_limits<double>::infinity());
    std::vector<long> samples(n, 0);

    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<double> lx(d), z(d), px(d);
        std::vector<std::uint8_t> on(m);
        for (std::size_t p = begin; p < end; ++p) {
            auto st = sim.stream(seed, p);
            std::fill(lx.begin(), lx.end(), 0.0);
            for (int k = ks; k < N; ++k) {
                if (k > ks) sim.advance(st, lx);
                for (int i = 0; i < d; ++i) z[i] = std::log(x[i]) + lx[i];
                Cell cell;
                if (!locate(grid, z, cell)) {
                    exited[p] = 1;
                    break;
                }
                bool any = false;
                for (std::size_t t = 0; t < m; ++t) {
                    double ind = 0.0;
                    for (int c = 0; c < cell.count; ++c)
                        if (in_exercise_band(solution.values(k, cell.corner[c]), solution.psi[cell.corner[c]],
                                             tolerances[t]))
                            ind += cell.weight[c];
                    on[t] = ind >= 0.5;
                    any = any || on[t];
                }
                if (!any) continue;
                for (int i = 0; i < d; ++i) px[i] = std::exp(z[i]);
                double pm = 0.0;
                try {
                    pm = psi_minus(payoff, px, model.rates(), model.gaussian());
                } catch (const Error& e) {
                    // Exact ties of the min/max selectors have probability zero off the start point.
                    if (e.code() != ErrorCode::TieBreak) throw;
                    continue;
                }
                if (!(pm > 0.0)) continue;
                const double integrand = pm - interpolate(cell, solution.jump_field.level(k));
                const double w = std::exp(-r * (k - ks) * grid.dt) * integrand * grid.dt;
                for (std::size_t t = 0; t < m; ++t)
                    if (on[t]) acc[p * m + t] += w;
                if (on[0]) {
                    min_integrand[p] = std::min(min_integrand[p], integrand);
                    ++samples[p];
                }
            }
        }
    });

    long exits = 0, sampled = 0;
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < n; ++p) {
        exits += exited[p];
        sampled += samples[p];
        lowest = std::min(lowest, min_integrand[p]);
    }
    const double fraction = static_cast<double>(exits) / static_cast<double>(n);
    if (diagnostics) {
        diagnostics->exit_fraction = fraction;
        diagnostics->min_integrand = lowest;
        diagnostics->exercised_samples = sampled;
    }
    if (fraction >= kMaxExitFraction)
        throw Error(ErrorCode::GridCoverageTooSmall,
                    "fraction of paths leaving the grid is " + std::to_string(fraction));
    std::vector<Estimate> out;
    std::vector<double> column(n);
    for (std::size_t t = 0; t < m; ++t) {
        for (std::size_t p = 0; p < n; ++p) column[p] = acc[p * m + t];
        out.push_back(summarize(column, seed));
    }
    return out;
}

Estimate estimate_premium_mc(const LevyModel& model, const Payoff& payoff, const Solution& solution, double s,
                             std::span<const double> x, double T, long n_paths, int n_steps, std::uint64_t seed,
                             int threads, PremiumDiagnostics* diagnostics) {
    const Grid& grid = solution.grid;
    if (std::abs(T - grid.T) > 1e-12 * std::max(1.0, T))
        throw Error(ErrorCode::InvalidArgument, "maturity differs from the solution grid");
    const int steps = static_cast<int>(std::lround((T - s) / grid.dt));
    if (n_steps != steps)
        throw Error(ErrorCode::InvalidArgument,
                    "premium time grid must match the solver: expected " + std::to_string(steps) + " steps");
    const double tol[1] = {solution.exercise_tol};
    return estimate_premium_mc(model, payoff, solution, s, x, n_paths, seed, tol, threads, diagnostics).front();
}

}  // namespace amerlevy
