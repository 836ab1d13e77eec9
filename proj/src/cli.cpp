#include "amerlevy/cli.hpp"

#include "amerlevy/error.hpp"
#include "amerlevy/grid.hpp"
#include "amerlevy/io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <sstream>

namespace amerlevy {

namespace {

struct Inputs {
    LevyModel model;
    std::optional<Payoff> payoff;
};

// Anything wrong with the configuration itself is a usage failure.
Inputs load_inputs(const RunConfig& cfg, bool need_payoff) {
    try {
        Inputs in{model_from_json(load_json(cfg.model_path)), std::nullopt};
        if (!cfg.payoff_path.empty()) in.payoff = payoff_from_json(load_json(cfg.payoff_path));
        if (need_payoff && !in.payoff) throw Error(ErrorCode::ParseError, "a payoff file is required");
        if (in.payoff && in.payoff->dim != in.model.dim())
            throw Error(ErrorCode::ParseError, "payoff dimension differs from the model dimension");
        if (need_payoff && static_cast<int>(cfg.spot.size()) != in.model.dim())
            throw Error(ErrorCode::ParseError, "spot needs one entry per asset");
        return in;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError) throw;
        throw Error(ErrorCode::ParseError, e.what());
    }
}

void prepare_out_dir(const RunConfig& cfg) {
    if (cfg.out_dir) std::filesystem::create_directories(*cfg.out_dir);
}

int time_stride(const Grid& g) { return std::max(1, g.n_time / 100); }
int space_stride(const Grid& g) { return g.dim == 1 ? 1 : std::max(1, g.axes[0].n / 101); }

double relative_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
    const Inputs in = load_inputs(cfg, false);
    const LevyModel& m = in.model;
    const double p = in.payoff ? growth_exponent(*in.payoff) : 1.0;
    const auto report = validate_integrability(m.jumps(), p, cfg.solver.beta, cfg.solver.epsilon);

    const auto mc = martingale_check_mc(m, 1.0, cfg.mc.n_paths, cfg.mc.seed, cfg.threads);
    Json checks = Json::array();
    bool martingale_ok = true;
    for (int i = 0; i < m.dim(); ++i) {
        const double target = std::exp(m.rates().r - m.rates().delta(i));
        const double quad = martingale_check_quadrature(m, i, 1.0);
        const double rel = std::abs(quad - target) / target;
        const double z = mc[i].std_error > 0.0 ? std::abs(mc[i].mean - target) / mc[i].std_error : 0.0;
        martingale_ok = martingale_ok && rel <= 1e-10;
        checks.push_back({{"component", i},
                          {"target", target},
                          {"quadrature", quad},
                          {"quadrature_rel_error", rel},
                          {"mc", to_json(mc[i])},
                          {"mc_z_score", z}});
    }
    Json j{{"model", to_json(m)},
           {"log_drift", to_json(m)["log_drift"]},
           {"martingale", checks},
           {"integrability", to_json(report)}};
    out << j.dump(2) << "\n";
    return report.all_hold() && martingale_ok ? kExitOk : kExitDomain;
}

int cmd_price(const RunConfig& cfg, PriceMethod method, std::ostream& out) {
    const Inputs in = load_inputs(cfg, true);
    const Payoff& payoff = *in.payoff;
    require_integrable(in.model, payoff, cfg.solver);
    prepare_out_dir(cfg);
    Json j{{"inputs", {{"spot", cfg.spot}, {"T", cfg.T}, {"payoff", to_json(payoff)}}}};

    double pide_eu = 0.0, pide_am = 0.0;
    if (method != PriceMethod::Mc) {
        SolverOptions opts = cfg.solver.solver;
        opts.threads = cfg.threads;
        Grid grid = build_grid(in.model, payoff, cfg.spot, cfg.T, cfg.solver.n_space, cfg.solver.n_time,
                               cfg.solver.beta, cfg.solver.grid);
        DiscreteOperator op = assemble(in.model, grid, cfg.solver.grid.y_max_tail);
        Solution am = solve_american_penalty(in.model, payoff, grid, op, opts);
        Solution eu = solve_european(in.model, payoff, grid, op, opts);
        pide_am = am.spot_value();
        pide_eu = eu.spot_value();
        j["pide"] = {{"european", pide_eu},
                     {"american", pide_am},
                     {"penalty", am.penalty},
                     {"ladder_converged", am.ladder_converged},
                     {"solver", to_json(cfg.solver)}};
        if (cfg.out_dir) {
            write_solution_csv(*cfg.out_dir / "american.csv", am, time_stride(grid), space_stride(grid));
            write_solution_csv(*cfg.out_dir / "european.csv", eu, time_stride(grid), space_stride(grid));
        }
    }
    if (method != PriceMethod::Pide) {
        const auto eu = price_european_mc(in.model, payoff, 0.0, cfg.spot, cfg.T, cfg.mc.n_paths, cfg.mc.seed,
                                          cfg.threads);
        const auto am = price_american_ls(in.model, payoff, 0.0, cfg.spot, cfg.T, cfg.mc.n_steps, cfg.mc.n_paths,
                                          RegressionBasis{cfg.mc.basis_degree, true}, cfg.mc.seed, cfg.threads);
        j["mc"] = {{"european", to_json(eu)}, {"american", to_json(am)}, {"config", to_json(cfg.mc)}};
        if (method == PriceMethod::Both)
            j["cross_method"] = {{"european_rel_gap", relative_gap(eu.mean, pide_eu)},
                                 {"american_rel_gap", relative_gap(am.mean, pide_am)}};
    }
    out << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_premium(const RunConfig& cfg, std::ostream& out) {
    const Inputs in = load_inputs(cfg, true);
    prepare_out_dir(cfg);
    PremiumArtifacts art;
    const auto rep = premium_identity(in.model, *in.payoff, cfg.spot, cfg.T, cfg.solver, cfg.mc, cfg.threads, &art);
    const Json j = to_json(rep);
    if (cfg.out_dir) {
        save_json(*cfg.out_dir / "premium.json", j);
        if (art.grid.dim == 1) write_boundary_csv(*cfg.out_dir / "boundary.csv", free_boundary(art.american, *in.payoff));
        write_solution_csv(*cfg.out_dir / "american.csv", art.american, time_stride(art.grid),
                           space_stride(art.grid));
    }
    out << j.dump(2) << "\n";
    return rep.pass ? kExitOk : kExitDomain;
}

int cmd_converge(const RunConfig& cfg, const std::vector<ConvergenceLevel>& levels, std::ostream& out) {
    const Inputs in = load_inputs(cfg, true);
    if (levels.size() < 3) throw Error(ErrorCode::ParseError, "a convergence study needs at least 3 levels");
    prepare_out_dir(cfg);
    const auto rows = convergence_study(in.model, *in.payoff, cfg.spot, cfg.T, cfg.solver, cfg.mc, levels,
                                        cfg.threads);
    if (cfg.out_dir) write_convergence_csv(*cfg.out_dir / "convergence.csv", rows);
    Json j = Json::array();
    for (const auto& r : rows)
        j.push_back({{"level", r.level},
                     {"n_space", r.grid.n_space},
                     {"n_time", r.grid.n_time},
                     {"n_paths", r.grid.n_paths},
                     {"american", r.american},
                     {"european", r.european},
                     {"premium_gap", r.premium_gap},
                     {"complementarity_maxnorm", r.complementarity_maxnorm},
                     {"runtime", r.runtime}});
    out << j.dump(2) << "\n";
    return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"American and European option pricing in exponential Levy models", "amerlevy"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string solver_path, mc_path, out_dir, method = "both";
    std::optional<int> n_space, n_time;
    std::optional<double> beta;
    std::optional<long> n_paths;
    std::optional<int> n_steps;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> level_specs;

    auto common = [&](CLI::App* sub, bool pricing) {
        sub->add_option("--model", cfg.model_path, "model spec JSON")->required();
        auto* pay = sub->add_option("--payoff", cfg.payoff_path, "payoff spec JSON");
        sub->add_option("--solver", solver_path, "solver config JSON");
        sub->add_option("--mc", mc_path, "Monte Carlo config JSON");
        sub->add_option("--beta", beta, "exponential weight beta");
        sub->add_option("--paths", n_paths, "Monte Carlo paths");
        sub->add_option("--seed", seed, "Monte Carlo seed");
        sub->add_option("--threads", cfg.threads, "worker threads (overrides AMERLEVY_THREADS)");
        if (!pricing) return;
        pay->required();
        sub->add_option("--spot", cfg.spot, "initial prices, comma separated")->required()->delimiter(',');
        sub->add_option("--T", cfg.T, "maturity in years")->required();
        sub->add_option("--out", out_dir, "output directory for CSV/JSON files");
        sub->add_option("--n-space", n_space, "space nodes per axis");
        sub->add_option("--n-time", n_time, "time steps");
        sub->add_option("--steps", n_steps, "Monte Carlo exercise dates");
    };

    auto* validate = app.add_subcommand("validate", "calibrated drift, martingale and integrability checks");
    common(validate, false);
    auto* price = app.add_subcommand("price", "European and American prices");
    common(price, true);
    price->add_option("--method", method, "pide, mc or both")->check(CLI::IsMember({"pide", "mc", "both"}));
    auto* premium = app.add_subcommand("premium", "early-exercise premium identity report");
    common(premium, true);
    auto* converge = app.add_subcommand("converge", "refinement study");
    common(converge, true);
    converge->add_option("--levels", level_specs, "n_space,n_time,n_paths triples (at least 3)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        try {
            if (!solver_path.empty()) cfg.solver = solver_config_from_json(load_json(solver_path));
            if (!mc_path.empty()) cfg.mc = mc_config_from_json(load_json(mc_path));
        } catch (const Error& e) {
            throw Error(ErrorCode::ParseError, e.what());
        }
        if (n_space) cfg.solver.n_space = *n_space;
        if (n_time) cfg.solver.n_time = *n_time;
        if (beta) cfg.solver.beta = *beta;
        if (n_paths) cfg.mc.n_paths = *n_paths;
        if (n_steps) cfg.mc.n_steps = *n_steps;
        if (seed) cfg.mc.seed = *seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;

        if (*validate) return cmd_validate(cfg, out);
        if (*price)
            return cmd_price(cfg, method == "pide" ? PriceMethod::Pide : method == "mc" ? PriceMethod::Mc : PriceMethod::Both,
                             out);
        if (*premium) return cmd_premium(cfg, out);
        std::vector<ConvergenceLevel> levels;
        for (const auto& s : level_specs) {
            ConvergenceLevel l;
            char c1 = 0, c2 = 0;
            std::istringstream is(s);
            if (!(is >> l.n_space >> c1 >> l.n_time >> c2 >> l.n_paths) || c1 != ',' || c2 != ',')
                throw Error(ErrorCode::ParseError, "bad level '" + s + "', expected n_space,n_time,n_paths");
            levels.push_back(l);
        }
        return cmd_converge(cfg, levels, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::ParseError ? kExitUsage : kExitDomain;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitDomain;
    }
}

}  // namespace amerlevy
