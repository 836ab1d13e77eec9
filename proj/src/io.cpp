#include "amerlevy/io.hpp"

#include "amerlevy/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <variant>

namespace amerlevy {

namespace {

[[noreturn]] void parse_fail(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

const Json& field(const Json& j, const char* key) {
    if (!j.is_object()) parse_fail(std::string("expected an object holding '") + key + "'");
    auto it = j.find(key);
    if (it == j.end()) parse_fail(std::string("missing field '") + key + "'");
    return *it;
}

template <class T>
T get(const Json& j, const char* key) {
    try {
        return field(j, key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        parse_fail(std::string("field '") + key + "': " + e.what());
    }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return get<T>(j, key);
}

Vector vector_of(const Json& j, const char* key) {
    auto v = get<std::vector<double>>(j, key);
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix matrix_of(const Json& j, const char* key) {
    auto rows = get<std::vector<std::vector<double>>>(j, key);
    const std::size_t n = rows.size();
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) parse_fail(std::string("'") + key + "' must be a square matrix");
        for (std::size_t k = 0; k < n; ++k) m(i, k) = rows[i][k];
    }
    return m;
}

Json json_of(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json json_of(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> r(m.cols());
        for (Eigen::Index k = 0; k < m.cols(); ++k) r[k] = m(i, k);
        rows.push_back(r);
    }
    return rows;
}

std::string tol_key(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", t);
    return buf;
}

}  // namespace

Json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) parse_fail("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        parse_fail(path.string() + ": " + e.what());
    }
}

void save_json(const std::filesystem::path& path, const Json& value) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    out << value.dump(2) << "\n";
}

LevyModel model_from_json(const Json& j) {
    const int dim = get<int>(j, "dim");
    Matrix a = matrix_of(j, "a");
    if (a.rows() != dim) parse_fail("'a' must be dim x dim");
    const Json& rj = field(j, "rates");
    Rates rates{get<double>(rj, "r"), vector_of(rj, "delta")};
    if (rates.delta.size() != dim) parse_fail("'delta' must have dim entries");

    JumpSpec jumps;
    if (j.contains("jumps")) {
        const Json& jj = j["jumps"];
        const auto kind = get<std::string>(jj, "kind");
        if (kind == "none") {
        } else if (kind == "merton") {
            jumps = JumpSpec(get<double>(jj, "intensity"), MertonNormal{vector_of(jj, "mean"), matrix_of(jj, "cov")});
        } else if (kind == "kou") {
            jumps = JumpSpec(get<double>(jj, "intensity"),
                             KouDoubleExponential{vector_of(jj, "p_up"), vector_of(jj, "eta_up"),
                                                  vector_of(jj, "eta_down")});
        } else if (kind == "empirical") {
            EmpiricalJumps law;
            for (const auto& atom : get<std::vector<std::vector<double>>>(jj, "atoms"))
                law.atoms.push_back(Eigen::Map<const Vector>(atom.data(), static_cast<Eigen::Index>(atom.size())));
            law.probs = get<std::vector<double>>(jj, "probs");
            jumps = JumpSpec(get<double>(jj, "intensity"), std::move(law));
        } else {
            parse_fail("unknown jump kind '" + kind + "'");
        }
    }
    return LevyModel(GaussianPart(std::move(a)), std::move(jumps), std::move(rates));
}

Json to_json(const LevyModel& model) {
    Json j;
    j["dim"] = model.dim();
    j["a"] = json_of(model.gaussian().covariance());
    j["rates"] = {{"r", model.rates().r}, {"delta", json_of(model.rates().delta)}};
    const auto& js = model.jumps();
    Json jj{{"kind", js.kind()}};
    std::visit(
        [&](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, MertonNormal>) {
                jj["intensity"] = js.intensity();
                jj["mean"] = json_of(l.mean);
                jj["cov"] = json_of(l.cov);
            } else if constexpr (std::is_same_v<T, KouDoubleExponential>) {
                jj["intensity"] = js.intensity();
                jj["p_up"] = json_of(l.p_up);
                jj["eta_up"] = json_of(l.eta_up);
                jj["eta_down"] = json_of(l.eta_down);
            } else if constexpr (std::is_same_v<T, EmpiricalJumps>) {
                jj["intensity"] = js.intensity();
                Json atoms = Json::array();
                for (const auto& v : l.atoms) atoms.push_back(json_of(v));
                jj["atoms"] = atoms;
                jj["probs"] = l.probs;
            }
        },
        js.law());
    j["jumps"] = jj;
    j["log_drift"] = json_of(model.log_drift());
    return j;
}

Payoff payoff_from_json(const Json& j) {
    const auto kind = payoff_kind_from_string(get<std::string>(j, "kind"));
    Payoff p;
    switch (kind) {
        case PayoffKind::MinPut: p = Payoff::min_put(get<int>(j, "dim"), get<double>(j, "K")); break;
        case PayoffKind::MaxCall: p = Payoff::max_call(get<int>(j, "dim"), get<double>(j, "K")); break;
        case PayoffKind::IndexPut: p = Payoff::index_put(get<std::vector<double>>(j, "w"), get<double>(j, "K")); break;
        case PayoffKind::SpreadPut:
            p = Payoff::spread_put(get<std::vector<double>>(j, "w"), get<double>(j, "K"));
            break;
        case PayoffKind::IndexCall:
            p = Payoff::index_call(get<std::vector<double>>(j, "w"), get<double>(j, "K"));
            break;
        case PayoffKind::SpreadCall:
            p = Payoff::spread_call(get<std::vector<double>>(j, "w"), get<double>(j, "K"));
            break;
        case PayoffKind::MultiStrike: p = Payoff::multi_strike(get<std::vector<double>>(j, "K")); break;
        case PayoffKind::PowerProduct:
            p = Payoff::power_product(get<int>(j, "dim"), get<double>(j, "K"), get<double>(j, "gamma"));
            break;
        case PayoffKind::Constant:
            p = Payoff::constant(get<int>(j, "dim"), j.contains("c") ? get<double>(j, "c") : get<double>(j, "K"));
            break;
    }
    p.validate();
    return p;
}

Json to_json(const Payoff& p) {
    Json j{{"kind", to_string(p.kind)}, {"dim", p.dim}};
    switch (p.kind) {
        case PayoffKind::MultiStrike: j["K"] = p.strikes; break;
        case PayoffKind::IndexPut:
        case PayoffKind::SpreadPut:
        case PayoffKind::IndexCall:
        case PayoffKind::SpreadCall:
            j["K"] = p.strike;
            j["w"] = p.weights;
            break;
        case PayoffKind::PowerProduct:
            j["K"] = p.strike;
            j["gamma"] = p.gamma;
            break;
        default: j["K"] = p.strike; break;
    }
    return j;
}

SolverConfig solver_config_from_json(const Json& j) {
    SolverConfig c;
    c.n_space = get_or(j, "n_space", c.n_space);
    c.n_time = get_or(j, "n_time", c.n_time);
    c.beta = get_or(j, "beta", c.beta);
    c.epsilon = get_or(j, "epsilon", c.epsilon);
    c.grid.trunc_tol = get_or(j, "trunc_tol", c.grid.trunc_tol);
    c.grid.y_max_tail = get_or(j, "y_max_tail", c.grid.y_max_tail);
    c.solver.penalty_ladder = get_or(j, "penalty_ladder", c.solver.penalty_ladder);
    c.solver.exercise_tol = get_or(j, "exercise_tol", c.solver.exercise_tol);
    return c;
}

Json to_json(const SolverConfig& c) {
    return {{"n_space", c.n_space},
            {"n_time", c.n_time},
            {"beta", c.beta},
            {"epsilon", c.epsilon},
            {"trunc_tol", c.grid.trunc_tol},
            {"y_max_tail", c.grid.y_max_tail},
            {"penalty_ladder", c.solver.penalty_ladder},
            {"exercise_tol", c.solver.exercise_tol}};
}

McConfig mc_config_from_json(const Json& j) {
    McConfig c;
    c.n_paths = get_or(j, "n_paths", c.n_paths);
    c.n_steps = get_or(j, "n_steps", c.n_steps);
    c.seed = get_or(j, "seed", c.seed);
    c.basis_degree = get_or(j, "basis_degree", c.basis_degree);
    return c;
}

Json to_json(const McConfig& c) {
    return {{"n_paths", c.n_paths}, {"n_steps", c.n_steps}, {"seed", c.seed}, {"basis_degree", c.basis_degree}};
}

Estimate estimate_from_json(const Json& j) {
    Estimate e;
    e.mean = get<double>(j, "mean");
    e.std_error = get<double>(j, "stderr");
    e.n_paths = get<long>(j, "n_paths");
    e.seed = get<std::uint64_t>(j, "seed");
    return e;
}

Json to_json(const Estimate& e) {
    return {{"mean", e.mean}, {"stderr", e.std_error}, {"n_paths", e.n_paths}, {"seed", e.seed}};
}

Json to_json(const ValidationReport& r) {
    Json rows = Json::array();
    for (const auto& c : r.conditions)
        rows.push_back({{"name", c.name},
                        {"statement", c.statement},
                        {"exponent", c.exponent},
                        {"status", to_string(c.status)},
                        {"detail", c.detail}});
    return {{"p", r.p}, {"beta", r.beta}, {"epsilon", r.epsilon}, {"all_hold", r.all_hold()}, {"conditions", rows}};
}

Json to_json(const PremiumReport& r) {
    Json sens = Json::object();
    for (const auto& row : r.sensitivity)
        sens[tol_key(row.exercise_tol)] = {{"premium", to_json(row.premium)}, {"identity_gap", row.identity_gap}};
    return {{"inputs", {{"spot", r.spot}, {"T", r.T}}},
            {"american_pide", r.american_pide},
            {"european_pide", r.european_pide},
            {"premium", to_json(r.premium_mc)},
            {"identity_gap", r.identity_gap},
            {"tolerance", r.tolerance},
            {"pass", r.pass},
            {"tolerance_sensitive", r.tolerance_sensitive},
            {"flags", r.tolerance_sensitive ? Json::array({"TOLERANCE_SENSITIVE"}) : Json::array()},
            {"sensitivity", sens},
            {"sensitivity_spread", r.sensitivity_spread},
            {"grid_tolerance", r.grid_tolerance},
            {"diagnostics",
             {{"exit_fraction", r.diagnostics.exit_fraction},
              {"min_integrand", std::isfinite(r.diagnostics.min_integrand) ? Json(r.diagnostics.min_integrand)
                                                                            : Json(nullptr)},
              {"exercised_samples", r.diagnostics.exercised_samples}}}};
}

PremiumReport premium_report_from_json(const Json& j) {
    PremiumReport r;
    const Json& in = field(j, "inputs");
    r.spot = get<std::vector<double>>(in, "spot");
    r.T = get<double>(in, "T");
    r.american_pide = get<double>(j, "american_pide");
    r.european_pide = get<double>(j, "european_pide");
    r.premium_mc = estimate_from_json(field(j, "premium"));
    r.identity_gap = get<double>(j, "identity_gap");
    r.tolerance = get<double>(j, "tolerance");
    r.pass = get<bool>(j, "pass");
    r.tolerance_sensitive = get<bool>(j, "tolerance_sensitive");
    r.sensitivity_spread = get<double>(j, "sensitivity_spread");
    r.grid_tolerance = get<double>(j, "grid_tolerance");
    for (const auto& [key, row] : field(j, "sensitivity").items())
        r.sensitivity.push_back({std::stod(key), estimate_from_json(field(row, "premium")),
                                 get<double>(row, "identity_gap")});
    std::sort(r.sensitivity.begin(), r.sensitivity.end(),
              [](const auto& a, const auto& b) { return a.exercise_tol > b.exercise_tol; });
    const Json& d = field(j, "diagnostics");
    r.diagnostics.exit_fraction = get<double>(d, "exit_fraction");
    r.diagnostics.min_integrand = d["min_integrand"].is_null() ? std::numeric_limits<double>::infinity()
                                                               : get<double>(d, "min_integrand");
    r.diagnostics.exercised_samples = get<long>(d, "exercised_samples");
    return r;
}

void write_solution_csv(const std::filesystem::path& path, const Solution& s, int time_stride, int space_stride) {
    if (time_stride < 1 || space_stride < 1) throw Error(ErrorCode::InvalidArgument, "strides must be positive");
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    const Grid& g = s.grid;
    out.precision(12);
    if (g.dim == 1) out << "t,z,price,u,psi,exercised,jump_field\n";
    else out << "t,z1,z2,price1,price2,u,psi,exercised,jump_field\n";
    int idx[2];
    double z[2];
    for (int k = 0; k <= g.n_time; ++k) {
        if (k % time_stride != 0 && k != g.n_time) continue;
        for (std::size_t j = 0; j < s.psi.size(); ++j) {
            g.index(j, idx);
            bool keep = true;
            for (int i = 0; i < g.dim; ++i) keep = keep && idx[i] % space_stride == 0;
            if (!keep) continue;
            g.coords(j, std::span<double>(z, g.dim));
            out << g.t(k);
            for (int i = 0; i < g.dim; ++i) out << ',' << z[i];
            for (int i = 0; i < g.dim; ++i) out << ',' << std::exp(z[i]);
            out << ',' << s.values(k, j) << ',' << s.psi[j] << ',' << (s.exercised(k, j) ? 1 : 0) << ','
                << s.jump_field(k, j) << '\n';
        }
    }
}

void write_boundary_csv(const std::filesystem::path& path, std::span<const BoundaryPoint> boundary) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    out.precision(12);
    out << "t,boundary_price\n";
    for (const auto& b : boundary) {
        out << b.t << ',';
        if (b.price) out << *b.price;
        out << '\n';
    }
}

void write_convergence_csv(const std::filesystem::path& path, std::span<const ConvergenceRow> rows) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    out.precision(12);
    out << "level,n_space,n_time,n_paths,american,european,premium_gap,complementarity_maxnorm,runtime\n";
    for (const auto& r : rows)
        out << r.level << ',' << r.grid.n_space << ',' << r.grid.n_time << ',' << r.grid.n_paths << ',' << r.american
            << ',' << r.european << ',' << r.premium_gap << ',' << r.complementarity_maxnorm << ',' << r.runtime
            << '\n';
}

}  // namespace amerlevy
