#include "amerlevy/error.hpp"
#include "amerlevy/io.hpp"
#include "support/fixtures.hpp"
#include "support/psi_sampling.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace amerlevy;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "amerlevy_io_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an amerlevy::Error";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Io, ModelsRoundTrip) {
    for (const auto& name : fixture::shipped_models()) {
        auto m = fixture::model(name);
        const Json j = to_json(m);
        auto back = model_from_json(j);
        EXPECT_EQ(to_json(back), j) << name;
        EXPECT_EQ(back.log_drift(), m.log_drift()) << name;
    }
}

TEST(Io, EmpiricalModelRoundTrips) {
    EmpiricalJumps law{{Vector::Constant(1, -0.2), Vector::Constant(1, 0.1)}, {0.25, 0.75}};
    LevyModel m(GaussianPart(Matrix::Constant(1, 1, 0.04)), JumpSpec(0.5, law), Rates{0.03, Vector::Zero(1)});
    EXPECT_EQ(to_json(model_from_json(to_json(m))), to_json(m));
}

TEST(Io, PayoffsRoundTrip) {
    for (const auto& c : psi_check::catalog()) EXPECT_EQ(to_json(payoff_from_json(to_json(c.payoff))), to_json(c.payoff)) << c.name;
}

TEST(Io, ConfigsRoundTrip) {
    SolverConfig s;
    s.n_space = 1601;
    s.solver.penalty_ladder = {10.0, 100.0};
    EXPECT_EQ(to_json(solver_config_from_json(to_json(s))), to_json(s));
    McConfig m;
    m.seed = 123456789012345ULL;
    EXPECT_EQ(to_json(mc_config_from_json(to_json(m))), to_json(m));
    Estimate e{1.25, 0.5, 1000, 42};
    auto back = estimate_from_json(to_json(e));
    EXPECT_EQ(back.mean, e.mean);
    EXPECT_EQ(back.std_error, e.std_error);
    EXPECT_EQ(to_json(e)["stderr"], 0.5);
}

TEST(Io, PremiumReportRoundTripsThroughFile) {
    PremiumReport r;
    r.spot = {100.0};
    r.T = 1.0;
    r.american_pide = 6.08;
    r.european_pide = 5.57;
    r.premium_mc = {0.51, 0.002, 100000, 7};
    r.identity_gap = 0.003;
    r.tolerance = 0.0304;
    r.pass = true;
    r.sensitivity = {{1e-5, {0.5, 0.002, 100000, 7}, 0.01}, {1e-6, {0.51, 0.002, 100000, 7}, 0.003},
                     {1e-7, {0.511, 0.002, 100000, 7}, 0.002}};
    r.sensitivity_spread = 0.008;
    r.grid_tolerance = 1e-3;
    r.diagnostics = {1e-5, 0.2, 12345};
    const auto path = temp_file("premium.json");
    save_json(path, to_json(r));
    const Json j = load_json(path);
    EXPECT_EQ(j, to_json(r));
    EXPECT_EQ(to_json(premium_report_from_json(j)), j);
}

TEST(Io, MalformedInputIsAParseError) {
    const auto path = temp_file("bad.json");
    std::ofstream(path) << "{ \"dim\": 1, ";
    EXPECT_EQ(code_of([&] { load_json(path); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([&] { load_json(temp_file("missing.json")); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([&] { model_from_json(Json{{"dim", 1}}); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([&] { model_from_json(Json::parse(R"({"dim":1,"a":[[0.04]],"rates":{"r":0.05,"delta":[0]},
        "jumps":{"kind":"levy-stable"}})")); }),
              ErrorCode::ParseError);
    EXPECT_EQ(code_of([&] { payoff_from_json(Json{{"kind", "min_put"}, {"dim", "two"}, {"K", 100}}); }),
              ErrorCode::ParseError);
}

TEST(Io, SolutionCsvHasDocumentedColumns) {
    auto m = fixture::model("bs");
    auto p = fixture::payoff("put");
    std::vector<double> spot{100.0};
    Grid g = build_grid(m, p, spot, 1.0, 101, 20, 8.0);
    auto op = assemble(m, g);
    auto s = solve_american_penalty(m, p, g, op);
    const auto path = temp_file("solution.csv");
    write_solution_csv(path, s, 10, 1);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "t,z,price,u,psi,exercised,jump_field");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    EXPECT_EQ(rows, 3 * 101);
    const auto bpath = temp_file("boundary.csv");
    write_boundary_csv(bpath, free_boundary(s, p));
    std::ifstream bin(bpath);
    std::getline(bin, header);
    EXPECT_EQ(header, "t,boundary_price");
}
