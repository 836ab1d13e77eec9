#ifndef AMERLEVY_CLI_HPP
#define AMERLEVY_CLI_HPP

#include "amerlevy/monte_carlo.hpp"
#include "amerlevy/pide_solver.hpp"
#include "amerlevy/premium.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace amerlevy {

/// Stable exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitDomain = 1, kExitUsage = 2 };

struct RunConfig {
    std::filesystem::path model_path;
    std::filesystem::path payoff_path;
    SolverConfig solver;
    McConfig mc;
    std::vector<double> spot;
    double T = 1.0;
    std::optional<std::filesystem::path> out_dir;
    /// 0 defers to AMERLEVY_THREADS, then the hardware count.
    int threads = 0;
};

/// Prints the calibrated drift, the martingale checks and the integrability table; 0 iff all conditions hold.
int cmd_validate(const RunConfig& cfg, std::ostream& out);

enum class PriceMethod { Pide, Mc, Both };

/// Prices JSON on stdout; with an output directory also american.csv and european.csv.
int cmd_price(const RunConfig& cfg, PriceMethod method, std::ostream& out);

/// Premium report JSON on stdout; with an output directory premium.json, american.csv and, for d = 1, boundary.csv.
int cmd_premium(const RunConfig& cfg, std::ostream& out);

/// Convergence rows on stdout and convergence.csv.
int cmd_converge(const RunConfig& cfg, const std::vector<ConvergenceLevel>& levels, std::ostream& out);

/// Parses arguments and dispatches; errors go to `err` and map onto ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace amerlevy

#endif  // AMERLEVY_CLI_HPP
