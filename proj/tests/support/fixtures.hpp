#ifndef AMERLEVY_TESTS_FIXTURES_HPP
#define AMERLEVY_TESTS_FIXTURES_HPP

#include "amerlevy/io.hpp"

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

namespace fixture {

inline std::filesystem::path config_dir() { return AMERLEVY_CONFIG_DIR; }

inline amerlevy::LevyModel model(const std::string& name) {
    return amerlevy::model_from_json(amerlevy::load_json(config_dir() / "models" / (name + ".json")));
}

/// Specs kept to exercise validation failures; never priced.
inline amerlevy::LevyModel rejected_model(const std::string& name) {
    return amerlevy::model_from_json(amerlevy::load_json(config_dir() / "rejected" / (name + ".json")));
}

inline amerlevy::Payoff payoff(const std::string& name) {
    return amerlevy::payoff_from_json(amerlevy::load_json(config_dir() / "payoffs" / (name + ".json")));
}

inline amerlevy::SolverConfig solver(const std::string& name) {
    return amerlevy::solver_config_from_json(amerlevy::load_json(config_dir() / "solver" / (name + ".json")));
}

/// Every model spec shipped under configs/models.
inline std::vector<std::string> shipped_models() {
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(config_dir() / "models"))
        if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace fixture

#endif  // AMERLEVY_TESTS_FIXTURES_HPP
