#pragma once

#include "cdal/plants.hpp"
#include "cdal/simulation.hpp"
#include "cdal/solver.hpp"

#include <string>
#include <string_view>

namespace cdal {

/// A parsed JSON configuration. See README.md for the schema.
struct SimConfig {
    enum class Kind { lti, cstr };
    Kind kind = Kind::lti;

    // lti: discrete prediction/plant model with weights, bounds and horizon
    MpcProblem problem;
    Scenario scenario;

    // cstr
    CstrModel cstr;
    CstrScenario cstr_scenario;

    SolverSettings solver;
};

/// Throws ConfigError on malformed JSON, unknown keys, wrong shapes or
/// inconsistent bounds. `source` only labels error messages.
SimConfig parse_config(std::string_view text, const std::string& source = "<config>");

/// Reads and parses a file; an unreadable file is a ConfigError too.
SimConfig load_config(const std::string& path);

}  // namespace cdal
