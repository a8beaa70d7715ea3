#pragma once

#include "lbmcf/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lbmcf {

// Bad command line or a command whose config block is missing.
class UsageError : public Error {
public:
    using Error::Error;
};

struct Artifact {
    std::string name;
    std::string content;
};

struct ScenarioResult {
    std::vector<Artifact> artifacts;
    std::vector<std::string> failures;  // invariant violations; fatal under --strict
    std::vector<std::string> notes;
};

const std::vector<std::string>& scenario_commands();

ScenarioResult run_scenario(const ScenarioConfig& config, const std::string& command, std::uint64_t seed);

// Writes every artifact plus manifest.txt; returns the manifest text.
std::string emit_outputs(const ScenarioResult& result, const ScenarioConfig& config, const std::string& command,
                         std::uint64_t seed, const std::string& outdir);

// Smooth test function, identically zero for |x| >= 2r/3. For alpha < 0 it is also cut off at
// |x - x0| >= 1/sqrt(-alpha).
Field identity_test_function(const Grid& grid, const Vec& x0, double alpha);

// One ensemble member: flat for index 0 when include_flat, otherwise a seeded quartic bump.
InitialSpec ensemble_member(const EnsembleSpec& spec, std::uint64_t seed, int index);

}  // namespace lbmcf
