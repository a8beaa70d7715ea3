#pragma once

#include "lbmcf/density.hpp"
#include "lbmcf/flow.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace lbmcf {

// Raised for malformed files; the message carries "path:line: ".
class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

enum class ThetaHatMode { Average, Value };

struct InitialSpec {
    std::string kind = "flat";  // flat, quadratic, quartic_bump, sine
    Mat A;
    double b = 0.0;
    double a = 0.0, w = 1.0;  // quartic_bump: a |x|^4 exp(-|x|^2 / w^2)
    double k = 1.0, amp = 0.0;  // sine: amp sum_i sin(k x_i)
};

struct FlowSpec {
    ThetaHatMode theta_hat_mode = ThetaHatMode::Average;
    double theta_hat = 0.0;
    double cfl = 0.4;
    double dt = 0.0;
    double T_end = 0.01;
    long cadence = 1;
    long snapshot_every = 0;  // 0: first and last recorded samples only
    double maxF_bound = 1e6;
    Scheme scheme = Scheme::Euler;
};

struct DensitySpec {
    Vec x0;
    double Tprime = 0.0;
    CutoffSpec cutoff;
    int samples = 50;
};

struct ShrinkerSpecBlock {
    double t_start = -2.0;
    double t_end = -1.0;
    int samples = 5;
    double tol = 1e-6;
};

struct KnormSpec {
    Vec lo, hi;
    double a = 0.0, b = 0.0;  // b <= a selects the whole trajectory
    double alpha = 0.5;
    int spatial = 3, temporal = 3;
    std::size_t max_holder_nodes = 4096;
};

struct EnsembleSpec {
    int members = 10;
    bool include_flat = true;
    double amp_min = 0.05, amp_max = 0.3;
    double w_min = 0.3, w_max = 0.6;
};

struct IdentitySpec {
    Vec x0;
    double alpha = -2.5;
    double region = 0.25;  // pointwise maxima over |x_i| <= region * r
};

struct ScenarioConfig {
    std::string path;
    std::uint64_t hash = 0;
    GridConfig grid;
    Mat metric;
    double metric_conformal = 0.0;  // g = (1 + c|x|^2) G when nonzero
    InitialSpec initial;
    FlowSpec flow;
    IdentitySpec identities;
    std::optional<DensitySpec> density;
    std::optional<ShrinkerSpecBlock> shrinker;
    std::optional<KnormSpec> knorm;
    std::optional<EnsembleSpec> ensemble;
};

ScenarioConfig parse_config_text(const std::string& text, const std::string& path = "<string>");
ScenarioConfig parse_config(const std::string& path);

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

Grid make_grid(const ScenarioConfig& c);
MetricField make_metric(const ScenarioConfig& c, const Grid& grid);
Field make_initial(const InitialSpec& spec, const Grid& grid);
FlowConfig make_flow_config(const ScenarioConfig& c, const Grid& grid, const MetricField& g, const Field& phi0);

}  // namespace lbmcf
