#include "lbmcf/scenario.hpp"

#include "lbmcf/csv.hpp"
#include "lbmcf/frames.hpp"
#include "lbmcf/knorm.hpp"
#include "lbmcf/shrinker.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace lbmcf {

const std::vector<std::string>& scenario_commands() {
    static const std::vector<std::string> cmds{"run-flow", "check-identities", "density", "shrinker-check",
                                               "knorm",    "eps-probe",        "all"};
    return cmds;
}

Field identity_test_function(const Grid& grid, const Vec& x0, double alpha) {
    // the second factor tracks the width of exp(alpha |P|^2) so both integrals stay O(1)
    const double k = alpha < 0.0 ? 2.0 * std::sqrt(-alpha) : 0.0;
    return sample(grid, [&](const Vec& x) {
        return cutoff_profile(3.0 * x.norm() / grid.r) * cutoff_profile(k * (x - x0).norm());
    });
}

InitialSpec ensemble_member(const EnsembleSpec& spec, std::uint64_t seed, int index) {
    InitialSpec s;
    if (spec.include_flat && index == 0) return s;
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(index));
    auto uni = [&](double a, double b) { return a + (b - a) * (static_cast<double>(rng() >> 11) * 0x1.0p-53); };
    s.kind = "quartic_bump";
    s.a = uni(spec.amp_min, spec.amp_max);
    s.w = uni(spec.w_min, spec.w_max);
    return s;
}

namespace {

struct Setup {
    Grid grid;
    MetricField g;
    Field phi0;
};

Setup setup(const ScenarioConfig& c) {
    Setup s;
    s.grid = make_grid(c);
    s.g = make_metric(c, s.grid);
    validate_metric(s.grid, s.g);
    s.phi0 = make_initial(c.initial, s.grid);
    return s;
}

Trajectory flow_from(const ScenarioConfig& c, const Setup& s, const Field& phi0) {
    return run(s.grid, s.g, phi0, make_flow_config(c, s.grid, s.g, phi0));
}

std::string snapshot_text(const Grid& grid, double t, const Field& f) {
    std::ostringstream os;
    write_snapshot(os, grid, t, f);
    return os.str();
}

std::string fmt(double v) { return CsvWriter::format(v); }

void cmd_run_flow(const ScenarioConfig& c, ScenarioResult& res) {
    Setup s = setup(c);
    Trajectory traj = flow_from(c, s, s.phi0);
    res.artifacts.push_back({"history.csv", history_csv(traj)});
    const std::size_t S = traj.t.size();
    char name[64];
    for (std::size_t i = 0; i < S; ++i) {
        bool keep = c.flow.snapshot_every > 0 ? i % static_cast<std::size_t>(c.flow.snapshot_every) == 0 || i + 1 == S
                                              : i == 0 || i + 1 == S;
        if (!keep) continue;
        std::snprintf(name, sizeof name, "snapshot_%06zu.lbm", i);
        res.artifacts.push_back({name, snapshot_text(traj.grid, traj.t[i], traj.phi[i])});
    }
    for (std::size_t i = 1; i < S; ++i) {
        double V0 = traj.history[i - 1].V, V1 = traj.history[i].V;
        if (V1 > V0 + 1e-8 * std::max(1.0, std::abs(V0))) {
            res.failures.push_back("volume increased between t = " + fmt(traj.t[i - 1]) + " and t = " + fmt(traj.t[i]));
            break;
        }
    }
}

void cmd_identities(const ScenarioConfig& c, std::uint64_t seed, ScenarioResult& res) {
    if (c.metric_conformal > 0.0) res.notes.push_back("identity suite uses the constant part G of the metric");
    CsvWriter w({"test_id", "N", "residual", "measured_order"});
    const char* names[4] = {"divergence", "position", "tangential", "gradient"};
    double r[2][4];
    double mismatch = 0.0;
    int Ns[2] = {c.grid.N, 2 * c.grid.N};
    for (int level = 0; level < 2; ++level) {
        GridConfig gc = c.grid;
        gc.N = Ns[level];
        Grid grid = build_grid(gc);
        MetricField g = constant_metric(grid, c.metric);
        Field phi = make_initial(c.initial, grid);
        Geometry geo = make_geometry(grid, g, phi);
        SectionField Y = random_section(grid, seed);
        Field f = identity_test_function(grid, c.identities.x0, c.identities.alpha);
        IdentityResiduals ir = identity_residuals(geo, Y, f, c.identities.x0);
        const Field* fields[4] = {&ir.divergence, &ir.position, &ir.tangential, &ir.gradient};
        for (int t = 0; t < 4; ++t) r[level][t] = max_abs_region(grid, *fields[t], c.identities.region);
        if (level == 0) mismatch = integral_identity(geo, f, c.identities.x0, c.identities.alpha).rel_mismatch;
    }
    for (int t = 0; t < 4; ++t) {
        double order = (r[0][t] > 0.0 && r[1][t] > 0.0) ? std::log2(r[0][t] / r[1][t]) : std::nan("");
        for (int level = 0; level < 2; ++level)
            w.row_cells({std::string(names[t]), static_cast<long long>(Ns[level]), r[level][t], order});
        // residuals at rounding level have no meaningful order
        if (r[0][t] > 1e-11 && !(order >= 1.8))
            res.failures.push_back(std::string(names[t]) + " identity converges with order " + fmt(order) + " < 1.8");
    }
    w.row_cells({std::string("integral"), static_cast<long long>(Ns[0]), mismatch, std::nan("")});
    if (!(mismatch <= 1e-3)) res.failures.push_back("integral identity mismatch " + fmt(mismatch) + " > 1e-3");
    res.artifacts.push_back({"identities.csv", w.str()});
}

std::vector<std::size_t> density_indices(const Trajectory& traj, double Tprime, int samples) {
    std::vector<std::size_t> ok;
    for (std::size_t i = 1; i + 1 < traj.t.size(); ++i)
        if (traj.t[i + 1] < Tprime) ok.push_back(i);
    if (static_cast<int>(ok.size()) <= samples) return ok;
    std::vector<std::size_t> out;
    for (int j = 0; j < samples; ++j)
        out.push_back(ok[(ok.size() - 1) * static_cast<std::size_t>(j) / static_cast<std::size_t>(samples - 1 > 0 ? samples - 1 : 1)]);
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void cmd_density(const ScenarioConfig& c, ScenarioResult& res) {
    if (!c.density) throw UsageError("density needs a [density] block in the config");
    const DensitySpec& d = *c.density;
    Setup s = setup(c);
    Trajectory traj = flow_from(c, s, s.phi0);
    Probe probe{d.x0, d.Tprime > 0.0 ? d.Tprime : traj.t.back()};
    std::vector<std::size_t> idx = density_indices(traj, probe.Tprime, d.samples);
    if (idx.empty()) throw ValidationError("no sample times strictly before T' with neighbours");
    MonotonicityReport rep = monotonicity_residual(traj, probe, d.cutoff, idx);
    res.artifacts.push_back({"density.csv", density_csv(rep)});
    res.artifacts.push_back({"monotonicity.csv", monotonicity_csv(rep)});
    for (const auto& wmsg : rep.warnings) res.notes.push_back("density: " + wmsg);
    for (const auto& row : rep.rows)
        if (!row.monotone_ok) {
            res.failures.push_back("theta_bar + C tau increased at t = " + fmt(row.t));
            break;
        }
}

void cmd_shrinker(const ScenarioConfig& c, ScenarioResult& res) {
    if (!c.shrinker) throw UsageError("shrinker-check needs a [shrinker] block in the config");
    const ShrinkerSpecBlock& sb = *c.shrinker;
    Setup s = setup(c);
    FlowConfig fc = make_flow_config(c, s.grid, s.g, s.phi0);
    const double span = sb.t_end - sb.t_start;
    fc.steps = std::max<long>(1, static_cast<long>(std::floor(span / fc.dt)));
    fc.cadence = std::max<long>(1, fc.steps / std::max(1, sb.samples - 1));
    Trajectory traj = run(s.grid, s.g, s.phi0, fc);
    std::vector<double> t;
    for (double ti : traj.t) t.push_back(sb.t_start + ti);
    FamilyReport fam = self_similar_family_check(s.grid, s.g, t, traj.phi, sb.tol);
    res.artifacts.push_back({"shrinker.csv", shrinker_csv(s.grid, fam, traj.phi)});
    res.notes.push_back("shrinker: finite time window; ancient and long-lived solutions are not distinguished");
    if (fam.passed) {
        LiouvilleVerdict v = liouville_probe(s.grid, traj.phi.back(), fam);
        res.notes.push_back(std::string("shrinker: Liouville probe ") + (v.consistent ? "consistent" : "inconsistent") +
                            ", fit residual " + fmt(v.fit_residual));
    } else {
        res.notes.push_back("shrinker: family check did not pass (residual " + fmt(fam.residual) + ", spread " +
                            fmt(fam.spread) + "); Liouville probe skipped");
    }
}

Region knorm_region(const ScenarioConfig& c, const Trajectory& traj) {
    const int n = c.grid.n;
    Region V;
    if (c.knorm) {
        V.lo = c.knorm->lo;
        V.hi = c.knorm->hi;
        V.a = c.knorm->a;
        V.b = c.knorm->b;
    } else {
        V.lo = Vec::Constant(n, -0.5 * c.grid.r);
        V.hi = Vec::Constant(n, 0.5 * c.grid.r);
    }
    if (!(V.b > V.a)) {
        const double half = traj.t.size() > 1 ? 0.5 * (traj.t[1] - traj.t[0]) : 0.5;
        V.a = traj.t.front();
        V.b = traj.t.back() + half;
    }
    return V;
}

NormOptions knorm_options(const ScenarioConfig& c, std::uint64_t seed) {
    NormOptions o;
    o.seed = seed;
    if (c.knorm) {
        o.alpha = c.knorm->alpha;
        o.max_holder_nodes = c.knorm->max_holder_nodes;
    }
    return o;
}

void cmd_knorm(const ScenarioConfig& c, std::uint64_t seed, ScenarioResult& res) {
    if (!c.knorm) throw UsageError("knorm needs a [knorm] block in the config");
    Setup s = setup(c);
    Trajectory traj = flow_from(c, s, s.phi0);
    Pair p = pair_from_trajectory(traj);
    KnormReport rep = K3aV(p, knorm_region(c, traj), knorm_options(c, seed), c.knorm->spatial, c.knorm->temporal);
    res.artifacts.push_back({"knorm.csv", knorm_csv(rep)});
    if (rep.non_monotone) res.notes.push_back("knorm: non-monotone bracket encountered on the log grid");
    for (const auto& row : rep.rows)
        if (row.status == KStatus::Unattainable) {
            res.notes.push_back("knorm: no scale in range reaches norm <= 1 at some lattice points");
            break;
        }
}

void cmd_eps(const ScenarioConfig& c, std::uint64_t seed, ScenarioResult& res) {
    if (!c.ensemble) throw UsageError("eps-probe needs an [ensemble] block in the config");
    Setup s = setup(c);
    std::vector<EpsRow> rows;
    int spatial = c.knorm ? c.knorm->spatial : 3, temporal = c.knorm ? c.knorm->temporal : 3;
    for (int i = 0; i < c.ensemble->members; ++i) {
        InitialSpec spec = ensemble_member(*c.ensemble, seed, i);
        Field phi0 = make_initial(spec, s.grid);
        Trajectory traj = flow_from(c, s, phi0);
        std::uint64_t member_seed = seed + static_cast<std::uint64_t>(i);
        rows.push_back(eps_probe_member(traj, member_seed, knorm_region(c, traj), knorm_options(c, member_seed),
                                        spatial, temporal));
    }
    res.artifacts.push_back({"eps_probe.csv", eps_csv(rows)});
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config, const std::string& command, std::uint64_t seed) {
    ScenarioResult res;
    auto guarded = [&](const std::string& name, auto&& fn) {
        try {
            fn();
        } catch (const UsageError&) {
            throw;
        } catch (const ValidationError& e) {
            throw ValidationError(name + ": " + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError(name + ": " + e.what());
        }
    };
    const bool all = command == "all";
    bool known = false;
    for (const auto& c : scenario_commands()) known = known || c == command;
    if (!known) throw UsageError("unknown command '" + command + "'");
    if (all || command == "run-flow") guarded("run-flow", [&] { cmd_run_flow(config, res); });
    if (all || command == "check-identities") guarded("check-identities", [&] { cmd_identities(config, seed, res); });
    if (command == "density" || (all && config.density)) guarded("density", [&] { cmd_density(config, res); });
    if (command == "shrinker-check" || (all && config.shrinker))
        guarded("shrinker-check", [&] { cmd_shrinker(config, res); });
    if (command == "knorm" || (all && config.knorm)) guarded("knorm", [&] { cmd_knorm(config, seed, res); });
    if (command == "eps-probe" || (all && config.ensemble)) guarded("eps-probe", [&] { cmd_eps(config, seed, res); });
    return res;
}

std::string emit_outputs(const ScenarioResult& result, const ScenarioConfig& config, const std::string& command,
                         std::uint64_t seed, const std::string& outdir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) throw Error("cannot create output directory " + outdir + ": " + ec.message());
    std::ostringstream m;
    m << "LBMCF-MANIFEST v1\n";
    m << "command " << command << "\n";
    m << "config_hash " << hex64(config.hash) << "\n";
    m << "seed " << seed << "\n";
    for (const auto& a : result.artifacts) {
        std::ofstream os(fs::path(outdir) / a.name, std::ios::binary);
        os << a.content;
        if (!os) throw Error("failed to write " + (fs::path(outdir) / a.name).string());
        m << "artifact " << a.name << " " << hex64(fnv1a(a.content)) << " " << a.content.size() << " config_hash "
          << hex64(config.hash) << "\n";
    }
    for (const auto& f : result.failures) m << "failure " << f << "\n";
    for (const auto& n : result.notes) m << "note " << n << "\n";
    std::string text = m.str();
    std::ofstream os(fs::path(outdir) / "manifest.txt", std::ios::binary);
    os << text;
    if (!os) throw Error("failed to write manifest");
    return text;
}

}  // namespace lbmcf
