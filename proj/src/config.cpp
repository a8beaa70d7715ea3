#include "lbmcf/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace lbmcf {

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Ctx {
    std::string path;
    int line = 0;
    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(path + ":" + std::to_string(line) + ": " + msg);
    }
};

double to_double(const Ctx& c, const std::string& key, const std::string& v) {
    std::istringstream is(v);
    double x;
    std::string rest;
    if (!(is >> x) || (is >> rest)) c.fail("key '" + key + "' expects a number, got '" + v + "'");
    if (!std::isfinite(x)) c.fail("key '" + key + "' must be finite");
    return x;
}

long to_long(const Ctx& c, const std::string& key, const std::string& v) {
    double x = to_double(c, key, v);
    if (x != std::floor(x) || std::abs(x) > 1e15) c.fail("key '" + key + "' expects an integer, got '" + v + "'");
    return static_cast<long>(x);
}

std::vector<double> to_list(const Ctx& c, const std::string& key, const std::string& v) {
    std::istringstream is(v);
    std::vector<double> out;
    std::string tok;
    while (is >> tok) out.push_back(to_double(c, key, tok));
    if (out.empty()) c.fail("key '" + key + "' expects a list of numbers");
    return out;
}

// rows separated by ',', entries by spaces
Mat to_matrix(const Ctx& c, const std::string& key, const std::string& v) {
    std::vector<std::vector<double>> rows;
    std::stringstream ss(v);
    std::string row;
    while (std::getline(ss, row, ',')) rows.push_back(to_list(c, key, row));
    const std::size_t n = rows.size();
    if (n < 1 || n > 3) c.fail("key '" + key + "' expects a 1x1 to 3x3 matrix");
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) c.fail("key '" + key + "' is not a square matrix");
        for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

bool to_bool(const Ctx& c, const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    c.fail("key '" + key + "' expects true or false");
}

Vec to_vec(const Ctx& c, const std::string& key, const std::string& v) {
    std::vector<double> l = to_list(c, key, v);
    if (l.size() > 3) c.fail("key '" + key + "' has more than 3 components");
    Vec out(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) out(i) = l[i];
    return out;
}

using Handler = std::function<void(const Ctx&, const std::string&, const std::string&)>;

}  // namespace

ScenarioConfig parse_config_text(const std::string& text, const std::string& path) {
    ScenarioConfig cfg;
    cfg.path = path;
    cfg.hash = fnv1a(text);
    Ctx ctx{path, 0};

    bool have_n = false, have_N = false, have_grid = false;
    int metric_line = 0, quadratic_line = 0;
    std::string metric_type = "constant";
    std::map<std::string, int> section_line;
    std::set<std::string> seen;

    std::map<std::string, std::map<std::string, Handler>> table;
    auto& grid = table["grid"];
    grid["n"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.grid.n = static_cast<int>(to_long(c, k, v));
        have_n = true;
    };
    grid["N"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.grid.N = static_cast<int>(to_long(c, k, v));
        have_N = true;
    };
    grid["r"] = [&](const Ctx& c, const std::string& k, const std::string& v) { cfg.grid.r = to_double(c, k, v); };
    grid["r_prime"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.grid.r_prime = to_double(c, k, v);
    };
    grid["bc"] = [&](const Ctx& c, const std::string&, const std::string& v) {
        try {
            cfg.grid.bc = bc_from_string(v);
        } catch (const Error& e) {
            c.fail(e.what());
        }
    };

    auto& metric = table["metric"];
    metric["type"] = [&](const Ctx& c, const std::string&, const std::string& v) {
        if (v != "constant" && v != "conformal") c.fail("unknown metric type '" + v + "' (constant, conformal)");
        metric_type = v;
    };
    metric["G"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.metric = to_matrix(c, k, v);
        metric_line = c.line;
    };
    metric["c"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.metric_conformal = to_double(c, k, v);
    };

    auto& init = table["initial"];
    init["kind"] = [&](const Ctx& c, const std::string&, const std::string& v) {
        if (v != "flat" && v != "quadratic" && v != "quartic_bump" && v != "sine")
            c.fail("unknown initial potential '" + v + "' (flat, quadratic, quartic_bump, sine)");
        cfg.initial.kind = v;
    };
    init["A"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.initial.A = to_matrix(c, k, v);
        quadratic_line = c.line;
    };
    init["b"] = [&](const Ctx& c, const std::string& k, const std::string& v) { cfg.initial.b = to_double(c, k, v); };
    init["a"] = [&](const Ctx& c, const std::string& k, const std::string& v) { cfg.initial.a = to_double(c, k, v); };
    init["w"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.initial.w = to_double(c, k, v);
        if (!(cfg.initial.w > 0.0)) c.fail("key 'w' must be positive");
    };
    init["k"] = [&](const Ctx& c, const std::string& k, const std::string& v) { cfg.initial.k = to_double(c, k, v); };
    init["amp"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.initial.amp = to_double(c, k, v);
    };

    auto& flow = table["flow"];
    flow["theta_hat"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        if (v == "average") {
            cfg.flow.theta_hat_mode = ThetaHatMode::Average;
        } else {
            cfg.flow.theta_hat_mode = ThetaHatMode::Value;
            cfg.flow.theta_hat = to_double(c, k, v);
        }
    };
    flow["cfl"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.flow.cfl = to_double(c, k, v);
        if (!(cfg.flow.cfl > 0.0)) c.fail("key 'cfl' must be positive");
    };
    flow["dt"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.flow.dt = to_double(c, k, v);
        if (cfg.flow.dt < 0.0) c.fail("key 'dt' must be >= 0");
    };
    flow["T_end"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.flow.T_end = to_double(c, k, v);
        if (!(cfg.flow.T_end > 0.0)) c.fail("key 'T_end' must be positive");
    };
    flow["cadence"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.flow.cadence = to_long(c, k, v);
        if (cfg.flow.cadence < 1) c.fail("key 'cadence' must be >= 1");
    };
    flow["snapshot_every"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.flow.snapshot_every = to_long(c, k, v);
        if (cfg.flow.snapshot_every < 0) c.fail("key 'snapshot_every' must be >= 0");
    };
    flow["maxF_bound"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.flow.maxF_bound = to_double(c, k, v);
        if (!(cfg.flow.maxF_bound > 0.0)) c.fail("key 'maxF_bound' must be positive");
    };
    flow["scheme"] = [&](const Ctx& c, const std::string&, const std::string& v) {
        if (v == "euler")
            cfg.flow.scheme = Scheme::Euler;
        else if (v == "rk2")
            cfg.flow.scheme = Scheme::RK2;
        else
            c.fail("unknown scheme '" + v + "' (euler, rk2)");
    };

    auto& ident = table["identities"];
    ident["x0"] = [&](const Ctx& c, const std::string& k, const std::string& v) { cfg.identities.x0 = to_vec(c, k, v); };
    ident["alpha"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.identities.alpha = to_double(c, k, v);
    };
    ident["region"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        cfg.identities.region = to_double(c, k, v);
        if (!(cfg.identities.region > 0.0 && cfg.identities.region <= 1.0)) c.fail("key 'region' must lie in (0, 1]");
    };

    auto& dens = table["density"];
    auto D = [&]() -> DensitySpec& {
        if (!cfg.density) cfg.density.emplace();
        return *cfg.density;
    };
    dens["x0"] = [&](const Ctx& c, const std::string& k, const std::string& v) { D().x0 = to_vec(c, k, v); };
    dens["Tprime"] = [&](const Ctx& c, const std::string& k, const std::string& v) { D().Tprime = to_double(c, k, v); };
    dens["cutoff"] = [&](const Ctx& c, const std::string&, const std::string& v) {
        if (v == "paper")
            D().cutoff.kind = CutoffKind::Paper;
        else if (v == "family")
            D().cutoff.kind = CutoffKind::Family;
        else if (v == "none")
            D().cutoff.kind = CutoffKind::None;
        else
            c.fail("unknown cutoff '" + v + "' (paper, family, none)");
    };
    dens["j"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        D().cutoff.j = static_cast<int>(to_long(c, k, v));
        if (D().cutoff.j < 1) c.fail("key 'j' must be >= 1");
    };
    dens["samples"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        D().samples = static_cast<int>(to_long(c, k, v));
        if (D().samples < 1) c.fail("key 'samples' must be >= 1");
    };

    auto& shr = table["shrinker"];
    auto S = [&]() -> ShrinkerSpecBlock& {
        if (!cfg.shrinker) cfg.shrinker.emplace();
        return *cfg.shrinker;
    };
    shr["t_start"] = [&](const Ctx& c, const std::string& k, const std::string& v) { S().t_start = to_double(c, k, v); };
    shr["t_end"] = [&](const Ctx& c, const std::string& k, const std::string& v) { S().t_end = to_double(c, k, v); };
    shr["samples"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        S().samples = static_cast<int>(to_long(c, k, v));
        if (S().samples < 1) c.fail("key 'samples' must be >= 1");
    };
    shr["tol"] = [&](const Ctx& c, const std::string& k, const std::string& v) { S().tol = to_double(c, k, v); };

    auto& kn = table["knorm"];
    auto K = [&]() -> KnormSpec& {
        if (!cfg.knorm) cfg.knorm.emplace();
        return *cfg.knorm;
    };
    kn["lo"] = [&](const Ctx& c, const std::string& k, const std::string& v) { K().lo = to_vec(c, k, v); };
    kn["hi"] = [&](const Ctx& c, const std::string& k, const std::string& v) { K().hi = to_vec(c, k, v); };
    kn["a"] = [&](const Ctx& c, const std::string& k, const std::string& v) { K().a = to_double(c, k, v); };
    kn["b"] = [&](const Ctx& c, const std::string& k, const std::string& v) { K().b = to_double(c, k, v); };
    kn["alpha"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        K().alpha = to_double(c, k, v);
        if (!(K().alpha > 0.0 && K().alpha < 1.0)) c.fail("key 'alpha' must lie in (0, 1)");
    };
    kn["spatial"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        K().spatial = static_cast<int>(to_long(c, k, v));
        if (K().spatial < 1) c.fail("key 'spatial' must be >= 1");
    };
    kn["temporal"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        K().temporal = static_cast<int>(to_long(c, k, v));
        if (K().temporal < 1) c.fail("key 'temporal' must be >= 1");
    };
    kn["max_holder_nodes"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        long m = to_long(c, k, v);
        if (m < 2) c.fail("key 'max_holder_nodes' must be >= 2");
        K().max_holder_nodes = static_cast<std::size_t>(m);
    };

    auto& ens = table["ensemble"];
    auto E = [&]() -> EnsembleSpec& {
        if (!cfg.ensemble) cfg.ensemble.emplace();
        return *cfg.ensemble;
    };
    ens["members"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        E().members = static_cast<int>(to_long(c, k, v));
        if (E().members < 1) c.fail("key 'members' must be >= 1");
    };
    ens["include_flat"] = [&](const Ctx& c, const std::string& k, const std::string& v) {
        E().include_flat = to_bool(c, k, v);
    };
    ens["amp_min"] = [&](const Ctx& c, const std::string& k, const std::string& v) { E().amp_min = to_double(c, k, v); };
    ens["amp_max"] = [&](const Ctx& c, const std::string& k, const std::string& v) { E().amp_max = to_double(c, k, v); };
    ens["w_min"] = [&](const Ctx& c, const std::string& k, const std::string& v) { E().w_min = to_double(c, k, v); };
    ens["w_max"] = [&](const Ctx& c, const std::string& k, const std::string& v) { E().w_max = to_double(c, k, v); };

    std::string section;
    std::istringstream in(text);
    std::string raw;
    while (std::getline(in, raw)) {
        ++ctx.line;
        std::string line = raw;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') ctx.fail("malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!table.count(section)) ctx.fail("unknown section [" + section + "]");
            if (section_line.count(section)) ctx.fail("duplicate section [" + section + "]");
            section_line[section] = ctx.line;
            if (section == "grid") have_grid = true;
            // a bare optional section enables its defaults
            if (section == "density") D();
            if (section == "shrinker") S();
            if (section == "knorm") K();
            if (section == "ensemble") E();
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) ctx.fail("expected 'key = value'");
        if (section.empty()) ctx.fail("key outside of any section");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        auto& keys = table[section];
        auto it = keys.find(key);
        if (it == keys.end()) ctx.fail("unknown key '" + key + "' in section [" + section + "]");
        if (!seen.insert(section + "." + key).second) ctx.fail("duplicate key '" + key + "'");
        if (value.empty()) ctx.fail("key '" + key + "' has no value");
        it->second(ctx, key, value);
    }

    ctx.line = have_grid ? section_line["grid"] : ctx.line;
    if (!have_grid) ctx.fail("missing section [grid]");
    if (!have_n) ctx.fail("missing key 'n' in section [grid]");
    if (!have_N) ctx.fail("missing key 'N' in section [grid]");
    const int n = cfg.grid.n;
    if (n < 1 || n > 3) ctx.fail("key 'n' must be 1, 2 or 3");
    if (cfg.grid.N < 8) ctx.fail("key 'N' must be at least 8");
    if (!(cfg.grid.r > 0.0) || !(cfg.grid.r_prime > 0.0)) ctx.fail("radii must be positive");

    if (cfg.metric.size() == 0) {
        cfg.metric = Mat::Identity(n, n);
    } else {
        ctx.line = metric_line;
        if (cfg.metric.rows() != n) ctx.fail("metric G must be " + std::to_string(n) + "x" + std::to_string(n));
        if ((cfg.metric - cfg.metric.transpose()).cwiseAbs().maxCoeff() > 0.0) ctx.fail("metric G is not symmetric");
        if (!(min_eigenvalue(cfg.metric) > 0.0)) ctx.fail("metric G is not positive definite");
    }
    if (metric_type == "constant") cfg.metric_conformal = 0.0;
    if (cfg.metric_conformal < 0.0) {
        ctx.line = section_line["metric"];
        ctx.fail("conformal coefficient c must be >= 0");
    }

    if (cfg.initial.kind == "quadratic") {
        ctx.line = quadratic_line ? quadratic_line : section_line["initial"];
        if (cfg.initial.A.size() == 0) ctx.fail("quadratic potential needs key 'A'");
        if (cfg.initial.A.rows() != n) ctx.fail("quadratic A must be " + std::to_string(n) + "x" + std::to_string(n));
        if ((cfg.initial.A - cfg.initial.A.transpose()).cwiseAbs().maxCoeff() > 0.0)
            ctx.fail("quadratic A is not symmetric");
    }

    auto check_point = [&](Vec& x, const std::string& sec) {
        ctx.line = section_line[sec];
        if (x.size() == 0) x = Vec::Zero(n);
        if (x.size() != n) ctx.fail("point in [" + sec + "] must have " + std::to_string(n) + " components");
        for (int a = 0; a < n; ++a)
            if (std::abs(x(a)) > cfg.grid.r) ctx.fail("point in [" + sec + "] lies outside the box");
    };
    check_point(cfg.identities.x0, "identities");
    if (cfg.density) check_point(cfg.density->x0, "density");
    if (cfg.shrinker) {
        ctx.line = section_line["shrinker"];
        if (!(cfg.shrinker->t_start < cfg.shrinker->t_end && cfg.shrinker->t_end < 0.0))
            ctx.fail("shrinker window needs t_start < t_end < 0");
    }
    if (cfg.knorm) {
        ctx.line = section_line["knorm"];
        auto& k = *cfg.knorm;
        if (k.lo.size() == 0) k.lo = Vec::Constant(n, -0.5 * cfg.grid.r);
        if (k.hi.size() == 0) k.hi = Vec::Constant(n, 0.5 * cfg.grid.r);
        if (k.lo.size() != n || k.hi.size() != n) ctx.fail("knorm box must have " + std::to_string(n) + " components");
        for (int a = 0; a < n; ++a)
            if (!(k.lo(a) < k.hi(a))) ctx.fail("knorm box is empty");
    }
    if (cfg.ensemble) {
        ctx.line = section_line["ensemble"];
        auto& e = *cfg.ensemble;
        if (!(e.amp_min <= e.amp_max) || !(0.0 < e.w_min && e.w_min <= e.w_max)) ctx.fail("ensemble ranges are invalid");
    }
    return cfg;
}

ScenarioConfig parse_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str(), path);
}

Grid make_grid(const ScenarioConfig& c) { return build_grid(c.grid); }

MetricField make_metric(const ScenarioConfig& c, const Grid& grid) {
    if (c.metric_conformal > 0.0) return conformal_metric(grid, c.metric, c.metric_conformal);
    return constant_metric(grid, c.metric);
}

Field make_initial(const InitialSpec& s, const Grid& grid) {
    if (s.kind == "flat") return Field(grid.size(), 0.0);
    if (s.kind == "quadratic") return sample(grid, [&](const Vec& x) { return s.b + x.dot(s.A * x); });
    if (s.kind == "quartic_bump")
        return sample(grid, [&](const Vec& x) {
            double r2 = x.squaredNorm();
            return s.a * r2 * r2 * std::exp(-r2 / (s.w * s.w));
        });
    if (s.kind == "sine")
        return sample(grid, [&](const Vec& x) {
            double v = 0.0;
            for (int a = 0; a < x.size(); ++a) v += std::sin(s.k * x(a));
            return s.amp * v;
        });
    throw ValidationError("unknown initial potential '" + s.kind + "'");
}

FlowConfig make_flow_config(const ScenarioConfig& c, const Grid& grid, const MetricField& g, const Field& phi0) {
    FlowConfig f;
    CurvaturePack p0 = compute_curvature(grid, g, phi0);
    f.theta_hat = c.flow.theta_hat_mode == ThetaHatMode::Average ? average_angle(grid, g, p0) : c.flow.theta_hat;
    f.cfl = c.flow.cfl;
    f.dt = c.flow.dt > 0.0 ? c.flow.dt : stable_dt(grid, p0.eta, c.flow.cfl);
    f.steps = std::max<long>(1, std::lround(c.flow.T_end / f.dt));
    f.cadence = c.flow.cadence;
    f.maxF_bound = c.flow.maxF_bound;
    f.scheme = c.flow.scheme;
    return f;
}

}  // namespace lbmcf
