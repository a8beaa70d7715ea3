#include "lbmcf/density.hpp"

#include "lbmcf/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

namespace lbmcf {

namespace {

double clamp01(double u) { return std::clamp(u, 0.0, 1.0); }

}  // namespace

double cutoff_profile(double s, double lo) {
    double u = clamp01(s - lo);
    return 1.0 - u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double cutoff_profile_d1(double s, double lo) {
    double u = s - lo;
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return -30.0 * u * u * (1.0 - u) * (1.0 - u);
}

double cutoff_profile_d2(double s, double lo) {
    double u = s - lo;
    if (u <= 0.0 || u >= 1.0) return 0.0;
    return -60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
}

double cutoff_Cprime() {
    // On [0, 1/2] with v = 1 - 2u the maximum of |S'| + |S''| sits at the root of v^3 - 6v^2 - v + 2 near 0.52.
    double v = 0.5;
    for (int it = 0; it < 50; ++it) v -= (v * v * v - 6.0 * v * v - v + 2.0) / (3.0 * v * v - 12.0 * v - 1.0);
    double u = 0.5 * (1.0 - v);
    return std::abs(cutoff_profile_d1(1.0 + u)) + std::abs(cutoff_profile_d2(1.0 + u));
}

double cutoff_Cdoubleprime(int n) {
    double half = 0.5 * n;
    return std::pow(4.0, n + 3) / std::pow(std::numbers::pi, half) * std::pow(half, half) * std::exp(-half);
}

double lambda_g(const MetricField& g) { return std::sqrt(metric_floor(g)); }

Field translate_slice(const Grid& grid, const Field& phi, const Field& ref, const Vec& x0) {
    const int n = grid.n;
    double v0 = interpolate(grid, ref, x0);
    Vec grad(n);
    for (int a = 0; a < n; ++a) grad(a) = interpolate(grid, diff(grid, ref, {a}), x0);
    Field out(phi.size());
    for (std::size_t k = 0; k < phi.size(); ++k) out[k] = phi[k] - v0 - grad.dot(grid.point(k) - x0);
    return out;
}

Trajectory translate_A_Q(const Trajectory& traj, const Probe& probe) {
    if (traj.t.empty()) throw ValidationError("empty trajectory");
    if (probe.Tprime < traj.t.front()) throw ValidationError("T' lies before the trajectory span");
    Field ref;
    if (probe.Tprime >= traj.t.back()) {
        ref = traj.phi.back();
    } else {
        auto it = std::upper_bound(traj.t.begin(), traj.t.end(), probe.Tprime);
        std::size_t i1 = static_cast<std::size_t>(it - traj.t.begin());
        std::size_t i0 = i1 - 1;
        double w = (probe.Tprime - traj.t[i0]) / (traj.t[i1] - traj.t[i0]);
        ref.resize(traj.phi[i0].size());
        for (std::size_t k = 0; k < ref.size(); ++k) ref[k] = (1.0 - w) * traj.phi[i0][k] + w * traj.phi[i1][k];
    }
    const Grid& grid = traj.grid;
    const int n = grid.n;
    double v0 = interpolate(grid, ref, probe.x0);
    Vec grad(n);
    for (int a = 0; a < n; ++a) grad(a) = interpolate(grid, diff(grid, ref, {a}), probe.x0);
    Field affine(grid.size());
    for (std::size_t k = 0; k < affine.size(); ++k) affine[k] = v0 + grad.dot(grid.point(k) - probe.x0);
    Trajectory out = traj;
    for (auto& phi : out.phi)
        for (std::size_t k = 0; k < phi.size(); ++k) phi[k] -= affine[k];
    return out;
}

Field cutoff_field(const Grid& grid, const MetricField& g, const Field& P2, const CutoffSpec& spec) {
    Field f(P2.size(), 1.0);
    if (spec.kind == CutoffKind::None) return f;
    const double lam = lambda_g(g);
    for (std::size_t k = 0; k < f.size(); ++k) {
        double p = std::sqrt(std::max(P2[k], 0.0));
        f[k] = spec.kind == CutoffKind::Paper ? cutoff_profile(4.0 * p / (lam * grid.r))
                                              : cutoff_profile(p / (2.0 * lam), static_cast<double>(spec.j));
    }
    return f;
}

double theta_general(const Grid& grid, const MetricField& g, const Field& phi, double tau, const Field& psi,
                     const Field& f, double k_exp) {
    if (!(tau > 0.0)) throw ValidationError("tau must be positive");
    CurvaturePack pack = compute_curvature(grid, g, phi);
    Field w(grid.size());
    const double pre = std::pow(4.0 * std::numbers::pi * tau, -k_exp);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = pre * std::exp(-psi[k] / (4.0 * tau)) * f[k];
    return ball_volume(grid.n, grid.r_prime) * integrate_x(grid, w, g, pack.abs_zeta);
}

double density_normalization(const Grid& grid, const MetricField& g, const Vec& x0) {
    Mat g0 = interpolate_metric(grid, g, x0);
    return std::pow(2.0, grid.n) / std::sqrt(g0.determinant());
}

namespace {

Field heat_kernel(const Field& P2, double tau, int n) {
    Field w(P2.size());
    const double pre = std::pow(4.0 * std::numbers::pi * tau, -0.5 * n);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = pre * std::exp(-P2[k] / (4.0 * tau));
    return w;
}

}  // namespace

double density_bar_slice(const Grid& grid, const MetricField& g, const Field& phi, const Vec& x0, double tau,
                         const CutoffSpec& cutoff, bool literal) {
    if (!(tau > 0.0)) throw ValidationError("density needs t < T'");
    CurvaturePack pack = compute_curvature(grid, g, phi);
    SectionField P = position_section(grid, phi, x0);
    Field P2 = norm2(P, g);
    Field f = cutoff_field(grid, g, P2, cutoff);
    Field w = heat_kernel(P2, tau, grid.n);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] *= f[k];
    double I = integrate_x(grid, w, g, pack.abs_zeta);
    if (!literal) return density_normalization(grid, g, x0) * I;
    double Theta = ball_volume(grid.n, grid.r_prime) * I;
    Mat g0 = interpolate_metric(grid, g, x0);
    return std::pow(2.0 * std::numbers::sqrt2, grid.n) / fiber_volume(g0, grid.r_prime) * Theta;
}

double density_bar(const Trajectory& traj, const Probe& probe, std::size_t index, const CutoffSpec& cutoff,
                   bool literal) {
    if (index >= traj.t.size()) throw ValidationError("sample index out of range");
    Trajectory tr = translate_A_Q(traj, probe);
    return density_bar_slice(tr.grid, tr.g, tr.phi[index], probe.x0, probe.Tprime - tr.t[index], cutoff, literal);
}

namespace {

struct Slice {
    double tau = 0.0;
    CurvaturePack pack;
    SectionField P;
    Field P2, f, w;  // w without cutoff
    double theta_bar = 0.0;
};

Slice make_slice(const Trajectory& tr, std::size_t i, const Probe& probe, const CutoffSpec& cutoff, double norm) {
    Slice s;
    const Grid& grid = tr.grid;
    s.tau = probe.Tprime - tr.t[i];
    if (!(s.tau > 0.0)) throw ValidationError("sample time not before T'");
    s.pack = compute_curvature(grid, tr.g, tr.phi[i]);
    s.P = position_section(grid, tr.phi[i], probe.x0);
    s.P2 = norm2(s.P, tr.g);
    s.f = cutoff_field(grid, tr.g, s.P2, cutoff);
    s.w = heat_kernel(s.P2, s.tau, grid.n);
    Field wf(s.w.size());
    for (std::size_t k = 0; k < wf.size(); ++k) wf[k] = s.w[k] * s.f[k];
    s.theta_bar = norm * integrate_x(grid, wf, tr.g, s.pack.abs_zeta);
    return s;
}

// |H + P_perp / (2 tau)|^2 per node
Field normal_defect(const Grid& grid, const MetricField& g, const Slice& s) {
    std::vector<Field> H = mean_curvature_oneform(grid, s.pack.theta);
    SectionField Hs = mean_curvature_section(g, s.pack.F, s.pack.eta, H);
    FramePack frames = build_frames(g, s.pack.F, grid.size());
    Decomposition d = decompose(s.P, frames, g);
    return norm2(Hs + scale(d.perp, 1.0 / (2.0 * s.tau)), g);
}

double monotonicity_constant(const Trajectory& tr, double norm) {
    const Grid& grid = tr.grid;
    const int n = grid.n;
    CurvaturePack p0 = compute_curvature(grid, tr.g, tr.phi.front());
    double V0 = volume_functional(grid, tr.g, p0.abs_zeta);
    double lam = lambda_g(tr.g);
    double C = cutoff_Cprime() * cutoff_Cdoubleprime(n) * V0 * std::pow(lam, -(n + 2)) * std::pow(grid.r, -(n + 2));
    return C * norm / ball_volume(n, grid.r_prime);
}

}  // namespace

MonotonicityReport monotonicity_residual(const Trajectory& traj, const Probe& probe, const CutoffSpec& cutoff,
                                         const std::vector<std::size_t>& indices, double monotone_tol) {
    if (traj.t.size() < 3) throw ValidationError("monotonicity check needs at least 3 samples");
    const Grid& grid = traj.grid;
    const std::size_t S = traj.t.size();
    const double D0 = traj.t[1] - traj.t[0];
    for (std::size_t i = 1; i + 1 < S; ++i)
        if (std::abs((traj.t[i + 1] - traj.t[i]) - D0) > 1e-9 * std::abs(D0))
            throw ValidationError("nonuniform time sampling is not supported by the central difference");

    MonotonicityReport rep;
    position_section(grid, traj.phi.front(), probe.x0, &rep.warnings);
    Trajectory tr = translate_A_Q(traj, probe);
    const double norm = density_normalization(grid, tr.g, probe.x0);
    rep.C_thm53 = monotonicity_constant(tr, norm);
    const double lam = lambda_g(tr.g);

    std::map<std::size_t, Slice> cache;
    auto get = [&](std::size_t i) -> const Slice& {
        auto it = cache.find(i);
        if (it == cache.end()) it = cache.emplace(i, make_slice(tr, i, probe, cutoff, norm)).first;
        return it->second;
    };

    for (std::size_t i : indices) {
        if (i == 0 || i + 1 >= S) throw ValidationError("monotonicity sample needs neighbours on both sides");
        const Slice& sm = get(i - 1);
        const Slice& s0 = get(i);
        const Slice& sp = get(i + 1);
        const double D = tr.t[i + 1] - tr.t[i - 1];
        MonotonicityRow row{};
        row.t = tr.t[i];
        row.tau = s0.tau;
        row.theta_bar = s0.theta_bar;
        row.lhs = (sp.theta_bar - sm.theta_bar) / D;

        Field defect = normal_defect(grid, tr.g, s0);
        Field Lf = laplacian_eta(grid, s0.f, s0.pack.eta);
        Field b(grid.size()), c(grid.size()), chi(grid.size());
        for (std::size_t k = 0; k < b.size(); ++k) {
            b[k] = defect[k] * s0.f[k] * s0.w[k];
            double dtf = (sp.f[k] - sm.f[k]) / D;
            c[k] = (dtf - Lf[k]) * s0.w[k];
            double p = std::sqrt(s0.P2[k]);
            chi[k] = (p >= 2.0 * lam * cutoff.j && p <= 2.0 * lam * (cutoff.j + 1)) ? s0.w[k] : 0.0;
        }
        row.B = norm * integrate_x(grid, b, tr.g, s0.pack.abs_zeta);
        row.correction = norm * integrate_x(grid, c, tr.g, s0.pack.abs_zeta);
        row.residual = std::abs(row.lhs + row.B - row.correction);
        row.family_bound = cutoff.kind == CutoffKind::Family
                               ? cutoff_Cprime() / (lam * lam) * norm * integrate_x(grid, chi, tr.g, s0.pack.abs_zeta)
                               : 0.0;
        const double prev = sm.theta_bar + rep.C_thm53 * sm.tau;
        const double cur = s0.theta_bar + rep.C_thm53 * s0.tau;
        row.monotone_ok = cur <= prev + monotone_tol;
        rep.C_empirical = std::max(rep.C_empirical, (s0.theta_bar - sm.theta_bar) / (tr.t[i] - tr.t[i - 1]));
        rep.rows.push_back(row);

        // keep the cache small when indices advance monotonically
        while (!cache.empty() && cache.begin()->first + 1 < i) cache.erase(cache.begin());
    }
    return rep;
}

std::string density_csv(const MonotonicityReport& rep) {
    CsvWriter w({"t", "tau", "theta_bar", "B", "correction", "C_thm53", "monotone_ok"});
    for (const auto& r : rep.rows)
        w.row_cells({r.t, r.tau, r.theta_bar, r.B, r.correction, rep.C_thm53, static_cast<long long>(r.monotone_ok)});
    return w.str();
}

std::string monotonicity_csv(const MonotonicityReport& rep) {
    CsvWriter w({"t", "tau", "lhs", "B", "correction", "residual", "family_bound"});
    for (const auto& r : rep.rows) w.row({r.t, r.tau, r.lhs, r.B, r.correction, r.residual, r.family_bound});
    return w.str();
}

ScalingCheck density_scaling_check(const Trajectory& traj, const Probe& probe, double k, std::size_t index,
                                   std::size_t anchor, const CutoffSpec& cutoff) {
    if (index >= traj.t.size() || anchor >= traj.t.size()) throw ValidationError("sample index out of range");
    Trajectory tr = translate_A_Q(traj, probe);
    const double T2 = tr.t[anchor];
    Trajectory sc = scale_flow(tr, k, T2);
    ScalingCheck c{};
    c.lhs = density_bar_slice(tr.grid, tr.g, tr.phi[index], probe.x0, probe.Tprime - tr.t[index], cutoff, false);
    const double tau_scaled = k * (probe.Tprime - T2) - sc.t[index];
    c.rhs = density_bar_slice(sc.grid, sc.g, sc.phi[index], probe.x0, tau_scaled, cutoff, true);
    c.diff = std::abs(c.lhs - c.rhs);
    return c;
}

ShrinkerDetectReport shrinker_detect(const Trajectory& traj, const Probe& probe, const std::vector<std::size_t>& window,
                                     double tol) {
    if (window.empty()) throw ValidationError("empty detection window");
    for (std::size_t i : window)
        if (i >= traj.t.size() || !(traj.t[i] < probe.Tprime)) throw ValidationError("window outside span");
    Trajectory tr = translate_A_Q(traj, probe);
    const Grid& grid = tr.grid;
    const double norm = density_normalization(grid, tr.g, probe.x0);
    ShrinkerDetectReport rep;
    for (std::size_t i : window) {
        Slice s = make_slice(tr, i, probe, CutoffSpec{CutoffKind::None, 1}, norm);
        Field defect = normal_defect(grid, tr.g, s);
        for (std::size_t k = 0; k < defect.size(); ++k) defect[k] *= s.w[k];
        double res = std::sqrt(std::max(0.0, norm * integrate_x(grid, defect, tr.g, s.pack.abs_zeta)));
        rep.rows.push_back({tr.t[i], s.tau, s.theta_bar, res});
        rep.sup_theta_bar = std::max(rep.sup_theta_bar, s.theta_bar);
        rep.sup_residual = std::max(rep.sup_residual, res);
    }
    rep.flagged = rep.sup_residual <= tol && rep.sup_theta_bar <= 1.0 + tol;
    return rep;
}

bool density_resolved(const Grid& grid, const MetricField& g, double tau) {
    return std::sqrt(0.5 * tau) / lambda_g(g) >= 4.0 * grid.h;
}

LimitProbe density_limit_probe(const Grid& grid, const MetricField& g, const Field& phi_translated, const Vec& x0,
                               double tau0, int max_halvings, const CutoffSpec& cutoff) {
    LimitProbe lp;
    double tau = tau0;
    for (int k = 0; k <= max_halvings; ++k, tau *= 0.5) {
        if (!density_resolved(grid, g, tau)) {
            lp.hit_floor = true;
            break;
        }
        lp.tau.push_back(tau);
        lp.theta_bar.push_back(density_bar_slice(grid, g, phi_translated, x0, tau, cutoff));
    }
    return lp;
}

}  // namespace lbmcf
