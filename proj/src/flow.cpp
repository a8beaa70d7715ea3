#include "lbmcf/flow.hpp"

#include "lbmcf/csv.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lbmcf {

double stable_dt(const Grid& grid, const std::vector<Mat>& eta, double cfl) {
    double rho = 0.0;
    for (const auto& e : eta) rho = std::max(rho, 0.25 / min_eigenvalue(e));
    if (!(rho > 0.0) || !std::isfinite(rho)) throw NumericalError("degenerate induced metric in stable_dt");
    return cfl * grid.h * grid.h / (grid.n * rho);
}

namespace {

Field velocity(const Grid& grid, const MetricField& g, const Field& phi, double theta_hat) {
    Field th = angle_field(grid, g, phi);
    for (std::size_t k = 0; k < th.size(); ++k) {
        if (!std::isfinite(th[k])) throw NumericalError("non-finite angle at node " + std::to_string(k));
        th[k] -= theta_hat;
    }
    return th;
}

double max_F(const std::vector<Mat>& F) {
    double m = 0.0;
    for (const auto& f : F) m = std::max(m, f.cwiseAbs().maxCoeff());
    return m;
}

}  // namespace

Field step(const Grid& grid, const MetricField& g, const Field& phi, double dt, double theta_hat, Scheme scheme) {
    Field v = velocity(grid, g, phi, theta_hat);
    Field out(phi.size());
    if (scheme == Scheme::Euler) {
        for (std::size_t k = 0; k < phi.size(); ++k) out[k] = phi[k] + dt * v[k];
        return out;
    }
    Field mid(phi.size());
    for (std::size_t k = 0; k < phi.size(); ++k) mid[k] = phi[k] + dt * v[k];
    Field v2 = velocity(grid, g, mid, theta_hat);
    for (std::size_t k = 0; k < phi.size(); ++k) out[k] = phi[k] + 0.5 * dt * (v[k] + v2[k]);
    return out;
}

HistoryRow history_row(const Grid& grid, const MetricField& g, const Field& phi, double t, double dt) {
    CurvaturePack p = compute_curvature(grid, g, phi);
    auto [mn, mx] = std::minmax_element(p.theta.begin(), p.theta.end());
    return {t, volume_functional(grid, g, p.abs_zeta), *mn, *mx, max_F(p.F), dt};
}

Trajectory run(const Grid& grid, const MetricField& g, const Field& phi0, const FlowConfig& cfg) {
    if (phi0.size() != grid.size()) throw ValidationError("initial potential does not match grid");
    if (!g.constant && g.g.size() != grid.size()) throw ValidationError("metric does not match grid");
    if (cfg.steps < 0 || cfg.cadence < 1) throw ValidationError("steps must be >= 0 and cadence >= 1");
    for (std::size_t k = 0; k < phi0.size(); ++k)
        if (!std::isfinite(phi0[k])) throw ValidationError("initial potential not finite at node " + std::to_string(k));

    Trajectory traj;
    traj.grid = grid;
    traj.g = g;
    traj.theta_hat = cfg.theta_hat;

    CurvaturePack p0 = compute_curvature(grid, g, phi0);
    double dt = cfg.dt > 0.0 ? cfg.dt : stable_dt(grid, p0.eta, cfg.cfl);

    Field phi = phi0;
    auto record = [&](long s) {
        double t = static_cast<double>(s) * dt;
        HistoryRow row = history_row(grid, g, phi, t, dt);
        if (row.maxF > cfg.maxF_bound) {
            std::ostringstream os;
            os << "max|F| = " << row.maxF << " exceeds bound " << cfg.maxF_bound << " at t = " << t;
            throw FlowAborted(os.str(), traj);
        }
        traj.t.push_back(t);
        traj.phi.push_back(phi);
        traj.history.push_back(row);
    };
    record(0);
    for (long s = 1; s <= cfg.steps; ++s) {
        try {
            phi = step(grid, g, phi, dt, cfg.theta_hat, cfg.scheme);
        } catch (const NumericalError& e) {
            throw FlowAborted(std::string(e.what()) + " at step " + std::to_string(s), traj);
        }
        if (max_abs(phi) > cfg.phi_bound)
            throw FlowAborted("potential exceeded bound at step " + std::to_string(s), traj);
        if (s % cfg.cadence == 0) record(s);
    }
    return traj;
}

double average_angle(const Grid& grid, const MetricField& g, const CurvaturePack& pack) {
    return integrate_x(grid, pack.theta, g, pack.abs_zeta) / integrate_x(grid, Field(grid.size(), 1.0), g, pack.abs_zeta);
}

std::vector<DiagnosticRow> flow_diagnostics(const Trajectory& traj, int margin) {
    const std::size_t S = traj.t.size();
    if (S < 3) throw ValidationError("flow diagnostics need at least 3 snapshots");
    const Grid& grid = traj.grid;
    const int n = grid.n;
    std::vector<CurvaturePack> packs;
    packs.reserve(S);
    for (const auto& phi : traj.phi) packs.push_back(compute_curvature(grid, traj.g, phi));
    std::vector<double> V(S);
    for (std::size_t i = 0; i < S; ++i) V[i] = volume_functional(grid, traj.g, packs[i].abs_zeta);

    std::vector<DiagnosticRow> rows;
    for (std::size_t i = 1; i + 1 < S; ++i) {
        const double D = traj.t[i + 1] - traj.t[i - 1];
        const CurvaturePack& p = packs[i];
        DiagnosticRow row{};
        row.t = traj.t[i];
        row.dVdt_fd = (V[i + 1] - V[i - 1]) / D;

        // -int (1/4) (dx u_dot)^T eta^{-1} (dx theta) |zeta| det g dx, u_dot = theta - theta_hat
        std::vector<Field> H = mean_curvature_oneform(grid, p.theta);
        Field integrand(grid.size());
        for (std::size_t k = 0; k < integrand.size(); ++k) {
            Vec d(n);
            for (int j = 0; j < n; ++j) d(j) = H[j][k];
            integrand[k] = d.dot(p.eta[k].llt().solve(d));
        }
        row.dVdt_formula = -ball_volume(n, grid.r_prime) * integrate_x(grid, integrand, traj.g, p.abs_zeta);
        double denom = std::max(std::abs(row.dVdt_formula), std::abs(row.dVdt_fd));
        row.rel_err_first_variation = denom > 0.0 ? std::abs(row.dVdt_fd - row.dVdt_formula) / denom : 0.0;

        Field lap = laplacian_eta(grid, p.theta, p.eta);
        Field udot(grid.size());
        for (std::size_t k = 0; k < udot.size(); ++k) udot[k] = (traj.phi[i + 1][k] - traj.phi[i - 1][k]) / D;
        double heat = 0.0, one = 0.0;
        std::vector<Field> du(n);
        for (int j = 0; j < n; ++j) du[j] = diff(grid, udot, {j});
        for (std::size_t k = 0; k < grid.size(); ++k) {
            if (!grid.interior(k, margin)) continue;
            double dth = (packs[i + 1].theta[k] - packs[i - 1].theta[k]) / D;
            heat = std::max(heat, std::abs(dth - lap[k]));
            for (int j = 0; j < n; ++j) one = std::max(one, std::abs(0.5 * du[j][k] - H[j][k]));
        }
        row.heat_residual = heat;
        row.oneform_residual = one;
        rows.push_back(row);
    }
    return rows;
}

Trajectory scale_flow(const Trajectory& traj, double k, double Tprime) {
    if (!(k >= 1.0)) throw ValidationError("scaling factor must be >= 1");
    if (traj.t.empty() || Tprime < traj.t.front() || Tprime > traj.t.back())
        throw ValidationError("T' outside trajectory span");
    Trajectory out;
    out.grid = traj.grid;
    out.g = scaled_metric(traj.g, k);
    out.theta_hat = traj.theta_hat;
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        out.t.push_back(k * (traj.t[i] - Tprime));
        Field phi = traj.phi[i];
        for (double& v : phi) v *= k;
        out.phi.push_back(std::move(phi));
    }
    return out;
}

std::string history_csv(const Trajectory& traj) {
    CsvWriter w({"t", "V", "theta_min", "theta_max", "maxF", "dt"});
    for (const auto& r : traj.history) w.row({r.t, r.V, r.theta_min, r.theta_max, r.maxF, r.dt});
    return w.str();
}

}  // namespace lbmcf
