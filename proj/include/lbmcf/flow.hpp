#pragma once

#include "lbmcf/curvature.hpp"

#include <limits>
#include <optional>

namespace lbmcf {

enum class Scheme { Euler, RK2 };

struct FlowConfig {
    double dt = 0.0;  // 0 selects stable_dt(cfl) from the initial data
    double cfl = 0.4;
    double theta_hat = 0.0;
    Scheme scheme = Scheme::Euler;
    long steps = 100;
    long cadence = 1;  // record every cadence steps
    double maxF_bound = std::numeric_limits<double>::infinity();
    double phi_bound = std::numeric_limits<double>::infinity();
};

struct HistoryRow {
    double t, V, theta_min, theta_max, maxF, dt;
};

struct Trajectory {
    Grid grid;
    MetricField g;
    double theta_hat = 0.0;
    std::vector<double> t;
    std::vector<Field> phi;
    std::vector<HistoryRow> history;
};

class FlowAborted : public NumericalError {
public:
    FlowAborted(const std::string& what, Trajectory last_good)
        : NumericalError(what), last_good_(std::move(last_good)) {}
    const Trajectory& last_good() const { return last_good_; }

private:
    Trajectory last_good_;
};

// Explicit Euler on the compact second difference is stable for cfl <= 0.5.
double stable_dt(const Grid& grid, const std::vector<Mat>& eta, double cfl = 0.4);

Field step(const Grid& grid, const MetricField& g, const Field& phi, double dt, double theta_hat,
           Scheme scheme = Scheme::Euler);

HistoryRow history_row(const Grid& grid, const MetricField& g, const Field& phi, double t, double dt);

Trajectory run(const Grid& grid, const MetricField& g, const Field& phi0, const FlowConfig& cfg);

// integral of theta dmu over integral of dmu
double average_angle(const Grid& grid, const MetricField& g, const CurvaturePack& pack);

struct DiagnosticRow {
    double t;
    double dVdt_fd;       // central difference of V
    double dVdt_formula;  // first variation integral
    double rel_err_first_variation;
    double heat_residual;   // max |d_t theta - Delta_eta theta|
    double oneform_residual;  // max |(1/2) d_x u_dot - H|
};

// margin: nodes skipped next to non-periodic faces in the pointwise maxima
std::vector<DiagnosticRow> flow_diagnostics(const Trajectory& traj, int margin = 4);

// D_k^{T'}: metric kg, potential k phi(T' + s/k), s = k(t - T')
Trajectory scale_flow(const Trajectory& traj, double k, double Tprime);

std::string history_csv(const Trajectory& traj);

}  // namespace lbmcf
