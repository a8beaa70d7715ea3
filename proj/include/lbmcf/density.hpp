#pragma once

#include "lbmcf/flow.hpp"
#include "lbmcf/frames.hpp"

namespace lbmcf {

// f~(s) = 1 - S(clamp(s - lo)), S(u) = 6u^5 - 15u^4 + 10u^3
double cutoff_profile(double s, double lo = 1.0);
double cutoff_profile_d1(double s, double lo = 1.0);
double cutoff_profile_d2(double s, double lo = 1.0);
// max of |f~'| + |f~''|
double cutoff_Cprime();
// 4^{n+3} / pi^{n/2} * max_x x^{n/2} e^{-x}
double cutoff_Cdoubleprime(int n);

enum class CutoffKind { Paper, Family, None };

struct CutoffSpec {
    CutoffKind kind = CutoffKind::Paper;
    int j = 1;
};

// sqrt of the smallest metric eigenvalue over the box
double lambda_g(const MetricField& g);

struct Probe {
    Vec x0;
    double Tprime = 0.0;
};

// Subtracts phi(x0, T') + grad phi(x0, T') . (x - x0) from every slice. T' past
// the last sample uses the last slice; T' between samples interpolates linearly.
Trajectory translate_A_Q(const Trajectory& traj, const Probe& probe);
Field translate_slice(const Grid& grid, const Field& phi, const Field& ref, const Vec& x0);

Field cutoff_field(const Grid& grid, const MetricField& g, const Field& P2, const CutoffSpec& spec);

// Vol(B(r')) * int (4 pi tau)^{-k} exp(-psi / (4 tau)) f |zeta| det g dx
double theta_general(const Grid& grid, const MetricField& g, const Field& phi, double tau, const Field& psi,
                     const Field& f, double k_exp);

// Normalized density of an already translated slice.
double density_bar_slice(const Grid& grid, const MetricField& g, const Field& phi, const Vec& x0, double tau,
                         const CutoffSpec& cutoff, bool literal = false);

// Translates, then evaluates at sample index i.
double density_bar(const Trajectory& traj, const Probe& probe, std::size_t index, const CutoffSpec& cutoff,
                   bool literal = false);

// factor turning int (...) |zeta| det g dx into normalized density units
double density_normalization(const Grid& grid, const MetricField& g, const Vec& x0);

struct MonotonicityRow {
    double t, tau, theta_bar;
    double lhs;         // d/dt of the normalized density
    double B;           // int |H + P_perp / 2 tau|^2 f w dmu
    double correction;  // int (d_t f - Delta_eta f) w dmu
    double residual;    // |lhs + B - correction|
    double family_bound;  // C'/lambda^2 int w chi_{A_j} dmu (family cutoff only)
    bool monotone_ok;
};

struct MonotonicityReport {
    std::vector<MonotonicityRow> rows;
    double C_thm53 = 0.0;      // in normalized units
    double C_empirical = 0.0;  // smallest C making theta_bar + C tau nonincreasing
    std::vector<std::string> warnings;
};

// indices must have both neighbours in the trajectory; sample spacing must be uniform
MonotonicityReport monotonicity_residual(const Trajectory& traj, const Probe& probe, const CutoffSpec& cutoff,
                                         const std::vector<std::size_t>& indices, double monotone_tol = 1e-12);

std::string density_csv(const MonotonicityReport& rep);
std::string monotonicity_csv(const MonotonicityReport& rep);

struct ScalingCheck {
    double lhs, rhs, diff;
};

// Density at sample `index` against the same density computed from D_k^{T''} of the translated flow,
// T'' = traj.t[anchor].
ScalingCheck density_scaling_check(const Trajectory& traj, const Probe& probe, double k, std::size_t index,
                                   std::size_t anchor, const CutoffSpec& cutoff);

struct ShrinkerDetectRow {
    double t, tau, theta_bar_inf, residual_L2;
};

struct ShrinkerDetectReport {
    std::vector<ShrinkerDetectRow> rows;
    double sup_theta_bar = 0.0;
    double sup_residual = 0.0;
    bool flagged = false;
};

ShrinkerDetectReport shrinker_detect(const Trajectory& traj, const Probe& probe, const std::vector<std::size_t>& window,
                                     double tol);

struct LimitProbe {
    std::vector<double> tau, theta_bar;
    bool hit_floor = false;
};

// Gaussian width sqrt(tau/2)/lambda spans at least 4 grid cells
bool density_resolved(const Grid& grid, const MetricField& g, double tau);
// tau_k = tau0 2^{-k} until density_resolved fails
LimitProbe density_limit_probe(const Grid& grid, const MetricField& g, const Field& phi_translated, const Vec& x0,
                               double tau0, int max_halvings, const CutoffSpec& cutoff);

}  // namespace lbmcf
