#pragma once

#include "lbmcf/density.hpp"

#include <cstdint>
#include <limits>
#include <string>

namespace lbmcf {

// (g, f) with a constant metric; f sampled at uniformly spaced times t.
struct Pair {
    Grid grid;
    Mat G;
    std::vector<double> t;
    std::vector<Field> f;
};

Pair pair_from_trajectory(const Trajectory& traj);

struct SpaceTimePoint {
    Vec x;
    double t = 0.0;
};

struct Region {
    Vec lo, hi;  // spatial sub-box
    double a = 0.0, b = 1.0;
};

void validate_region(const Region& V, int n);

// max(sqrt(2 dx^T G dx), sqrt|dt|)
double parabolic_dist(const SpaceTimePoint& p, const SpaceTimePoint& q, const Mat& G);
// min over faces of the spatial distance, sqrt(b - t), sqrt(t - a)
double boundary_dist(const SpaceTimePoint& Q, const Region& V, const Mat& G);

// D_lambda^{t0}: metric lambda G, f_lambda(s) = lambda f(t0 + s / lambda) relabelled at s = lambda (t - t0)
Pair scale_pair(const Pair& p, double lambda, double t0);
Region scale_region(const Region& V, double lambda, double t0);

struct NormOptions {
    double alpha = 0.5;
    std::size_t max_holder_nodes = 4096;
    std::uint64_t seed = 0;
};

// Everything needed to evaluate |D_lambda^{t0}(g,f)|_{3,alpha}(x0, 0) for any lambda.
class NormTables {
public:
    NormTables(const Pair& p, const SpaceTimePoint& Q, const Region& V, const NormOptions& opt);
    double evaluate(double lambda) const;
    bool empty() const { return dist_.empty(); }

private:
    double alpha_ = 0.5;
    std::vector<double> dist_;                    // |t - t0| per time rank, ascending
    std::vector<std::vector<double>> a_, b_;      // per rank: |d_t f| and |d_t grad f|_g + |grad^3 f|_g at each node
    std::vector<double> holder_prefix_;           // max Holder quotient over pairs with both ranks <= m
};

double partial_c3a_norm(const Pair& p, const SpaceTimePoint& Q, const Region& V, const NormOptions& opt);

enum class KStatus { Zero, Bracketed, BelowRange, Unattainable };
std::string to_string(KStatus s);

struct KResult {
    double K = 0.0;
    double K_lo = 0.0, K_hi = 0.0;  // final bracket
    KStatus status = KStatus::Zero;
    bool non_monotone = false;  // an admissible lambda below the bracket was seen on the log grid
    double tolerance() const;
};

KResult K3a(const Pair& p, const SpaceTimePoint& Q, const Region& V, const NormOptions& opt);

struct KnormRow {
    Vec x;
    double t, K, dist, product;
    KStatus status;
};

struct KnormReport {
    std::vector<KnormRow> rows;
    double K3aV = 0.0;
    double tolerance = 0.0;  // largest per-point bracket width times its distance
    bool non_monotone = false;
};

// Probe lattice: `spatial` points per axis in the open box, times from the pair's samples in (a, b)
// thinned to at most `temporal`.
KnormReport K3aV(const Pair& p, const Region& V, const NormOptions& opt, int spatial = 5, int temporal = 4);

std::string knorm_csv(const KnormReport& rep);

struct EpsRow {
    std::uint64_t seed;
    double sup_density_excess, supF, K3aV, dist_used;
};

// Each member is a flow trajectory on the same grid and metric.
EpsRow eps_probe_member(const Trajectory& traj, std::uint64_t seed, const Region& V, const NormOptions& opt,
                        int spatial = 3, int temporal = 3);

std::string eps_csv(const std::vector<EpsRow>& rows);

}  // namespace lbmcf
