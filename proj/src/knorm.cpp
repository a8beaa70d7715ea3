#include "lbmcf/knorm.hpp"

#include "lbmcf/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>

namespace lbmcf {

Pair pair_from_trajectory(const Trajectory& traj) {
    if (!traj.g.constant) throw ValidationError("K-norm probes need a constant metric");
    return Pair{traj.grid, traj.g.g.front(), traj.t, traj.phi};
}

void validate_region(const Region& V, int n) {
    if (V.lo.size() != n || V.hi.size() != n) throw ValidationError("region dimension does not match grid");
    for (int a = 0; a < n; ++a)
        if (!(V.lo(a) < V.hi(a))) throw ValidationError("region box is empty");
    if (!(V.a < V.b)) throw ValidationError("region time interval is empty");
}

double parabolic_dist(const SpaceTimePoint& p, const SpaceTimePoint& q, const Mat& G) {
    Vec dx = p.x - q.x;
    double ds = std::sqrt(std::max(0.0, 2.0 * dx.dot(G * dx)));
    return std::max(ds, std::sqrt(std::abs(p.t - q.t)));
}

double boundary_dist(const SpaceTimePoint& Q, const Region& V, const Mat& G) {
    const int n = static_cast<int>(G.rows());
    validate_region(V, n);
    if (Q.t < V.a || Q.t >= V.b) throw ValidationError("point lies outside the region's time interval");
    Mat inv2G = (2.0 * G).inverse();
    double d = std::min(std::sqrt(V.b - Q.t), std::sqrt(Q.t - V.a));
    for (int a = 0; a < n; ++a) {
        if (Q.x(a) < V.lo(a) || Q.x(a) > V.hi(a)) throw ValidationError("point lies outside the region's box");
        double s = std::sqrt(inv2G(a, a));
        d = std::min(d, std::min(Q.x(a) - V.lo(a), V.hi(a) - Q.x(a)) / s);
    }
    return d;
}

Pair scale_pair(const Pair& p, double lambda, double t0) {
    if (!(lambda > 0.0)) throw ValidationError("scaling factor must be positive");
    if (p.t.empty() || t0 < p.t.front() || t0 > p.t.back()) throw ValidationError("t0 outside the pair's time range");
    Pair out;
    out.grid = p.grid;
    out.G = lambda * p.G;
    for (std::size_t i = 0; i < p.t.size(); ++i) {
        out.t.push_back(lambda * (p.t[i] - t0));
        Field f = p.f[i];
        for (double& v : f) v *= lambda;
        out.f.push_back(std::move(f));
    }
    return out;
}

Region scale_region(const Region& V, double lambda, double t0) {
    return Region{V.lo, V.hi, lambda * (V.a - t0), lambda * (V.b - t0)};
}

namespace {

double tensor_norm3(const std::vector<double>& T, const Mat& Gi, int n) {
    double s = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int a2 = 0; a2 < n; ++a2)
                    for (int b2 = 0; b2 < n; ++b2)
                        for (int c2 = 0; c2 < n; ++c2)
                            s += Gi(a, a2) * Gi(b, b2) * Gi(c, c2) * T[(a * n + b) * n + c] * T[(a2 * n + b2) * n + c2];
    return std::sqrt(std::max(0.0, s));
}

double vector_norm(const std::vector<double>& v, const Mat& Gi, int n) {
    double s = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) s += Gi(a, b) * v[a] * v[b];
    return std::sqrt(std::max(0.0, s));
}

Field time_derivative(const Pair& p, std::size_t i) {
    const std::size_t S = p.t.size();
    Field out(p.f[i].size(), 0.0);
    if (S < 2) return out;
    if (i > 0 && i + 1 < S) {
        double D = p.t[i + 1] - p.t[i - 1];
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = (p.f[i + 1][k] - p.f[i - 1][k]) / D;
    } else if (S == 2) {
        double D = p.t[1] - p.t[0];
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = (p.f[1][k] - p.f[0][k]) / D;
    } else if (i == 0) {
        double D = p.t[1] - p.t[0];
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] = (3.0 * (p.f[1][k] - p.f[0][k]) - (p.f[2][k] - p.f[1][k])) / (2.0 * D);
    } else {
        double D = p.t[i] - p.t[i - 1];
        for (std::size_t k = 0; k < out.size(); ++k)
            out[k] = (3.0 * (p.f[i][k] - p.f[i - 1][k]) - (p.f[i - 1][k] - p.f[i - 2][k])) / (2.0 * D);
    }
    return out;
}

}  // namespace

NormTables::NormTables(const Pair& p, const SpaceTimePoint& Q, const Region& V, const NormOptions& opt)
    : alpha_(opt.alpha) {
    const Grid& grid = p.grid;
    const int n = grid.n;
    validate_region(V, n);
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    if (p.t.size() != p.f.size() || p.t.empty()) throw ValidationError("pair needs matching times and samples");
    if (p.G.rows() != n) throw ValidationError("pair metric has wrong dimension");
    for (std::size_t i = 2; i < p.t.size(); ++i) {
        double d0 = p.t[1] - p.t[0];
        if (std::abs((p.t[i] - p.t[i - 1]) - d0) > 1e-9 * std::abs(d0))
            throw ValidationError("pair time samples must be uniformly spaced");
    }
    const Mat Gi = p.G.inverse();

    std::vector<std::size_t> nodes;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        Vec x = grid.point(k);
        bool in = (x - Q.x).norm() < 1.0;
        for (int a = 0; a < n && in; ++a) in = x(a) >= V.lo(a) && x(a) <= V.hi(a);
        if (in) nodes.push_back(k);
    }
    std::vector<std::size_t> times;
    for (std::size_t i = 0; i < p.t.size(); ++i)
        if (p.t[i] >= V.a && p.t[i] < V.b) times.push_back(i);
    if (nodes.empty() || times.empty()) throw ValidationError("parabolic ball around the point misses the region");
    std::stable_sort(times.begin(), times.end(),
                     [&](std::size_t x, std::size_t y) { return std::abs(p.t[x] - Q.t) < std::abs(p.t[y] - Q.t); });

    const std::size_t R = times.size(), M = nodes.size();
    const std::size_t nv = n, nt = static_cast<std::size_t>(n) * n * n;
    // per (rank, node): v = d_t grad f, T = grad^3 f
    std::vector<double> V1(R * M * nv), T3(R * M * nt);
    dist_.resize(R);
    a_.assign(R, std::vector<double>(M));
    b_.assign(R, std::vector<double>(M));
    for (std::size_t r = 0; r < R; ++r) {
        const std::size_t i = times[r];
        dist_[r] = std::abs(p.t[i] - Q.t);
        Field dtf = time_derivative(p, i);
        std::vector<Field> dv(n);
        for (int a = 0; a < n; ++a) dv[a] = diff(grid, dtf, {a});
        std::vector<Field> d3(nt);
        // third differences below the stencil's rounding level carry no signal
        const double floor3 = 64.0 * std::numeric_limits<double>::epsilon() * max_abs(p.f[i]) / (grid.h * grid.h * grid.h);
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b)
                for (int c = b; c < n; ++c) {
                    Field& d = d3[(a * n + b) * n + c];
                    d = diff(grid, p.f[i], {a, b, c});
                    for (double& v : d)
                        if (std::abs(v) < floor3) v = 0.0;
                }
        for (std::size_t m = 0; m < M; ++m) {
            const std::size_t k = nodes[m];
            std::vector<double> v(nv), T(nt);
            for (int a = 0; a < n; ++a) v[a] = 0.5 * dv[a][k];
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    for (int c = 0; c < n; ++c) {
                        int s[3] = {a, b, c};
                        std::sort(s, s + 3);
                        T[(a * n + b) * n + c] = 0.125 * d3[(s[0] * n + s[1]) * n + s[2]][k];
                    }
            a_[r][m] = std::abs(dtf[k]);
            b_[r][m] = vector_norm(v, Gi, n) + tensor_norm3(T, Gi, n);
            std::copy(v.begin(), v.end(), V1.begin() + (r * M + m) * nv);
            std::copy(T.begin(), T.end(), T3.begin() + (r * M + m) * nt);
        }
    }

    // Holder quotients over space-time points, thinned by a seeded shuffle when too many
    std::vector<std::size_t> pts(R * M);
    std::iota(pts.begin(), pts.end(), std::size_t{0});
    if (pts.size() > opt.max_holder_nodes) {
        std::mt19937_64 rng(opt.seed);
        for (std::size_t i = 0; i < opt.max_holder_nodes; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pts.size() - 1);
            std::swap(pts[i], pts[pick(rng)]);
        }
        pts.resize(opt.max_holder_nodes);
        std::sort(pts.begin(), pts.end());
    }
    std::vector<double> hv(R, 0.0), ht(R, 0.0);
    std::mutex merge;
    const std::size_t P = pts.size();
    parallel_for(P, [&](std::size_t beg, std::size_t end) {
        std::vector<double> lv(R, 0.0), lt(R, 0.0);
        std::vector<double> dv(nv), dt3(nt);
        for (std::size_t u = beg; u < end; ++u) {
            const std::size_t pu = pts[u], ru = pu / M, mu = pu % M;
            const Vec xu = grid.point(nodes[mu]);
            const double tu = p.t[times[ru]];
            for (std::size_t w = u + 1; w < P; ++w) {
                const std::size_t pw = pts[w], rw = pw / M, mw = pw % M;
                const double d = parabolic_dist({xu, tu}, {grid.point(nodes[mw]), p.t[times[rw]]}, p.G);
                if (d == 0.0) continue;
                const double da = std::pow(d, opt.alpha);
                for (std::size_t c = 0; c < nv; ++c) dv[c] = V1[pu * nv + c] - V1[pw * nv + c];
                for (std::size_t c = 0; c < nt; ++c) dt3[c] = T3[pu * nt + c] - T3[pw * nt + c];
                const std::size_t bucket = std::max(ru, rw);
                lv[bucket] = std::max(lv[bucket], vector_norm(dv, Gi, n) / da);
                lt[bucket] = std::max(lt[bucket], tensor_norm3(dt3, Gi, n) / da);
            }
        }
        std::lock_guard<std::mutex> lock(merge);
        for (std::size_t r = 0; r < R; ++r) {
            hv[r] = std::max(hv[r], lv[r]);
            ht[r] = std::max(ht[r], lt[r]);
        }
    });
    holder_prefix_.resize(R);
    double mv = 0.0, mt = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
        mv = std::max(mv, hv[r]);
        mt = std::max(mt, ht[r]);
        holder_prefix_[r] = mv + mt;
    }
}

double NormTables::evaluate(double lambda) const {
    if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
    // window |t - t0| < 1/lambda; the nearest sample is always kept
    const double w = 1.0 / lambda;
    std::size_t R = static_cast<std::size_t>(std::lower_bound(dist_.begin(), dist_.end(), w) - dist_.begin());
    R = std::max<std::size_t>(R, 1);
    const double c = 1.0 / std::sqrt(lambda);
    double pointwise = 0.0;
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t m = 0; m < a_[r].size(); ++m) pointwise = std::max(pointwise, a_[r][m] + c * b_[r][m]);
    return pointwise + std::pow(lambda, -0.5 * (1.0 + alpha_)) * holder_prefix_[R - 1];
}

double partial_c3a_norm(const Pair& p, const SpaceTimePoint& Q, const Region& V, const NormOptions& opt) {
    return NormTables(p, Q, V, opt).evaluate(1.0);
}

std::string to_string(KStatus s) {
    switch (s) {
        case KStatus::Zero: return "zero";
        case KStatus::Bracketed: return "bracketed";
        case KStatus::BelowRange: return "below_range";
        case KStatus::Unattainable: return "unattainable";
    }
    return "unknown";
}

double KResult::tolerance() const {
    if (!std::isfinite(K)) return 0.0;
    return std::max(K_hi - K_lo, 1e-12 * K);
}

KResult K3a(const Pair& p, const SpaceTimePoint& Q, const Region& V, const NormOptions& opt) {
    NormTables tab(p, Q, V, opt);
    KResult res;
    constexpr int kMin = -40, kMax = 40;
    if (tab.evaluate(std::exp2(kMin)) == 0.0) return res;
    std::vector<double> grid_norm;
    for (int k = kMin; k <= kMax; ++k) grid_norm.push_back(tab.evaluate(std::exp2(k)));
    int kstar = kMin - 1;
    for (int k = kMax; k >= kMin; --k)
        if (grid_norm[k - kMin] > 1.0) {
            kstar = k;
            break;
        }
    if (kstar < kMin) {
        res.status = KStatus::BelowRange;
        res.K = res.K_lo = res.K_hi = std::exp2(0.5 * kMin);
        return res;
    }
    if (kstar == kMax) {
        res.status = KStatus::Unattainable;
        res.K = res.K_lo = res.K_hi = std::numeric_limits<double>::infinity();
        return res;
    }
    for (int k = kMin; k < kstar; ++k)
        if (grid_norm[k - kMin] <= 1.0) res.non_monotone = true;
    double lo = kstar, hi = kstar + 1.0;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        if (tab.evaluate(std::exp2(mid)) > 1.0)
            lo = mid;
        else
            hi = mid;
    }
    res.status = KStatus::Bracketed;
    res.K_lo = std::exp2(0.5 * lo);
    res.K_hi = std::exp2(0.5 * hi);
    res.K = res.K_hi;
    return res;
}

namespace {

std::vector<Vec> lattice_points(const Region& V, int n, int spatial) {
    std::vector<Vec> pts;
    int total = 1;
    for (int a = 0; a < n; ++a) total *= spatial;
    for (int c = 0; c < total; ++c) {
        Vec x(n);
        int rem = c;
        for (int a = 0; a < n; ++a) {
            int j = rem % spatial;
            rem /= spatial;
            x(a) = V.lo(a) + (V.hi(a) - V.lo(a)) * (j + 1) / (spatial + 1);
        }
        pts.push_back(x);
    }
    return pts;
}

std::vector<double> lattice_times(const std::vector<double>& t, const Region& V, int temporal) {
    std::vector<double> inside;
    for (double s : t)
        if (s > V.a && s < V.b) inside.push_back(s);
    if (static_cast<int>(inside.size()) <= temporal) return inside;
    std::vector<double> out;
    for (int j = 0; j < temporal; ++j) {
        std::size_t idx = (inside.size() - 1) * static_cast<std::size_t>(j + 1) / static_cast<std::size_t>(temporal);
        out.push_back(inside[idx]);
    }
    return out;
}

}  // namespace

KnormReport K3aV(const Pair& p, const Region& V, const NormOptions& opt, int spatial, int temporal) {
    const int n = p.grid.n;
    validate_region(V, n);
    if (spatial < 1 || temporal < 1) throw ValidationError("probe lattice needs at least one point per axis");
    std::vector<Vec> xs = lattice_points(V, n, spatial);
    std::vector<double> ts = lattice_times(p.t, V, temporal);
    if (ts.empty()) throw ValidationError("probe lattice is empty: no samples inside the region's time interval");
    KnormReport rep;
    rep.rows.resize(xs.size() * ts.size());
    std::vector<double> tol(rep.rows.size());
    parallel_for(rep.rows.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            SpaceTimePoint Q{xs[i % xs.size()], ts[i / xs.size()]};
            KResult k = K3a(p, Q, V, opt);
            double d = boundary_dist(Q, V, p.G);
            double prod = std::isinf(k.K) ? k.K : d * k.K;
            rep.rows[i] = KnormRow{Q.x, Q.t, k.K, d, prod, k.status};
            tol[i] = d * k.tolerance();
            if (k.non_monotone) rep.non_monotone = true;
        }
    });
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        rep.K3aV = std::max(rep.K3aV, rep.rows[i].product);
        rep.tolerance = std::max(rep.tolerance, tol[i]);
    }
    return rep;
}

std::string knorm_csv(const KnormReport& rep) {
    CsvWriter w({"Qx", "Qt", "K", "dist", "product"});
    for (const auto& r : rep.rows) {
        std::string qx;
        for (int a = 0; a < r.x.size(); ++a) {
            if (a) qx += ' ';
            qx += CsvWriter::format(r.x(a));
        }
        w.row_cells({qx, r.t, r.K, r.dist, r.product});
    }
    return w.str();
}

EpsRow eps_probe_member(const Trajectory& traj, std::uint64_t seed, const Region& V, const NormOptions& opt,
                        int spatial, int temporal) {
    Pair p = pair_from_trajectory(traj);
    const Grid& grid = traj.grid;
    const int n = grid.n;
    validate_region(V, n);
    EpsRow row{seed, 0.0, 0.0, 0.0, 0.0};

    std::vector<Vec> xs = lattice_points(V, n, spatial);
    std::vector<double> ts = lattice_times(traj.t, V, temporal);
    double sup_theta = -std::numeric_limits<double>::infinity();
    for (double Tp : ts)
        for (const Vec& x0 : xs) {
            SpaceTimePoint Q{x0, Tp};
            const double d = boundary_dist(Q, V, p.G);
            row.dist_used = std::max(row.dist_used, d);
            Probe probe{x0, Tp};
            Trajectory tr = translate_A_Q(traj, probe);
            for (std::size_t i = 0; i < tr.t.size(); ++i) {
                if (!(tr.t[i] > Tp - d * d && tr.t[i] < Tp)) continue;
                if (!density_resolved(grid, tr.g, Tp - tr.t[i])) continue;
                double th = density_bar_slice(grid, tr.g, tr.phi[i], x0, Tp - tr.t[i], CutoffSpec{});
                sup_theta = std::max(sup_theta, th);
            }
        }
    // values within rounding of 1 (and truncation deficits) count as no excess
    if (std::isfinite(sup_theta) && sup_theta - 1.0 > 1e-12) row.sup_density_excess = sup_theta - 1.0;

    const Mat Gi = p.G.inverse();
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        if (traj.t[i] < V.a || traj.t[i] >= V.b) continue;
        std::vector<Mat> F = curvature_F(grid, traj.phi[i]);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            Vec x = grid.point(k);
            bool in = true;
            for (int a = 0; a < n && in; ++a) in = x(a) >= V.lo(a) && x(a) <= V.hi(a);
            if (!in) continue;
            Mat A = Gi * F[k];
            row.supF = std::max(row.supF, std::sqrt(std::max(0.0, (A * A).trace())));
        }
    }
    row.K3aV = K3aV(p, V, opt, spatial, temporal).K3aV;
    return row;
}

std::string eps_csv(const std::vector<EpsRow>& rows) {
    CsvWriter w({"seed", "sup_density_excess", "supF", "K3aV", "dist_used"});
    for (const auto& r : rows)
        w.row_cells({static_cast<long long>(r.seed), r.sup_density_excess, r.supF, r.K3aV, r.dist_used});
    return w.str();
}

}  // namespace lbmcf
