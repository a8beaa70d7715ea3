#include "lbmcf/frames.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lbmcf {

CField SectionField::up_component(int j) const {
    CField out(nodes());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = up(k, j);
    return out;
}

CField SectionField::dn_component(int j) const {
    CField out(nodes());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = dn(k, j);
    return out;
}

SectionField operator+(const SectionField& a, const SectionField& b) {
    SectionField c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
    return c;
}

SectionField operator-(const SectionField& a, const SectionField& b) {
    SectionField c = a;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
    return c;
}

SectionField scale(const SectionField& a, const Field& f) {
    SectionField c = a;
    const std::size_t w = 2 * a.n;
    for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] *= f[i / w];
    return c;
}

SectionField scale(const SectionField& a, double s) {
    SectionField c = a;
    for (auto& v : c.data) v *= s;
    return c;
}

namespace {

Mat inverse(const Mat& m) { return m.llt().solve(Mat::Identity(m.rows(), m.cols())); }

}  // namespace

FramePack build_frames(const MetricField& g, const std::vector<Mat>& F, std::size_t nodes) {
    const int n = g.n;
    FramePack fp;
    fp.n = n;
    fp.E.assign(n, SectionField(n, nodes));
    fp.Fn.assign(n, SectionField(n, nodes));
    fp.eta.resize(nodes);
    for (std::size_t k = 0; k < nodes; ++k) {
        const Mat& G = g.at(k);
        Mat GiF = G.llt().solve(F[k]);
        fp.eta[k] = induced_eta(G, F[k]);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                fp.E[i].up(k, j) = (i == j) ? 1.0 : 0.0;
                fp.E[i].dn(k, j) = F[k](j, i);
                fp.Fn[i].up(k, j) = -GiF(j, i);
                fp.Fn[i].dn(k, j) = G(j, i);
            }
    }
    return fp;
}

CField pairing(const SectionField& Y, const SectionField& Z, const MetricField& g) {
    const int n = Y.n;
    CField out(Y.nodes());
    parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const Mat& G = g.at(k);
            Mat Gi = inverse(G);
            cd s(0.0, 0.0);
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) {
                    s += G(j, l) * std::conj(Y.up(k, j)) * Z.up(k, l);
                    s += Gi(j, l) * std::conj(Y.dn(k, j)) * Z.dn(k, l);
                }
            out[k] = s;
        }
    });
    return out;
}

Field norm2(const SectionField& Y, const MetricField& g) {
    CField p = pairing(Y, Y, g);
    Field out(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) out[k] = p[k].real();
    return out;
}

Decomposition decompose(const SectionField& Y, const FramePack& frames, const MetricField& g) {
    const int n = Y.n;
    const std::size_t M = Y.nodes();
    std::vector<CField> cE(n), cF(n);
    for (int i = 0; i < n; ++i) {
        cE[i] = pairing(frames.E[i], Y, g);
        cF[i] = pairing(frames.Fn[i], Y, g);
    }
    Decomposition d;
    d.top = SectionField(n, M);
    d.perp = SectionField(n, M);
    d.assoc.assign(n, CField(M));
    for (std::size_t k = 0; k < M; ++k) {
        Mat ei = inverse(frames.eta[k]);
        for (int i = 0; i < n; ++i) {
            cd a(0.0, 0.0), b(0.0, 0.0);
            for (int j = 0; j < n; ++j) {
                a += ei(i, j) * cE[j][k];
                b += ei(i, j) * cF[j][k];
            }
            d.assoc[i][k] = a;
            for (int c = 0; c < n; ++c) {
                d.top.up(k, c) += a * frames.E[i].up(k, c);
                d.top.dn(k, c) += a * frames.E[i].dn(k, c);
                d.perp.up(k, c) += b * frames.Fn[i].up(k, c);
                d.perp.dn(k, c) += b * frames.Fn[i].dn(k, c);
            }
        }
    }
    return d;
}

SectionField mean_curvature_section(const MetricField& g, const std::vector<Mat>& F, const std::vector<Mat>& eta,
                                    const std::vector<Field>& H) {
    const int n = g.n;
    const std::size_t M = F.size();
    SectionField S(n, M);
    for (std::size_t k = 0; k < M; ++k) {
        Vec h(n);
        for (int j = 0; j < n; ++j) h(j) = H[j][k];
        Vec w = eta[k].llt().solve(h);
        const Mat& G = g.at(k);
        Vec up = -G.llt().solve(F[k] * w);
        Vec dn = G * w;
        for (int j = 0; j < n; ++j) {
            S.up(k, j) = up(j);
            S.dn(k, j) = dn(j);
        }
    }
    return S;
}

SectionField position_section(const Grid& grid, const Field& phi, const Vec& x0, std::vector<std::string>* warnings) {
    const int n = grid.n;
    for (int a = 0; a < n; ++a)
        if (std::abs(x0(a)) > grid.r) throw ValidationError("probe center outside the box");
    if (warnings && x0.norm() > grid.r / 4)
        warnings->push_back("probe center lies outside U_{r/4}; cutoff support may reach the boundary");
    SectionField P(n, grid.size());
    std::vector<Field> dphi(n);
    for (int a = 0; a < n; ++a) dphi[a] = diff(grid, phi, {a});
    for (std::size_t k = 0; k < grid.size(); ++k)
        for (int a = 0; a < n; ++a) {
            P.up(k, a) = 2.0 * (grid.coord(k, a) - x0(a));
            P.dn(k, a) = 0.5 * dphi[a][k];
        }
    return P;
}

Geometry make_geometry(const Grid& grid, const MetricField& g, const Field& phi) {
    return Geometry{&grid, &g, &phi, christoffel(grid, g), compute_curvature(grid, g, phi)};
}

CField div_h(const Geometry& geo, const SectionField& Y) {
    const Grid& grid = *geo.grid;
    const int n = grid.n;
    const std::size_t M = grid.size();
    // dY[i][c] = (1/2) d_{x^i} of component c (0..n-1 vector part, n..2n-1 form part)
    std::vector<std::vector<CField>> dY(n, std::vector<CField>(2 * n));
    for (int c = 0; c < 2 * n; ++c) {
        CField comp = c < n ? Y.up_component(c) : Y.dn_component(c - n);
        for (int i = 0; i < n; ++i) {
            dY[i][c] = diff(grid, comp, {i});
            for (auto& v : dY[i][c]) v *= 0.5;
        }
    }
    CField out(M);
    parallel_for(M, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const Mat& G = geo.g->at(k);
            Mat Gi = inverse(G);
            Mat ei = inverse(geo.pack.eta[k]);
            Mat A = ei * G;
            Mat B = ei * geo.pack.F[k] * Gi;
            cd s(0.0, 0.0);
            for (int i = 0; i < n; ++i)
                for (int c = 0; c < n; ++c) {
                    cd cov = dY[i][c][k];
                    for (int j = 0; j < n; ++j) cov += geo.gamma(k, c, i, j) * Y.up(k, j);
                    s += cov * A(i, c);
                    s += dY[i][n + c][k] * B(i, c);
                }
            out[k] = s;
        }
    });
    return out;
}

CField div_v(const Geometry& geo, const std::vector<CField>& Y) {
    const Grid& grid = *geo.grid;
    const int n = grid.n;
    const std::size_t M = grid.size();
    const Field& v = geo.pack.abs_zeta;
    CField out(M, cd(0.0, 0.0));
    for (int i = 0; i < n; ++i) {
        CField vy(M);
        for (std::size_t k = 0; k < M; ++k) vy[k] = v[k] * Y[i][k];
        CField d = diff(grid, vy, {i});
        for (std::size_t k = 0; k < M; ++k) out[k] += 0.5 * d[k];
    }
    for (std::size_t k = 0; k < M; ++k) {
        cd s(0.0, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) s += geo.gamma(k, i, i, j) * v[k] * Y[j][k];
        out[k] = (out[k] + s) / v[k];
    }
    return out;
}

SectionField D_op(const Geometry& geo, const Field& f) {
    const Grid& grid = *geo.grid;
    const int n = grid.n;
    std::vector<Field> df(n);
    for (int i = 0; i < n; ++i) df[i] = diff(grid, f, {i});
    SectionField S(n, grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        Vec d(n);
        for (int i = 0; i < n; ++i) d(i) = 0.5 * df[i][k];
        Vec w = geo.pack.eta[k].llt().solve(d);
        Vec fw = geo.pack.F[k] * w;
        for (int j = 0; j < n; ++j) {
            S.up(k, j) = w(j);
            S.dn(k, j) = fw(j);
        }
    }
    return S;
}

IdentityResiduals identity_residuals(const Geometry& geo, const SectionField& Y, const Field& f, const Vec& x0) {
    const Grid& grid = *geo.grid;
    const MetricField& g = *geo.g;
    const int n = grid.n;
    const std::size_t M = grid.size();
    FramePack frames = build_frames(g, geo.pack.F, M);
    std::vector<Field> H = mean_curvature_oneform(grid, geo.pack.theta);
    SectionField Hs = mean_curvature_section(g, geo.pack.F, geo.pack.eta, H);
    IdentityResiduals r;

    Decomposition dY = decompose(Y, frames, g);
    CField dv = div_v(geo, dY.assoc);
    CField dh = div_h(geo, Y);
    CField hy = pairing(Hs, Y, g);
    r.divergence.resize(M);
    for (std::size_t k = 0; k < M; ++k) r.divergence[k] = std::abs(dv[k] - dh[k] - hy[k]);

    SectionField P = position_section(grid, *geo.phi, x0);
    SectionField fP = scale(P, f);
    CField dhfP = div_h(geo, fP);
    CField dfP = pairing(D_op(geo, f), P, g);
    r.position.resize(M);
    for (std::size_t k = 0; k < M; ++k) r.position[k] = std::abs(dhfP[k] - dfP[k] - static_cast<double>(n) * f[k]);

    Field P2 = norm2(P, g);
    Decomposition dP = decompose(P, frames, g);
    Field top2 = norm2(dP.top, g);
    CField dP2P = pairing(D_op(geo, P2), P, g);
    std::vector<Field> dP2(n);
    for (int i = 0; i < n; ++i) dP2[i] = diff(grid, P2, {i});
    r.tangential.resize(M);
    r.gradient.resize(M);
    for (std::size_t k = 0; k < M; ++k) {
        r.tangential[k] = std::abs(dP2P[k] - 2.0 * top2[k]);
        Vec d(n);
        for (int i = 0; i < n; ++i) d(i) = 0.5 * dP2[i][k];
        r.gradient[k] = std::abs(d.dot(geo.pack.eta[k].llt().solve(d)) - 4.0 * top2[k]);
    }
    return r;
}

IntegralIdentity integral_identity(const Geometry& geo, const Field& f, const Vec& x0, double alpha) {
    const Grid& grid = *geo.grid;
    const MetricField& g = *geo.g;
    const int n = grid.n;
    const std::size_t M = grid.size();
    if (grid.bc == Bc::OneSided)
        for (std::size_t k = 0; k < M; ++k)
            if (!grid.interior(k, 1) && f[k] != 0.0)
                throw ValidationError("test function must vanish on the boundary of the box");
    FramePack frames = build_frames(g, geo.pack.F, M);
    std::vector<Field> H = mean_curvature_oneform(grid, geo.pack.theta);
    SectionField Hs = mean_curvature_section(g, geo.pack.F, geo.pack.eta, H);
    SectionField P = position_section(grid, *geo.phi, x0);
    Field P2 = norm2(P, g);
    Field top2 = norm2(decompose(P, frames, g).top, g);
    CField hp = pairing(Hs, P, g);
    CField dfp = pairing(D_op(geo, f), P, g);
    Field L(M), R(M);
    for (std::size_t k = 0; k < M; ++k) {
        double w = std::exp(alpha * P2[k]);
        L[k] = (n + hp[k].real() + 2.0 * alpha * top2[k]) * f[k] * w;
        R[k] = -dfp[k].real() * w;
    }
    IntegralIdentity out;
    out.lhs = integrate_x(grid, L, g, geo.pack.abs_zeta);
    out.rhs = integrate_x(grid, R, g, geo.pack.abs_zeta);
    double den = std::max(std::abs(out.lhs), std::abs(out.rhs));
    out.rel_mismatch = den > 0.0 ? std::abs(out.lhs - out.rhs) / den : 0.0;
    return out;
}

SectionField random_section(const Grid& grid, std::uint64_t seed, int modes) {
    const int n = grid.n;
    std::mt19937_64 rng(seed);
    auto uni = [&](double a, double b) { return a + (b - a) * (static_cast<double>(rng() >> 11) * 0x1.0p-53); };
    SectionField S(n, grid.size());
    for (int c = 0; c < 2 * n; ++c)
        for (int m = 0; m < modes; ++m) {
            Vec kv(n);
            for (int a = 0; a < n; ++a) kv(a) = uni(-2.0, 2.0) / grid.r;
            double ph = uni(0.0, 6.283185307179586);
            cd amp(uni(-1.0, 1.0), uni(-1.0, 1.0));
            for (std::size_t k = 0; k < grid.size(); ++k) {
                cd v = amp * std::sin(kv.dot(grid.point(k)) + ph);
                if (c < n) S.up(k, c) += v;
                else S.dn(k, c - n) += v;
            }
        }
    return S;
}

double max_abs_region(const Grid& grid, const Field& f, double frac) {
    double m = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        bool in = true;
        for (int a = 0; a < grid.n; ++a) in = in && std::abs(grid.coord(k, a)) <= frac * grid.r + 1e-12;
        if (in) m = std::max(m, std::abs(f[k]));
    }
    return m;
}

}  // namespace lbmcf
