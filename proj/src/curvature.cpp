#include "lbmcf/curvature.hpp"

#include <algorithm>
#include <cmath>

namespace lbmcf {

std::vector<Mat> curvature_F(const Grid& grid, const Field& phi) {
    const int n = grid.n;
    std::vector<Mat> F(grid.size(), Mat::Zero(n, n));
    for (int j = 0; j < n; ++j)
        for (int k = j; k < n; ++k) {
            Field d = diff(grid, phi, {j, k});
            for (std::size_t i = 0; i < d.size(); ++i) F[i](j, k) = F[i](k, j) = 0.25 * d[i];
        }
    return F;
}

namespace {

Mat cholesky_lower(const Mat& G) {
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success) throw NumericalError("metric is not positive definite (Cholesky failed)");
    return llt.matrixL();
}

}  // namespace

Vec generalized_eigenvalues(const Mat& G, const Mat& F) {
    const int n = static_cast<int>(G.rows());
    Vec lam(n);
    if (n == 1) {
        if (!(G(0, 0) > 0.0)) throw NumericalError("metric is not positive definite");
        lam(0) = F(0, 0) / G(0, 0);
        return lam;
    }
    Mat L = cholesky_lower(G);
    // C = L^{-1} F L^{-T}
    Mat Linv = L.triangularView<Eigen::Lower>().solve(Mat::Identity(n, n));
    Mat C = Linv * F * Linv.transpose();
    C = 0.5 * (C + C.transpose());
    if (n == 2) {
        double m = 0.5 * (C(0, 0) + C(1, 1));
        double d = std::hypot(0.5 * (C(0, 0) - C(1, 1)), C(0, 1));
        lam(0) = m - d;
        lam(1) = m + d;
        return lam;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(C, Eigen::EigenvaluesOnly);
    lam = es.eigenvalues();
    std::sort(lam.data(), lam.data() + n);
    return lam;
}

Angle angle_zeta(const Vec& lambdas) {
    Angle a{0.0, cd(1.0, 0.0), 1.0};
    for (int i = 0; i < lambdas.size(); ++i) {
        a.theta += std::atan(lambdas(i));
        a.zeta *= cd(1.0, lambdas(i));
        a.abs_zeta *= std::hypot(1.0, lambdas(i));
    }
    return a;
}

Mat induced_eta(const Mat& G, const Mat& F) {
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success) throw NumericalError("metric is not positive definite");
    Mat e = G + F * llt.solve(F);
    return 0.5 * (e + e.transpose());
}

CurvaturePack compute_curvature(const Grid& grid, const MetricField& g, const Field& phi) {
    if (phi.size() != grid.size()) throw ValidationError("potential size does not match grid");
    const int n = grid.n;
    CurvaturePack p;
    p.n = n;
    p.F = curvature_F(grid, phi);
    const std::size_t M = grid.size();
    p.K.resize(M);
    p.eta.resize(M);
    p.lambdas.resize(M);
    p.zeta.resize(M);
    p.theta.resize(M);
    p.abs_zeta.resize(M);
    parallel_for(M, [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            const Mat& G = g.at(k);
            const Mat& F = p.F[k];
            if (!F.allFinite()) throw NumericalError("non-finite curvature at node " + std::to_string(k));
            Eigen::LLT<Mat> llt(G);
            p.K[k] = llt.solve(F);
            p.eta[k] = induced_eta(G, F);
            p.lambdas[k] = generalized_eigenvalues(G, F);
            Angle a = angle_zeta(p.lambdas[k]);
            p.theta[k] = a.theta;
            p.zeta[k] = a.zeta;
            p.abs_zeta[k] = a.abs_zeta;
        }
    });
    return p;
}

Field angle_field(const Grid& grid, const MetricField& g, const Field& phi) {
    if (phi.size() != grid.size()) throw ValidationError("potential size does not match grid");
    std::vector<Mat> F = curvature_F(grid, phi);
    Field theta(grid.size());
    parallel_for(theta.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            if (!F[k].allFinite()) throw NumericalError("non-finite curvature at node " + std::to_string(k));
            theta[k] = angle_zeta(generalized_eigenvalues(g.at(k), F[k])).theta;
        }
    });
    return theta;
}

std::vector<Field> mean_curvature_oneform(const Grid& grid, const Field& theta) {
    std::vector<Field> H(grid.n);
    for (int j = 0; j < grid.n; ++j) {
        H[j] = diff(grid, theta, {j});
        for (double& v : H[j]) v *= 0.5;
    }
    return H;
}

Field laplacian_eta(const Grid& grid, const Field& f, const std::vector<Mat>& eta) {
    const int n = grid.n;
    std::vector<std::vector<Field>> hess(n, std::vector<Field>(n));
    for (int j = 0; j < n; ++j)
        for (int k = j; k < n; ++k) hess[j][k] = diff(grid, f, {j, k});
    Field out(grid.size());
    parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            Mat inv = eta[i].llt().solve(Mat::Identity(n, n));
            double s = 0.0;
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) s += inv(j, k) * hess[std::min(j, k)][std::max(j, k)][i];
            out[i] = 0.25 * s;
        }
    });
    return out;
}

Field dhym_residual(const Grid& grid, const CurvaturePack& pack) {
    const int n = grid.n;
    Field lap = laplacian_eta(grid, pack.theta, pack.eta);
    std::vector<Field> dth = mean_curvature_oneform(grid, pack.theta);
    Field out(grid.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        Vec d(n);
        for (int j = 0; j < n; ++j) d(j) = dth[j][i];
        Vec w = pack.eta[i].llt().solve(pack.K[i] * d);
        out[i] = lap[i] - d.dot(w);
    }
    return out;
}

double volume_functional(const Grid& grid, const MetricField& g, const Field& abs_zeta) {
    return ball_volume(grid.n, grid.r_prime) * integrate_x(grid, abs_zeta, g);
}

Field grad_F_norm2(const Grid& grid, const MetricField& g, const std::vector<Mat>& F) {
    const int n = grid.n;
    Christoffel gam = christoffel(grid, g);
    // dF[l][node] = (1/2) d_{x^l} F
    std::vector<std::vector<Mat>> dF(n, std::vector<Mat>(grid.size(), Mat::Zero(n, n)));
    Field comp(grid.size());
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            for (std::size_t k = 0; k < comp.size(); ++k) comp[k] = F[k](a, b);
            for (int l = 0; l < n; ++l) {
                Field d = diff(grid, comp, {l});
                for (std::size_t k = 0; k < comp.size(); ++k) dF[l][k](a, b) = dF[l][k](b, a) = 0.5 * d[k];
            }
        }
    Field out(grid.size());
    parallel_for(out.size(), [&](std::size_t b0, std::size_t e0) {
        for (std::size_t k = b0; k < e0; ++k) {
            Mat ginv = g.at(k).llt().solve(Mat::Identity(n, n));
            // T[l](a, j) = nabla_l F_{a j} = d_l F_{aj} - Gamma^m_{l j} F_{a m}
            std::array<Mat, 3> T;
            for (int l = 0; l < n; ++l) {
                T[l] = dF[l][k];
                for (int a = 0; a < n; ++a)
                    for (int j = 0; j < n; ++j)
                        for (int m = 0; m < n; ++m) T[l](a, j) -= gam(k, m, l, j) * F[k](a, m);
            }
            double s = 0.0;
            for (int l = 0; l < n; ++l)
                for (int lp = 0; lp < n; ++lp) {
                    if (ginv(l, lp) == 0.0) continue;
                    s += ginv(l, lp) * (ginv * T[l] * ginv * T[lp].transpose()).trace();
                }
            out[k] = s;
        }
    });
    return out;
}

}  // namespace lbmcf
