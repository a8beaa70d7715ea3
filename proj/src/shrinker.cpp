#include "lbmcf/shrinker.hpp"

#include "lbmcf/csv.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace lbmcf {

std::string ShrinkerSpec::label() const {
    if (lambda_coef < 0.0) return "self-shrinker";
    if (lambda_coef > 0.0) return "self-expander";
    return "static";
}

Field quadratic_potential(const Grid& grid, const Mat& A, double b) {
    if (A.rows() != grid.n || A.cols() != grid.n) throw ValidationError("quadratic coefficient has wrong shape");
    if (!A.allFinite() || !std::isfinite(b)) throw ValidationError("quadratic coefficients must be finite");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 0.0) throw ValidationError("quadratic coefficient is not symmetric");
    return sample(grid, [&](const Vec& x) { return b + x.dot(A * x); });
}

double value_at_origin(const Grid& grid, const Field& f) {
    std::array<int, 3> centre{0, 0, 0};
    std::array<std::array<double, 3>, 3> w{};
    for (int a = 0; a < grid.n; ++a) {
        int i = static_cast<int>(std::lround(grid.r / grid.h));
        if (i < 1 || i > grid.N - 2) throw ValidationError("origin is not an interior point of the grid");
        centre[a] = i;
        double s = (0.0 - grid.coord(i)) / grid.h;
        w[a] = {0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)};
    }
    double acc = 0.0;
    const int corners = grid.n == 1 ? 3 : grid.n == 2 ? 9 : 27;
    for (int c = 0; c < corners; ++c) {
        std::array<int, 3> idx{0, 0, 0};
        double wt = 1.0;
        int rem = c;
        for (int a = 0; a < grid.n; ++a) {
            int o = rem % 3;
            rem /= 3;
            idx[a] = centre[a] + o - 1;
            wt *= w[a][o];
        }
        if (wt != 0.0) acc += wt * f[grid.node(idx)];
    }
    return acc;
}

Field shrinker_residual(const Grid& grid, const MetricField& g, const Field& phi, double lambda, ShrinkerMode mode) {
    const int n = grid.n;
    CurvaturePack pack = compute_curvature(grid, g, phi);
    std::vector<Field> grad(n);
    for (int a = 0; a < n; ++a) grad[a] = diff(grid, phi, {a});
    Field out(grid.size());
    if (mode == ShrinkerMode::Scalar) {
        const double phi0 = value_at_origin(grid, phi);
        const double theta0 = value_at_origin(grid, pack.theta);
        parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t k = b; k < e; ++k) {
                Vec x = grid.point(k);
                double xg = 0.0;
                for (int a = 0; a < n; ++a) xg += x(a) * grad[a][k];
                out[k] = pack.theta[k] - (2.0 * lambda * (phi[k] - phi0 - 0.5 * xg) + theta0);
            }
        });
        return out;
    }
    std::vector<Field> H = mean_curvature_oneform(grid, pack.theta);
    parallel_for(out.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            Vec x = grid.point(k);
            Vec r(n), dphi(n);
            for (int a = 0; a < n; ++a) dphi(a) = 0.5 * grad[a][k];
            Vec target = lambda * (-2.0 * pack.F[k] * x + dphi);
            for (int a = 0; a < n; ++a) r(a) = H[a][k] - target(a);
            out[k] = std::sqrt(std::max(0.0, r.dot(pack.eta[k].llt().solve(r))));
        }
    });
    return out;
}

namespace {

double max_interior(const Grid& grid, const Field& f, int margin) {
    double m = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k)
        if (grid.bc == Bc::Periodic || grid.interior(k, margin)) m = std::max(m, std::abs(f[k]));
    return m;
}

}  // namespace

FamilyReport self_similar_family_check(const Grid& grid, const MetricField& g, const std::vector<double>& t,
                                       const std::vector<Field>& phi, double tol, int margin) {
    if (t.empty() || t.size() != phi.size()) throw ValidationError("family needs matching times and potentials");
    for (double s : t)
        if (!(s < 0.0)) throw ValidationError("self-similar family times must all be negative");
    const int n = grid.n;
    FamilyReport rep;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double lam = 1.0 / (2.0 * t[i]);
        Field vr = shrinker_residual(grid, g, phi[i], lam, ShrinkerMode::Vector);
        Field sr = shrinker_residual(grid, g, phi[i], lam, ShrinkerMode::Scalar);
        CurvaturePack pack = compute_curvature(grid, g, phi[i]);
        Field sq(vr.size());
        for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = vr[k] * vr[k];
        double mass = integrate_x(grid, Field(grid.size(), 1.0), g, pack.abs_zeta);
        FamilyRow row{t[i], max_interior(grid, vr, margin),
                      std::sqrt(integrate_x(grid, sq, g, pack.abs_zeta) / mass), max_interior(grid, sr, margin)};
        rep.residual = std::max(rep.residual, row.vector_max);
        rep.rows.push_back(row);
    }

    // sample points x with sqrt(-t)|x| <= r/2 for every t
    const double smax = std::sqrt(-*std::min_element(t.begin(), t.end()));
    const int per_axis = 9;
    const int total = n == 1 ? per_axis : n == 2 ? per_axis * per_axis : per_axis * per_axis * per_axis;
    std::vector<std::vector<Field>> hess(n, std::vector<Field>(n));
    std::vector<double> lo(static_cast<std::size_t>(total) * n * n, std::numeric_limits<double>::infinity());
    std::vector<double> hi(lo.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double s = std::sqrt(-t[i]);
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) hess[a][b] = diff(grid, phi[i], {a, b});
        for (int p = 0; p < total; ++p) {
            Vec x(n);
            int rem = p;
            for (int a = 0; a < n; ++a) {
                x(a) = (-1.0 + 2.0 * (rem % per_axis) / (per_axis - 1)) * grid.r / (2.0 * smax);
                rem /= per_axis;
            }
            Vec y = s * x;
            for (int a = 0; a < n; ++a)
                for (int b = a; b < n; ++b) {
                    std::size_t slot = (static_cast<std::size_t>(p) * n + a) * n + b;
                    double v = interpolate(grid, hess[a][b], y);
                    lo[slot] = std::min(lo[slot], v);
                    hi[slot] = std::max(hi[slot], v);
                }
        }
    }
    for (std::size_t s = 0; s < lo.size(); ++s)
        if (std::isfinite(lo[s])) rep.spread = std::max(rep.spread, hi[s] - lo[s]);
    rep.passed = rep.residual <= tol && rep.spread <= tol;
    return rep;
}

double quadratic_fit_residual(const Grid& grid, const Field& phi, Field* coefficients) {
    const int n = grid.n;
    const int m = 1 + n * (n + 1) / 2;
    Eigen::MatrixXd M(static_cast<Eigen::Index>(grid.size()), m);
    Eigen::VectorXd y(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        Vec x = grid.point(k);
        Eigen::Index row = static_cast<Eigen::Index>(k);
        M(row, 0) = 1.0;
        int c = 1;
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) M(row, c++) = x(a) * x(b);
        y(row) = phi[k];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
    qr.setThreshold(1e-10);
    if (qr.rank() < m) throw ValidationError("quadratic fit is ill-conditioned on this grid");
    Eigen::VectorXd coef = qr.solve(y);
    Eigen::VectorXd res = y - M * coef;
    double scale = y.cwiseAbs().maxCoeff();
    if (coefficients) coefficients->assign(coef.data(), coef.data() + coef.size());
    if (scale == 0.0) return 0.0;
    return res.cwiseAbs().maxCoeff() / scale;
}

LiouvilleVerdict liouville_probe(const Grid& grid, const Field& phi, const FamilyReport& family) {
    if (!family.passed) throw ValidationError("self-similar family check failed; Liouville probe not invoked");
    LiouvilleVerdict v{};
    v.fit_residual = quadratic_fit_residual(grid, phi, &v.coefficients);
    v.consistent = v.fit_residual <= std::max(10.0 * family.residual, 1e-12);
    return v;
}

std::string shrinker_csv(const Grid& grid, const FamilyReport& family, const std::vector<Field>& phi) {
    CsvWriter w({"t", "vector_residual_L2", "scalar_residual_max", "fit_residual"});
    for (std::size_t i = 0; i < family.rows.size(); ++i) {
        const auto& r = family.rows[i];
        w.row({r.t, r.vector_L2, r.scalar_max, quadratic_fit_residual(grid, phi[i])});
    }
    return w.str();
}

}  // namespace lbmcf
