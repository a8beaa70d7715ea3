#include "lbmcf/curvature.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace lbmcf;

namespace {

Mat m1(double v) {
    Mat m(1, 1);
    m << v;
    return m;
}

Mat m2(double a, double b, double c, double d) {
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

std::size_t node_at(const Grid& g, double x) { return static_cast<std::size_t>(std::lround((x + g.r) / g.h)); }

Field seeded_potential(const Grid& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double c[6];
    for (double& v : c) v = u(rng);
    return sample(g, [&](const Vec& x) {
        double s = c[0] * std::sin(2 * x(0) + c[1]) + c[2] * x(0) * x(0) * x(0);
        if (g.n > 1) s += c[3] * std::cos(1.5 * x(1)) * x(0) + c[4] * x(1) * x(1) * x(1) + c[5] * std::sin(x(0) * x(1));
        return 3 * s;
    });
}

}  // namespace

TEST_CASE("curvature_F examples") {
    Grid g = build_grid({1, 1.0, 1.0, 33, Bc::OneSided});
    auto F = curvature_F(g, sample(g, [](const Vec& x) { return x(0) * x(0); }));
    for (const auto& f : F) CHECK(f(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

    Grid w = build_grid({1, 2.0, 1.0, 401, Bc::OneSided});
    auto F4 = curvature_F(w, sample(w, [](const Vec& x) { return std::pow(x(0), 4); }));
    CHECK(std::abs(F4[node_at(w, 1.0)](0, 0) - oracle::quartic_F(1.0)) < 1e-3);

    Grid g2 = build_grid({2, 1.0, 1.0, 17, Bc::OneSided});
    auto F2 = curvature_F(g2, sample(g2, [](const Vec& x) { return x(0) * x(1); }));
    for (const auto& f : F2) {
        CHECK(f(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(std::abs(f(0, 1) - 0.25) < 1e-12);
        CHECK(f(0, 1) == f(1, 0));
    }
}

TEST_CASE("generalized eigenvalues") {
    Vec l = generalized_eigenvalues(m1(1.0), m1(0.5));
    CHECK(l(0) == doctest::Approx(0.5));
    l = generalized_eigenvalues(Mat::Identity(2, 2), m2(1, 0, 0, -1));
    CHECK(l(0) == doctest::Approx(-1.0));
    CHECK(l(1) == doctest::Approx(1.0));
    l = generalized_eigenvalues(m2(4, 0, 0, 1), m2(2, 0, 0, 3));
    CHECK(l(0) == doctest::Approx(0.5));
    CHECK(l(1) == doctest::Approx(3.0));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        double a = u(rng), b = u(rng), c = u(rng);
        std::array<double, 4> G{2 + a, 0.3 * b, 0.3 * b, 1.5 + c};
        std::array<double, 4> F{3 * u(rng), u(rng), 0, 2 * u(rng)};
        F[2] = F[1];
        auto [lo, hi] = oracle::gen_eigs_2x2(G, F);
        Vec e = generalized_eigenvalues(m2(G[0], G[1], G[2], G[3]), m2(F[0], F[1], F[2], F[3]));
        CHECK(e(0) == doctest::Approx(lo).epsilon(1e-12));
        CHECK(e(1) == doctest::Approx(hi).epsilon(1e-12));
    }
    CHECK_THROWS_AS(generalized_eigenvalues(m1(-1.0), m1(1.0)), NumericalError);
}

TEST_CASE("angle_zeta examples") {
    Angle a = angle_zeta(Vec::Zero(1));
    CHECK(a.theta == 0.0);
    CHECK(a.zeta == cd(1.0, 0.0));
    CHECK(a.abs_zeta == 1.0);

    Vec l(1);
    l << 0.5;
    a = angle_zeta(l);
    CHECK(a.theta == doctest::Approx(0.4636476090008061).epsilon(1e-14));
    CHECK(a.zeta.real() == doctest::Approx(1.0));
    CHECK(a.zeta.imag() == doctest::Approx(0.5));
    CHECK(a.abs_zeta == doctest::Approx(std::sqrt(1.25)).epsilon(1e-14));

    Vec l2(2);
    l2 << 1.0, 1.0;
    a = angle_zeta(l2);
    CHECK(a.theta == doctest::Approx(oracle::pi / 2).epsilon(1e-14));
    CHECK(std::abs(a.zeta - cd(0.0, 2.0)) < 1e-14);
    CHECK(a.abs_zeta == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("induced_eta examples") {
    CHECK(induced_eta(m1(1.0), m1(0.5))(0, 0) == doctest::Approx(1.25));
    CHECK(induced_eta(Mat::Identity(2, 2), Mat::Zero(2, 2)).isApprox(Mat::Identity(2, 2)));
    CHECK(induced_eta(m1(1.0), m1(3.0))(0, 0) == doctest::Approx(10.0));
}

TEST_CASE("mean curvature one-form") {
    Grid g = build_grid({1, 1.0, 1.0, 33, Bc::OneSided});
    CurvaturePack q = compute_curvature(g, constant_metric(g, m1(1.0)), sample(g, [](const Vec& x) { return 2 * x(0) * x(0) + x(0); }));
    auto Hq = mean_curvature_oneform(g, q.theta);
    for (double v : Hq[0]) CHECK(std::abs(v) < 1e-12);

    Grid w = build_grid({1, 2.0, 1.0, 401, Bc::OneSided});
    CurvaturePack p = compute_curvature(w, constant_metric(w, m1(1.0)), sample(w, [](const Vec& x) { return std::pow(x(0), 4); }));
    auto H = mean_curvature_oneform(w, p.theta);
    CHECK(std::abs(H[0][node_at(w, 1.0)] - oracle::quartic_H(1.0)) < 1e-3);
    CHECK(std::abs(H[0][node_at(w, 1.0)] - 0.3) < 1e-3);
}

TEST_CASE("laplacian_eta examples") {
    Grid g = build_grid({1, 1.0, 1.0, 33, Bc::OneSided});
    Field x2 = sample(g, [](const Vec& x) { return x(0) * x(0); });
    for (double v : laplacian_eta(g, x2, std::vector<Mat>(g.size(), m1(1.0)))) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
    for (double v : laplacian_eta(g, x2, std::vector<Mat>(g.size(), m1(10.0)))) CHECK(v == doctest::Approx(0.05).epsilon(1e-12));
    for (double v : laplacian_eta(g, Field(g.size(), 3.0), std::vector<Mat>(g.size(), m1(2.0)))) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("dhym residual") {
    Grid g = build_grid({1, 1.0, 1.0, 65, Bc::OneSided});
    MetricField I = constant_metric(g, m1(1.0));
    for (double v : dhym_residual(g, compute_curvature(g, I, Field(g.size(), 0.0)))) CHECK(v == 0.0);
    for (double v : dhym_residual(g, compute_curvature(g, I, sample(g, [](const Vec& x) { return x(0) * x(0); }))))
        CHECK(std::abs(v) < 1e-12);

    // symbolic oracle at x = 0.5, second-order convergence
    auto err = [](int N) {
        Grid w = build_grid({1, 2.0, 1.0, N, Bc::OneSided});
        Field phi = sample(w, [](const Vec& x) { return std::pow(x(0), 4); });
        Field L = dhym_residual(w, compute_curvature(w, constant_metric(w, m1(1.0)), phi));
        return std::abs(L[node_at(w, 0.5)] - oracle::quartic_L_eta_theta(0.5));
    };
    double e1 = err(201), e2 = err(401);
    CHECK(e2 < 2e-3);
    CHECK(e1 / e2 > 3.0);
}

TEST_CASE("volume functional examples") {
    Grid g = build_grid({1, 1.0, 1.0, 65, Bc::OneSided});
    MetricField I = constant_metric(g, m1(1.0));
    CHECK(volume_functional(g, I, compute_curvature(g, I, Field(g.size(), 0.0)).abs_zeta) == doctest::Approx(4.0).epsilon(1e-14));
    Field x2 = sample(g, [](const Vec& x) { return x(0) * x(0); });
    CHECK(std::abs(volume_functional(g, I, compute_curvature(g, I, x2).abs_zeta) - std::sqrt(1.25) * 4) < 1e-6);

    // Richardson on two fine grids against a Simpson oracle
    auto V = [](int N) {
        Grid w = build_grid({1, 1.0, 1.0, N, Bc::OneSided});
        MetricField J = constant_metric(w, m1(1.0));
        return volume_functional(w, J, compute_curvature(w, J, sample(w, [](const Vec& x) { return std::pow(x(0), 4); })).abs_zeta);
    };
    double v = oracle::richardson2(V(2001), V(4001));
    CHECK(std::abs(v - oracle::quartic_volume(1.0, 1.0)) < 1e-6);
}

TEST_CASE("pointwise structure invariants on seeded potentials") {
    for (int n = 1; n <= 2; ++n) {
        Grid g = build_grid({n, 1.0, 1.0, n == 1 ? 128 : 24, Bc::OneSided});
        MetricField met = n == 1 ? constant_metric(g, m1(1.7)) : conformal_metric(g, m2(1.3, 0.2, 0.2, 0.8), 0.4);
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            CurvaturePack p = compute_curvature(g, met, seeded_potential(g, seed));
            for (std::size_t k = 0; k < g.size(); ++k) {
                std::vector<double> G(met.at(k).data(), met.at(k).data() + n * n), F(p.F[k].data(), p.F[k].data() + n * n);
                auto K = oracle::matmul(oracle::inverse(G, n), F, n);
                auto K2 = oracle::matmul(K, K, n);
                for (int i = 0; i < n; ++i) K2[i * n + i] += 1.0;
                double d = oracle::det(K2, n);
                CHECK(std::abs(p.abs_zeta[k] * p.abs_zeta[k] - d) <= 1e-12 * d);
                CHECK(p.abs_zeta[k] >= 1.0 - 1e-12);
                CHECK(std::abs(std::arg(p.zeta[k]) - p.theta[k]) < 1e-12);
                CHECK(std::abs(p.theta[k]) < oracle::pi * n / 2);
                std::vector<double> diffm(n * n);
                for (int i = 0; i < n * n; ++i) diffm[i] = p.eta[k].data()[i] - G[i];
                CHECK(oracle::sym_min_eig(diffm, n) >= -1e-12);
            }
        }
    }
}

TEST_CASE("grad F norm scales like 1/k under g -> kg") {
    Grid g = build_grid({1, 1.0, 1.0, 129, Bc::OneSided});
    Field phi = sample(g, [](const Vec& x) { return std::pow(x(0), 4) + std::sin(x(0)); });
    MetricField a = constant_metric(g, m1(1.0));
    MetricField b = scaled_metric(a, 3.0);
    Field phib = phi;
    for (double& v : phib) v *= 3.0;
    Field na = grad_F_norm2(g, a, curvature_F(g, phi)), nb = grad_F_norm2(g, b, curvature_F(g, phib));
    for (std::size_t k = 0; k < g.size(); k += 7)
        if (na[k] > 1e-8) CHECK(nb[k] / na[k] == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}
