#pragma once

#include "lbmcf/grid.hpp"

namespace lbmcf {

// Conventions on y-invariant data: d_j = (1/2) d/dx^j, F_{jk} = (1/4) d^2 phi / dx^j dx^k.
struct CurvaturePack {
    int n = 1;
    std::vector<Mat> F, K, eta;
    std::vector<Vec> lambdas;
    CField zeta;
    Field theta, abs_zeta;
};

std::vector<Mat> curvature_F(const Grid& grid, const Field& phi);

// Generalized eigenvalues of (F, G), ascending.
Vec generalized_eigenvalues(const Mat& G, const Mat& F);

struct Angle {
    double theta;
    cd zeta;
    double abs_zeta;
};
Angle angle_zeta(const Vec& lambdas);

Mat induced_eta(const Mat& G, const Mat& F);

CurvaturePack compute_curvature(const Grid& grid, const MetricField& g, const Field& phi);
// theta only; same arithmetic as compute_curvature
Field angle_field(const Grid& grid, const MetricField& g, const Field& phi);

// H_j = (1/2) d theta / dx^j, one field per axis
std::vector<Field> mean_curvature_oneform(const Grid& grid, const Field& theta);

Field laplacian_eta(const Grid& grid, const Field& f, const std::vector<Mat>& eta);

Field dhym_residual(const Grid& grid, const CurvaturePack& pack);

double volume_functional(const Grid& grid, const MetricField& g, const Field& abs_zeta);

// |nabla F|^2 measured with g
Field grad_F_norm2(const Grid& grid, const MetricField& g, const std::vector<Mat>& F);

}  // namespace lbmcf
