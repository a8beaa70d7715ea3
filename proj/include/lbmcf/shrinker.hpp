#pragma once

#include "lbmcf/curvature.hpp"

#include <string>

namespace lbmcf {

// H = lambda_coef P_perp
struct ShrinkerSpec {
    double lambda_coef = -0.5;
    double theta0 = 0.0;
    double phi0 = 0.0;

    std::string label() const;
};

// phi = b + A_ij x^i x^j
Field quadratic_potential(const Grid& grid, const Mat& A, double b);

enum class ShrinkerMode { Scalar, Vector };

// Value at x = 0 by tensor-product quadratic interpolation on the nearest nodes.
double value_at_origin(const Grid& grid, const Field& f);

// Scalar: theta - [2 lambda (phi - phi(0) - x.grad phi / 2) + theta(0)].
// Vector: eta^{-1} norm of H - lambda (-2 F x + grad phi / 2).
Field shrinker_residual(const Grid& grid, const MetricField& g, const Field& phi, double lambda, ShrinkerMode mode);

struct FamilyRow {
    double t;
    double vector_max;   // sup over the interior region
    double vector_L2;    // mean square over the box with dmu, square-rooted
    double scalar_max;
};

struct FamilyReport {
    std::vector<FamilyRow> rows;
    double residual = 0.0;  // max over times of vector_max
    double spread = 0.0;    // max over sampled x and Hessian entries of max_t - min_t of psi(sqrt(-t) x, t)
    bool passed = false;
};

// phi[i] sampled at t[i] < 0; residuals use lambda = 1/(2t).
// Pointwise maxima skip `margin` nodes next to the faces.
FamilyReport self_similar_family_check(const Grid& grid, const MetricField& g, const std::vector<double>& t,
                                       const std::vector<Field>& phi, double tol, int margin = 2);

struct LiouvilleVerdict {
    double fit_residual;  // |phi - quad|_inf / |phi|_inf
    Field coefficients;   // b, then a_ij for i <= j
    bool consistent;
};

// Least-squares fit of b + a_ij x^i x^j. Throws when the family check did not pass.
LiouvilleVerdict liouville_probe(const Grid& grid, const Field& phi, const FamilyReport& family);

// Quadratic fit residual without the family guard.
double quadratic_fit_residual(const Grid& grid, const Field& phi, Field* coefficients = nullptr);

std::string shrinker_csv(const Grid& grid, const FamilyReport& family, const std::vector<Field>& phi);

}  // namespace lbmcf
