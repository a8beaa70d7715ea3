#pragma once

#include "lbmcf/common.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace lbmcf {

enum class Bc { Periodic, OneSided };

std::string to_string(Bc bc);
Bc bc_from_string(const std::string& s);

struct GridConfig {
    int n = 1;
    double r = 1.0;
    double r_prime = 1.0;
    int N = 65;
    Bc bc = Bc::OneSided;
};

// Tensor-product grid on [-r, r]^n. Node order is row-major with axis 0 slowest.
struct Grid {
    int n = 1;
    double r = 1.0;
    double r_prime = 1.0;
    int N = 0;
    Bc bc = Bc::OneSided;
    double h = 0.0;

    std::size_t size() const;
    std::size_t stride(int axis) const;
    int index_on_axis(std::size_t node, int axis) const;
    double coord(int i) const { return -r + h * i; }
    double coord(std::size_t node, int axis) const { return coord(index_on_axis(node, axis)); }
    Vec point(std::size_t node) const;
    std::size_t node(const std::array<int, 3>& idx) const;
    // true when the node sits at least `margin` nodes away from every face
    bool interior(std::size_t node, int margin) const;
};

Grid build_grid(const GridConfig& config);
bool same_shape(const Grid& a, const Grid& b);

struct MetricField {
    int n = 1;
    std::vector<Mat> g;
    bool constant = true;

    const Mat& at(std::size_t node) const { return constant ? g.front() : g[node]; }
};

MetricField constant_metric(const Grid& grid, const Mat& G);
// g(x) = (1 + c|x|^2) G0
MetricField conformal_metric(const Grid& grid, const Mat& G0, double c);
MetricField scaled_metric(const MetricField& g, double k);
void validate_metric(const Grid& grid, const MetricField& g);

// Finite difference along the axes listed (repeats allowed, total order 1..3).
Field diff(const Grid& grid, const Field& f, const std::vector<int>& axes);
CField diff(const Grid& grid, const CField& f, const std::vector<int>& axes);
// derivative of each metric component
std::vector<Mat> diff_metric(const Grid& grid, const MetricField& g, int axis);

// Gamma^k_{ij} = g^{k l} (1/2) d_{x^i} g_{j l}; index (k*n + i)*n + j per node.
struct Christoffel {
    int n = 1;
    bool zero = true;
    std::vector<double> data;
    double operator()(std::size_t node, int k, int i, int j) const {
        return zero ? 0.0 : data[node * n * n * n + (k * n + i) * n + j];
    }
};

Christoffel christoffel(const Grid& grid, const MetricField& g);

// Quadrature weights (trapezoid or rectangle) including h^n.
Field quadrature_weights(const Grid& grid);
// integral of field * weight * det(g) dx; weight may be empty (ones)
double integrate_x(const Grid& grid, const Field& field, const MetricField& g, const Field& weight = {});
// plain integral of field dx
double integrate_plain(const Grid& grid, const Field& field);

double ball_volume(int n, double radius);
double fiber_volume(const Mat& g_at_x0, double r_prime);

double min_eigenvalue(const Mat& m);
// smallest metric eigenvalue over all nodes
double metric_floor(const MetricField& g);

// Multilinear interpolation of a field at a point inside the box.
double interpolate(const Grid& grid, const Field& f, const Vec& x);
Mat interpolate_metric(const Grid& grid, const MetricField& g, const Vec& x);

Field sample(const Grid& grid, const std::function<double(const Vec&)>& fn);

struct Snapshot {
    Grid grid;
    double time = 0.0;
    Field values;
};

void write_snapshot(std::ostream& os, const Grid& grid, double time, const Field& values);
void write_snapshot(const std::string& path, const Grid& grid, double time, const Field& values);
Snapshot read_snapshot(std::istream& is);
Snapshot read_snapshot(const std::string& path);

}  // namespace lbmcf
