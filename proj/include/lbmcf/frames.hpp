#pragma once

#include "lbmcf/curvature.hpp"

#include <cstdint>

namespace lbmcf {

// Sections of T^{1,0} + Lambda^{0,1}: per node (Y^1..Y^n, Y_1bar..Y_nbar).
struct SectionField {
    int n = 1;
    CField data;

    SectionField() = default;
    SectionField(int n_, std::size_t nodes) : n(n_), data(nodes * 2 * n_, cd(0.0, 0.0)) {}
    std::size_t nodes() const { return data.size() / (2 * n); }
    cd& up(std::size_t k, int j) { return data[k * 2 * n + j]; }
    cd up(std::size_t k, int j) const { return data[k * 2 * n + j]; }
    cd& dn(std::size_t k, int j) { return data[k * 2 * n + n + j]; }
    cd dn(std::size_t k, int j) const { return data[k * 2 * n + n + j]; }
    CField up_component(int j) const;
    CField dn_component(int j) const;
};

SectionField operator+(const SectionField& a, const SectionField& b);
SectionField operator-(const SectionField& a, const SectionField& b);
SectionField scale(const SectionField& a, const Field& f);
SectionField scale(const SectionField& a, double s);

struct FramePack {
    int n = 1;
    std::vector<SectionField> E, Fn;
    std::vector<Mat> eta;
};

FramePack build_frames(const MetricField& g, const std::vector<Mat>& F, std::size_t nodes);

// <conj(Y), Z>
CField pairing(const SectionField& Y, const SectionField& Z, const MetricField& g);
Field norm2(const SectionField& Y, const MetricField& g);

struct Decomposition {
    SectionField top, perp;
    std::vector<CField> assoc;  // coefficients of d/dz^i
};

Decomposition decompose(const SectionField& Y, const FramePack& frames, const MetricField& g);

SectionField mean_curvature_section(const MetricField& g, const std::vector<Mat>& F, const std::vector<Mat>& eta,
                                    const std::vector<Field>& H);

// x0 outside U_{r/4} appends a warning when warnings is non-null
SectionField position_section(const Grid& grid, const Field& phi, const Vec& x0,
                              std::vector<std::string>* warnings = nullptr);

struct Geometry {
    const Grid* grid;
    const MetricField* g;
    const Field* phi;
    Christoffel gamma;
    CurvaturePack pack;
};

Geometry make_geometry(const Grid& grid, const MetricField& g, const Field& phi);
// Geometry keeps pointers to its inputs.
Geometry make_geometry(const Grid&, const MetricField&, Field&&) = delete;
Geometry make_geometry(const Grid&, MetricField&&, const Field&) = delete;
Geometry make_geometry(Grid&&, const MetricField&, const Field&) = delete;

CField div_h(const Geometry& geo, const SectionField& Y);
// v-weighted divergence of a (1,0) vector field, v = |zeta|
CField div_v(const Geometry& geo, const std::vector<CField>& Y);
SectionField D_op(const Geometry& geo, const Field& f);

struct IdentityResiduals {
    Field divergence;  // div_v(assoc Y_top) - div_h Y - <conj H, Y>
    Field position;    // div_h(f P) - <conj D f, P> - n f
    Field tangential;  // <conj D|P|^2, P> - 2|P_top|^2
    Field gradient;    // |d|P|^2|^2_eta - 4|P_top|^2
};

IdentityResiduals identity_residuals(const Geometry& geo, const SectionField& Y, const Field& f, const Vec& x0);

struct IntegralIdentity {
    double lhs, rhs, rel_mismatch;
};

// Integrated position identity with weight exp(alpha |P|^2); f must vanish near the faces.
IntegralIdentity integral_identity(const Geometry& geo, const Field& f, const Vec& x0, double alpha);

// Seeded trigonometric section used by the identity checks.
SectionField random_section(const Grid& grid, std::uint64_t seed, int modes = 3);

// Maximum of |field| over nodes with |x_a| <= frac * r on every axis.
double max_abs_region(const Grid& grid, const Field& f, double frac);

}  // namespace lbmcf
