#include "lbmcf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

namespace lbmcf {

std::string to_string(Bc bc) { return bc == Bc::Periodic ? "periodic" : "one-sided"; }

Bc bc_from_string(const std::string& s) {
    if (s == "periodic") return Bc::Periodic;
    if (s == "one-sided" || s == "one_sided" || s == "onesided") return Bc::OneSided;
    throw ValidationError("unknown boundary mode '" + s + "'");
}

std::size_t Grid::size() const {
    std::size_t s = 1;
    for (int a = 0; a < n; ++a) s *= static_cast<std::size_t>(N);
    return s;
}

std::size_t Grid::stride(int axis) const {
    std::size_t s = 1;
    for (int a = axis + 1; a < n; ++a) s *= static_cast<std::size_t>(N);
    return s;
}

int Grid::index_on_axis(std::size_t node, int axis) const {
    return static_cast<int>((node / stride(axis)) % static_cast<std::size_t>(N));
}

Vec Grid::point(std::size_t node) const {
    Vec x(n);
    for (int a = 0; a < n; ++a) x(a) = coord(node, a);
    return x;
}

std::size_t Grid::node(const std::array<int, 3>& idx) const {
    std::size_t k = 0;
    for (int a = 0; a < n; ++a) k = k * static_cast<std::size_t>(N) + static_cast<std::size_t>(idx[a]);
    return k;
}

bool Grid::interior(std::size_t node, int margin) const {
    if (bc == Bc::Periodic) return true;
    for (int a = 0; a < n; ++a) {
        int i = index_on_axis(node, a);
        if (i < margin || i > N - 1 - margin) return false;
    }
    return true;
}

Grid build_grid(const GridConfig& c) {
    if (c.n < 1 || c.n > 3) throw ValidationError("dimension n must be 1, 2 or 3");
    if (c.N < 8) throw ValidationError("resolution too small: N must be at least 8");
    if (!std::isfinite(c.r) || !std::isfinite(c.r_prime)) throw ValidationError("radii must be finite");
    if (c.r <= 0 || c.r_prime <= 0) throw ValidationError("radii must be positive");
    Grid g;
    g.n = c.n;
    g.r = c.r;
    g.r_prime = c.r_prime;
    g.N = c.N;
    g.bc = c.bc;
    g.h = c.bc == Bc::Periodic ? 2.0 * c.r / c.N : 2.0 * c.r / (c.N - 1);
    return g;
}

bool same_shape(const Grid& a, const Grid& b) {
    return a.n == b.n && a.N == b.N && a.r == b.r && a.bc == b.bc;
}

MetricField constant_metric(const Grid& grid, const Mat& G) {
    if (G.rows() != grid.n || G.cols() != grid.n) throw ValidationError("metric shape does not match grid dimension");
    MetricField m;
    m.n = grid.n;
    m.constant = true;
    m.g = {G};
    validate_metric(grid, m);
    return m;
}

MetricField conformal_metric(const Grid& grid, const Mat& G0, double c) {
    if (G0.rows() != grid.n || G0.cols() != grid.n) throw ValidationError("metric shape does not match grid dimension");
    MetricField m;
    m.n = grid.n;
    m.constant = (c == 0.0);
    if (m.constant) {
        m.g = {G0};
    } else {
        m.g.resize(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) m.g[k] = (1.0 + c * grid.point(k).squaredNorm()) * G0;
    }
    validate_metric(grid, m);
    return m;
}

MetricField scaled_metric(const MetricField& g, double k) {
    MetricField m = g;
    for (auto& G : m.g) G *= k;
    return m;
}

double min_eigenvalue(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

void validate_metric(const Grid& grid, const MetricField& g) {
    if (!g.constant && g.g.size() != grid.size()) throw ValidationError("metric field size does not match grid");
    for (std::size_t k = 0; k < g.g.size(); ++k) {
        const Mat& G = g.g[k];
        if (!G.allFinite()) throw ValidationError("metric has non-finite entries at node " + std::to_string(k));
        if ((G - G.transpose()).cwiseAbs().maxCoeff() > 1e-14 * (1.0 + G.cwiseAbs().maxCoeff()))
            throw ValidationError("metric is not symmetric at node " + std::to_string(k));
        if (!(min_eigenvalue(G) > 0.0))
            throw ValidationError("metric is not positive definite at node " + std::to_string(k));
    }
}

double metric_floor(const MetricField& g) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& G : g.g) m = std::min(m, min_eigenvalue(G));
    return m;
}

namespace {

template <class T>
T stencil1(const Grid& grid, const T* f, std::size_t node, int axis, int order) {
    const int N = grid.N;
    const std::size_t s = grid.stride(axis);
    const int i = grid.index_on_axis(node, axis);
    const std::size_t base = node - static_cast<std::size_t>(i) * s;
    auto at = [&](int j) -> T {
        if (grid.bc == Bc::Periodic) j = ((j % N) + N) % N;
        return f[base + static_cast<std::size_t>(j) * s];
    };
    const double h = grid.h;
    const bool periodic = grid.bc == Bc::Periodic;
    switch (order) {
        case 1:
            if (periodic || (i > 0 && i < N - 1)) return (at(i + 1) - at(i - 1)) / (2.0 * h);
            if (i == 0) return (-1.5 * at(0) + 2.0 * at(1) - 0.5 * at(2)) / h;
            return (1.5 * at(N - 1) - 2.0 * at(N - 2) + 0.5 * at(N - 3)) / h;
        case 2:
            if (periodic || (i > 0 && i < N - 1)) return (at(i + 1) - 2.0 * at(i) + at(i - 1)) / (h * h);
            if (i == 0) return (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / (h * h);
            return (2.0 * at(N - 1) - 5.0 * at(N - 2) + 4.0 * at(N - 3) - at(N - 4)) / (h * h);
        case 3: {
            const double h3 = h * h * h;
            if (periodic || (i > 1 && i < N - 2))
                return (at(i + 2) - 2.0 * at(i + 1) + 2.0 * at(i - 1) - at(i - 2)) / (2.0 * h3);
            if (i == 0) return (-2.5 * at(0) + 9.0 * at(1) - 12.0 * at(2) + 7.0 * at(3) - 1.5 * at(4)) / h3;
            if (i == 1) return (-1.5 * at(0) + 5.0 * at(1) - 6.0 * at(2) + 3.0 * at(3) - 0.5 * at(4)) / h3;
            if (i == N - 1)
                return (2.5 * at(N - 1) - 9.0 * at(N - 2) + 12.0 * at(N - 3) - 7.0 * at(N - 4) + 1.5 * at(N - 5)) / h3;
            return (1.5 * at(N - 1) - 5.0 * at(N - 2) + 6.0 * at(N - 3) - 3.0 * at(N - 4) + 0.5 * at(N - 5)) / h3;
        }
        default:
            throw ValidationError("derivative order > 3 unsupported");
    }
}

template <class T>
std::vector<T> diff_impl(const Grid& grid, const std::vector<T>& f, const std::vector<int>& axes) {
    if (f.size() != grid.size()) throw ValidationError("field size does not match grid");
    if (axes.empty() || axes.size() > 3) throw ValidationError("derivative order must be 1, 2 or 3");
    std::array<int, 3> count{0, 0, 0};
    for (int a : axes) {
        if (a < 0 || a >= grid.n) throw ValidationError("derivative axis out of range");
        ++count[a];
    }
    std::vector<T> cur = f, next(f.size());
    for (int a = 0; a < grid.n; ++a) {
        if (count[a] == 0) continue;
        parallel_for(cur.size(), [&](std::size_t b, std::size_t e) {
            for (std::size_t k = b; k < e; ++k) next[k] = stencil1(grid, cur.data(), k, a, count[a]);
        });
        std::swap(cur, next);
    }
    return cur;
}

}  // namespace

Field diff(const Grid& grid, const Field& f, const std::vector<int>& axes) { return diff_impl(grid, f, axes); }

CField diff(const Grid& grid, const CField& f, const std::vector<int>& axes) { return diff_impl(grid, f, axes); }

std::vector<Mat> diff_metric(const Grid& grid, const MetricField& g, int axis) {
    const int n = grid.n;
    std::vector<Mat> out(grid.size(), Mat::Zero(n, n));
    if (g.constant) return out;
    Field comp(grid.size());
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            for (std::size_t k = 0; k < grid.size(); ++k) comp[k] = g.g[k](i, j);
            Field d = diff(grid, comp, {axis});
            for (std::size_t k = 0; k < grid.size(); ++k) out[k](i, j) = out[k](j, i) = d[k];
        }
    return out;
}

Christoffel christoffel(const Grid& grid, const MetricField& g) {
    Christoffel c;
    c.n = grid.n;
    c.zero = g.constant;
    if (g.constant) return c;
    const int n = grid.n;
    std::vector<std::vector<Mat>> dg(n);
    for (int i = 0; i < n; ++i) dg[i] = diff_metric(grid, g, i);
    c.data.assign(grid.size() * n * n * n, 0.0);
    parallel_for(grid.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t node = b; node < e; ++node) {
            Eigen::LLT<Mat> llt(g.g[node]);
            if (llt.info() != Eigen::Success)
                throw NumericalError("singular metric in Christoffel symbols at node " + std::to_string(node));
            Mat ginv = llt.solve(Mat::Identity(n, n));
            for (int k = 0; k < n; ++k)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        double s = 0.0;
                        for (int l = 0; l < n; ++l) s += ginv(k, l) * 0.5 * dg[i][node](j, l);
                        c.data[node * n * n * n + (k * n + i) * n + j] = s;
                    }
        }
    });
    return c;
}

Field quadrature_weights(const Grid& grid) {
    std::vector<double> w1(grid.N, grid.h);
    if (grid.bc == Bc::OneSided) {
        w1.front() *= 0.5;
        w1.back() *= 0.5;
    }
    Field w(grid.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        double p = 1.0;
        for (int a = 0; a < grid.n; ++a) p *= w1[grid.index_on_axis(k, a)];
        w[k] = p;
    }
    return w;
}

double integrate_x(const Grid& grid, const Field& field, const MetricField& g, const Field& weight) {
    if (field.size() != grid.size() || (!weight.empty() && weight.size() != grid.size()))
        throw ValidationError("integrand shape does not match grid");
    if (!g.constant && g.g.size() != grid.size()) throw ValidationError("metric shape does not match grid");
    Field q = quadrature_weights(grid);
    const double det0 = g.constant ? g.g.front().determinant() : 0.0;
    Field terms(grid.size());
    parallel_for(terms.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            double d = g.constant ? det0 : g.g[k].determinant();
            double w = weight.empty() ? 1.0 : weight[k];
            terms[k] = q[k] * field[k] * w * d;
        }
    });
    return pairwise_sum(terms);
}

double integrate_plain(const Grid& grid, const Field& field) {
    if (field.size() != grid.size()) throw ValidationError("integrand shape does not match grid");
    Field q = quadrature_weights(grid);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] *= field[k];
    return pairwise_sum(q);
}

double ball_volume(int n, double radius) {
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0) * std::pow(radius, n);
}

double fiber_volume(const Mat& g0, double r_prime) {
    if (!(min_eigenvalue(g0) > 0.0)) throw ValidationError("fiber volume needs a positive definite metric");
    const int n = static_cast<int>(g0.rows());
    return std::sqrt(std::pow(2.0, n) * g0.determinant()) * ball_volume(n, r_prime);
}

namespace {

// cell index and local coordinate along one axis
std::pair<int, double> locate(const Grid& grid, double x) {
    double s = (x + grid.r) / grid.h;
    int last = grid.bc == Bc::Periodic ? grid.N - 1 : grid.N - 2;
    if (s < -1e-9 || s > (grid.bc == Bc::Periodic ? grid.N : grid.N - 1) + 1e-9)
        throw ValidationError("interpolation point outside the box");
    int i = std::clamp(static_cast<int>(std::floor(s)), 0, last);
    return {i, s - i};
}

template <class T, class Get>
T interp_impl(const Grid& grid, const Vec& x, Get get, T zero) {
    std::array<int, 3> i0{0, 0, 0};
    std::array<double, 3> t{0, 0, 0};
    for (int a = 0; a < grid.n; ++a) std::tie(i0[a], t[a]) = locate(grid, x(a));
    T acc = zero;
    for (int corner = 0; corner < (1 << grid.n); ++corner) {
        double w = 1.0;
        std::array<int, 3> idx{0, 0, 0};
        for (int a = 0; a < grid.n; ++a) {
            int bit = (corner >> a) & 1;
            w *= bit ? t[a] : 1.0 - t[a];
            idx[a] = (i0[a] + bit) % grid.N;
        }
        if (w != 0.0) acc = acc + w * get(grid.node(idx));
    }
    return acc;
}

}  // namespace

double interpolate(const Grid& grid, const Field& f, const Vec& x) {
    return interp_impl<double>(grid, x, [&](std::size_t k) { return f[k]; }, 0.0);
}

Mat interpolate_metric(const Grid& grid, const MetricField& g, const Vec& x) {
    if (g.constant) return g.g.front();
    return interp_impl<Mat>(grid, x, [&](std::size_t k) { return g.g[k]; }, Mat::Zero(grid.n, grid.n));
}

Field sample(const Grid& grid, const std::function<double(const Vec&)>& fn) {
    Field f(grid.size());
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = fn(grid.point(k));
    return f;
}

void write_snapshot(std::ostream& os, const Grid& grid, double time, const Field& values) {
    if (values.size() != grid.size()) throw ValidationError("snapshot field size does not match grid");
    os << "LBMCF-SNAPSHOT v1\n";
    os << std::setprecision(17);
    os << "n " << grid.n << "\n";
    os << "N " << grid.N << "\n";
    os << "r " << grid.r << "\n";
    os << "r_prime " << grid.r_prime << "\n";
    os << "bc " << to_string(grid.bc) << "\n";
    os << "time " << time << "\n";
    for (std::size_t k = 0; k < values.size(); ++k) {
        os << values[k];
        os << (((k + 1) % static_cast<std::size_t>(grid.N) == 0) ? '\n' : ' ');
    }
}

void write_snapshot(const std::string& path, const Grid& grid, double time, const Field& values) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write snapshot " + path);
    write_snapshot(os, grid, time, values);
    if (!os) throw Error("failed writing snapshot " + path);
}

Snapshot read_snapshot(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "LBMCF-SNAPSHOT v1") throw ValidationError("not an LBMCF-SNAPSHOT v1 file");
    GridConfig cfg;
    double time = 0.0;
    const char* keys[] = {"n", "N", "r", "r_prime", "bc", "time"};
    for (const char* key : keys) {
        if (!std::getline(is, line)) throw ValidationError(std::string("snapshot header missing '") + key + "'");
        std::istringstream ls(line);
        std::string k, v;
        ls >> k >> v;
        if (k != key) throw ValidationError(std::string("snapshot header expected '") + key + "', got '" + k + "'");
        if (k == "n") cfg.n = std::stoi(v);
        else if (k == "N") cfg.N = std::stoi(v);
        else if (k == "r") cfg.r = std::stod(v);
        else if (k == "r_prime") cfg.r_prime = std::stod(v);
        else if (k == "bc") cfg.bc = bc_from_string(v);
        else time = std::stod(v);
    }
    Snapshot s;
    s.grid = build_grid(cfg);
    s.time = time;
    s.values.resize(s.grid.size());
    for (auto& v : s.values) {
        std::string tok;
        if (!(is >> tok)) throw ValidationError("snapshot has too few values");
        v = std::stod(tok);
    }
    return s;
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read snapshot " + path);
    return read_snapshot(is);
}

}  // namespace lbmcf
