#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lbmcf {

// Small dense blocks; n never exceeds 3, so no heap allocation.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
using CVec = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, 1, 0, 3, 1>;
using cd = std::complex<double>;

using Field = std::vector<double>;
using CField = std::vector<cd>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// bad input or configuration
class ValidationError : public Error {
public:
    using Error::Error;
};

// NaN, breakdown of positivity, instability
class NumericalError : public Error {
public:
    using Error::Error;
};

void set_threads(int n);
int threads();

// Runs fn(begin, end) over contiguous chunks of [0, count). Chunks never
// share output locations, so results do not depend on the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& fn);

// Fixed-shape recursive summation; the tree depends only on v.size().
double pairwise_sum(const double* v, std::size_t count);
inline double pairwise_sum(const Field& v) { return pairwise_sum(v.data(), v.size()); }

double max_abs(const Field& v);

}  // namespace lbmcf
