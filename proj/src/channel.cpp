#include "subsparse/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace subsparse {

SensingMatrix::SensingMatrix(int rows_, int cols_, std::uint64_t seed_)
    : rows(rows_), cols(cols_), seed(seed_) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("sensing matrix: rows and cols must be positive");
}

Vector SensingMatrix::row(int i) const {
    Vector r(cols);
    const std::uint64_t base = static_cast<std::uint64_t>(i) * cols;
    for (int j = 0; j < cols; ++j) r[j] = normal_at(seed, base + j);
    return r;
}

Eigen::MatrixXd SensingMatrix::dense() const {
    Eigen::MatrixXd A(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const std::uint64_t base = static_cast<std::uint64_t>(i) * cols;
        for (int j = 0; j < cols; ++j) A(i, j) = normal_at(seed, base + j);
    }
    return A;
}

Vector SensingMatrix::apply(const Vector& x) const {
    if (x.size() != cols)
        throw std::invalid_argument("sensing matrix: dimension mismatch in apply");
    Vector y(rows);
    for (int i = 0; i < rows; ++i) {
        const std::uint64_t base = static_cast<std::uint64_t>(i) * cols;
        double acc = 0.0;
        for (int j = 0; j < cols; ++j) acc += normal_at(seed, base + j) * x[j];
        y[i] = acc;
    }
    return y;
}

Vector SensingMatrix::apply_adjoint(const Vector& r) const {
    if (r.size() != rows)
        throw std::invalid_argument("sensing matrix: dimension mismatch in apply_adjoint");
    Vector z = Vector::Zero(cols);
    for (int i = 0; i < rows; ++i) {
        const std::uint64_t base = static_cast<std::uint64_t>(i) * cols;
        const double ri = r[i];
        for (int j = 0; j < cols; ++j) z[j] += normal_at(seed, base + j) * ri;
    }
    return z;
}

double delta_of(int M_meas, const ProblemDims& dims) {
    if (M_meas < 1)
        throw std::invalid_argument("delta_of: M_meas must be positive");
    if (dims.N <= dims.k)
        throw std::invalid_argument("delta_of: require N > k");
    return M_meas / (dims.k * dims.log_ratio());
}

CsDims CsDims::from_measurements(int M_meas, const ProblemDims& dims) {
    CsDims d;
    d.M_meas = M_meas;
    d.delta = delta_of(M_meas, dims);
    return d;
}

CsDims CsDims::from_delta(double delta, const ProblemDims& dims) {
    if (!(delta > 0.0))
        throw std::invalid_argument("cs dims: delta must be positive");
    CsDims d;
    d.M_meas = static_cast<int>(std::lround(delta * dims.k * dims.log_ratio()));
    if (d.M_meas < 1) d.M_meas = 1;
    d.delta = delta;
    return d;
}

ObservedVector awgn_transmit(const SparseSignal& x, const NoiseModel& noise,
                             Rng& rng) {
    Vector y(x.n);
    const double sd = std::sqrt(noise.sigma_eff_sq);
    for (int i = 0; i < x.n; ++i) y[i] = sd * rng.normal();
    for (std::size_t s = 0; s < x.support.size(); ++s)
        y[x.support[s]] += x.values[s];
    return y;
}

ObservedVector cs_measure(const SparseSignal& x, const SensingMatrix& A,
                          double sigma_sq, Rng& rng) {
    if (A.cols != x.n)
        throw std::invalid_argument("cs_measure: matrix and signal dimensions differ");
    const int k = x.k();
    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    const double sd = std::sqrt(sigma_sq);
    Vector y(A.rows);
    for (int i = 0; i < A.rows; ++i) {
        const std::uint64_t base = static_cast<std::uint64_t>(i) * A.cols;
        double acc = 0.0;
        // Only the k supported columns contribute to A x.
        for (std::size_t s = 0; s < x.support.size(); ++s)
            acc += normal_at(A.seed, base + x.support[s]) * x.values[s];
        y[i] = scale * acc + sd * rng.normal();
    }
    return y;
}

}  // namespace subsparse
