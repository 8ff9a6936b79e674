#ifndef SUBSPARSE_CORE_HPP
#define SUBSPARSE_CORE_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "subsparse/rng.hpp"

// Core problem domain: discrete non-zero alphabets, problem dimensions in
// the sublinear-sparsity regime, the scaled noise model, and k-sparse
// signals. Indices are 0-based; all logarithms are natural.

namespace subsparse {

using Vector = Eigen::VectorXd;
using ObservedVector = Eigen::VectorXd;

// The value set U: M distinct non-zero reals. d_min/d_max are gaps between
// distinct pairs and are NaN sentinels when M = 1 (no pair exists).
struct Alphabet {
    std::vector<double> points;
    double u_min = 0.0;
    double u_max = 0.0;
    double d_min = 0.0;
    double d_max = 0.0;

    static Alphabet from_points(std::vector<double> pts);

    int M() const { return static_cast<int>(points.size()); }
    bool has_gaps() const { return points.size() > 1; }
};

struct ProblemDims {
    int N = 0;
    int k = 0;
    std::optional<double> gamma;  // target ratio log k / log N, if tracked

    ProblemDims(int N_, int k_);

    double ratio() const { return static_cast<double>(N) / k; }
    double log_ratio() const;  // ln(N/k)
};

// Per-sample effective noise variance sigma^2 / ln(N/k).
double effective_noise_variance(double sigma_sq, const ProblemDims& dims);

struct NoiseModel {
    double sigma_sq = 0.0;
    double sigma_eff_sq = 0.0;

    static NoiseModel make(double sigma_sq, const ProblemDims& dims);
};

struct SparseSignal {
    int n = 0;
    std::vector<int> support;     // sorted ascending, size k
    std::vector<double> values;   // aligned with support, entries in U

    int k() const { return static_cast<int>(support.size()); }
    Vector dense() const;
};

// Uniform random k-subset support, i.i.d. uniform values over U.
SparseSignal sample_signal(const ProblemDims& dims, const Alphabet& alphabet,
                           Rng& rng);

// ||x - xhat||^2 / k. Note the normalization by sparsity, not dimension.
double square_error(const SparseSignal& x, const Vector& xhat, int k);
double square_error(const SparseSignal& x, const SparseSignal& xhat, int k);

}  // namespace subsparse

#endif
