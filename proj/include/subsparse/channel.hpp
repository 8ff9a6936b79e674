#ifndef SUBSPARSE_CHANNEL_HPP
#define SUBSPARSE_CHANNEL_HPP

#include <cstdint>

#include "subsparse/core.hpp"

// Forward models: the per-sample scaled AWGN channel y = x + w with
// w ~ N(0, sigma_eff_sq I_N), and the Gaussian compressed-sensing channel
// y = k^{-1/2} A x + w with w ~ N(0, sigma_sq I_M).

namespace subsparse {

// i.i.d. standard Gaussian matrix, addressed entrywise from a counter-based
// stream so any row can be regenerated without holding the full matrix.
struct SensingMatrix {
    int rows = 0;
    int cols = 0;
    std::uint64_t seed = 0;

    SensingMatrix(int rows_, int cols_, std::uint64_t seed_);

    double entry(int i, int j) const {
        return normal_at(seed, static_cast<std::uint64_t>(i) * cols + j);
    }
    Vector row(int i) const;
    Eigen::MatrixXd dense() const;

    // Streaming products against the raw (unscaled) matrix.
    Vector apply(const Vector& x) const;          // A x
    Vector apply_adjoint(const Vector& r) const;  // A^T r
};

struct CsDims {
    int M_meas = 0;
    double delta = 0.0;

    static CsDims from_measurements(int M_meas, const ProblemDims& dims);
    static CsDims from_delta(double delta, const ProblemDims& dims);
};

// delta = M / (k ln(N/k)).
double delta_of(int M_meas, const ProblemDims& dims);

// y = dense(x) + noise, noise i.i.d. N(0, sigma_eff_sq).
ObservedVector awgn_transmit(const SparseSignal& x, const NoiseModel& noise,
                             Rng& rng);

// y = k^{-1/2} A x + w, w i.i.d. N(0, sigma_sq) on the M measurements.
// The noise variance is the unscaled base sigma_sq.
ObservedVector cs_measure(const SparseSignal& x, const SensingMatrix& A,
                          double sigma_sq, Rng& rng);

}  // namespace subsparse

#endif
