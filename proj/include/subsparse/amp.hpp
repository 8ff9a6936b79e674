#ifndef SUBSPARSE_AMP_HPP
#define SUBSPARSE_AMP_HPP

#include <functional>
#include <memory>
#include <vector>

#include "subsparse/channel.hpp"
#include "subsparse/core.hpp"

// Approximate message passing for the compressed-sensing channel
// y = k^{-1/2} A x + w, with Onsager correction, damping, pluggable
// denoisers, and an SNR-switched denoiser policy.

namespace subsparse {

// A denoiser maps pseudo-data u = x + (approx.) Gaussian noise of variance
// v to an estimate, and reports the mean elementwise derivative that the
// Onsager term needs. divergence must match central finite differences of
// denoise (step 1e-5 (1 + |u_n|)) within 1e-5 relative error.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual Vector denoise(const Vector& u, double v) const = 0;
    virtual double divergence(const Vector& u, double v) const = 0;
};

// Elementwise posterior mean under the i.i.d. marginal prior; divergence
// in closed form (posterior variance over v).
class SeparableDenoiser : public Denoiser {
public:
    SeparableDenoiser(const ProblemDims& dims, Alphabet alphabet);
    Vector denoise(const Vector& u, double v) const override;
    double divergence(const Vector& u, double v) const override;

private:
    ProblemDims dims_;
    Alphabet alphabet_;
};

// Posterior mean under the exact-k prior via leave-one-out penalties;
// divergence by per-coordinate central differences against a shared
// order-statistics context (the leave-one-out offset of coordinate n does
// not depend on u_n, so the context is built once per call).
class NonseparableDenoiser : public Denoiser {
public:
    NonseparableDenoiser(const ProblemDims& dims, Alphabet alphabet);
    Vector denoise(const Vector& u, double v) const override;
    double divergence(const Vector& u, double v) const override;

private:
    ProblemDims dims_;
    Alphabet alphabet_;
};

enum class DenoiserPolicy { separable, nonseparable, switched };

struct AmpConfig {
    int iterations = 30;
    double theta = 1.0;  // damping factor; 1 = undamped
    DenoiserPolicy policy = DenoiserPolicy::switched;
    double switch_db = 6.0;       // switched policy: nonseparable above this
    bool record_pseudo_data = false;  // keep per-iteration u for diagnostics
};

// 10 log10(P_u / v) with P_u the mean squared alphabet amplitude.
// v = 0 returns +infinity.
double estimate_input_snr(double v, const Alphabet& alphabet);

struct AmpIteration {
    double v = 0.0;           // residual-energy noise estimate ||r||^2 / M
    double b = 0.0;           // Onsager coefficient
    double snr_db = 0.0;      // estimate_input_snr(v)
    bool nonseparable = false;  // which denoiser this iteration used
    double input_mse = 0.0;   // ||u - x||^2 / N (NaN without oracle)
    double output_mse = 0.0;  // ||x_hat - x||^2 / k (NaN without oracle)
};

struct AmpTrace {
    std::vector<AmpIteration> iterations;
    std::vector<Vector> pseudo_data;  // filled when config.record_pseudo_data
    Vector x_hat;
    bool diverged = false;
    double sigma_sq = 0.0;  // channel noise level, recorded for reporting
};

// Last finite recorded output_mse; `fallback` (typically the prior power)
// when the trace has none, so diverged runs still score.
double trace_score(const AmpTrace& trace, double fallback);

// Runs the damped AMP recursion from x_hat = 0:
//   r_t = y - A~ x_hat_t + b_t r_{t-1},  b_t = (N/M) <eta'(u_{t-1})>
//   v_t = ||r_t||^2 / M,  u_t = x_hat_t + (k/M) A~^T r_t
//   x_hat_{t+1} = theta eta(u_t, (k/M) v_t) + (1 - theta) x_hat_t
// with A~ = k^{-1/2} A. The (k/M) gain makes diag((k/M) A~^T A~) ~ 1, so
// the pseudo-data u_t carries per-coordinate noise variance (k/M) v_t;
// that is the variance the denoiser and its divergence are evaluated at,
// and the one the switched policy converts to an input SNR. The trace
// still records v_t itself. Residual damped with the same theta, and the
// first iteration undamped (there is no previous state to blend). Aborts
// with diverged = true when the state goes non-finite or v exceeds 10^3
// times its initial value; the truncated trace is returned, not thrown.
// x_true, when given, fills the oracle MSE fields. The matrix is
// materialized densely (rows*cols <= 5e7 enforced).
AmpTrace amp_run(const ObservedVector& y, const SensingMatrix& A,
                 const SparseSignal* x_true, const AmpConfig& config,
                 const ProblemDims& dims, const Alphabet& alphabet,
                 double sigma_sq);

// Same recursion against an already materialized scaled matrix k^{-1/2} A.
AmpTrace amp_run_dense(const ObservedVector& y, const Eigen::MatrixXd& A_scaled,
                       const SparseSignal* x_true, const AmpConfig& config,
                       const ProblemDims& dims, const Alphabet& alphabet,
                       double sigma_sq);

// One fresh problem draw for damping search / sweeps.
struct AmpInstance {
    ObservedVector y;
    SensingMatrix A;
    SparseSignal x;
};

using InstanceGenerator = std::function<AmpInstance(std::uint64_t trial)>;

struct DampingSearchResult {
    double best_theta = 1.0;
    std::vector<double> theta_grid;
    std::vector<double> mean_mse;  // aligned with theta_grid
};

// Evaluates every theta on the same `trials` fresh instances (paired
// comparisons) and returns the grid argmin of the mean final MSE, ties to
// the smallest index. Deterministic given the generator.
DampingSearchResult damping_search(const InstanceGenerator& gen,
                                   const std::vector<double>& theta_grid,
                                   int trials, const AmpConfig& base,
                                   const ProblemDims& dims,
                                   const Alphabet& alphabet, double sigma_sq);

}  // namespace subsparse

#endif
