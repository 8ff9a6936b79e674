#ifndef SUBSPARSE_BOUNDS_HPP
#define SUBSPARSE_BOUNDS_HPP

#include <cstdint>

#include "subsparse/core.hpp"

// Computable theory for the scaled AWGN model: noise thresholds, the
// piecewise reliability function with an independent minimax grid oracle,
// Gallager-type union bounds on large support/value errors, converse
// constants and the MSE lower bound for the high-noise regime, exact
// matching coefficients, a Gaussian bilinear MGF identity, and a small-N
// KL estimator contrasting the sparse output law with a Gaussian null.

namespace subsparse {

// Noise-variance thresholds for exact recovery: below direct (u_min^2/2)
// recovery succeeds asymptotically, above converse (u_max^2/2) sparsity
// carries no usable information.
struct RecoveryThresholds {
    double direct = 0.0;
    double converse = 0.0;
};

RecoveryThresholds recovery_thresholds(const Alphabet& alphabet);

// Exponent E_{w,w'}(sigma^2) governing the (N/k)^{-E} decay of the joint
// probability of w support errors and w' value errors. Piecewise in
// sigma^2 with breakpoints u_min^2/8, u_min^2/2, and
// (u_min^2 w + d_min^2 w')/(2w). Requires w >= 1; w' > 0 needs M >= 2.
double reliability_function(int w, int w_prime, double sigma_sq,
                            const Alphabet& alphabet);

// Independent numeric evaluation of the same exponent as a minimax:
//   min over a >= u_min^2 w + d_min^2 w', b >= u_min^2 w
//   max over rho in [0,1] of (a+b)^2 rho / (8 sigma^2 (a rho + b)) - rho w.
// Searches a bounded box [corner, 10 corner]^2 by grid plus local
// refinement, with golden-section for the inner maximization.
double reliability_oracle(int w, int w_prime, double sigma_sq,
                          const Alphabet& alphabet, int grid_n = 400);

// Per-type union bound inputs. d is the scale-dependent truncation level
// ceil(k / sqrt(ln(N/k))) separating "large" errors from small ones.
struct GallagerParams {
    int w = 0;
    int w_prime = 0;
    double sigma_sq = 0.0;
    Alphabet alphabet;
    ProblemDims dims;
    int d = 1;

    GallagerParams(int w_, int w_prime_, double sigma_sq_, Alphabet alphabet_,
                   ProblemDims dims_);
};

int truncation_level(const ProblemDims& dims);

// Union bound on the probability that the residual-minimizing estimate
// commits exactly w support errors and w' value errors:
//   w = 0: C(k,w') (M-1)^{w'} (N/k)^{-d_min^2 w' / (8 sigma^2)}
//   w >= 1: (ek/w)^w C(k-w,w') M^w (M-1)^{w'} (N/k)^{-E_{w,w'}}
// Computed in log-domain; exact 0 when M = 1 and w' > 0.
double gallager_type_bound(const GallagerParams& params);

// Sum of gallager_type_bound over all types with w + w' >= d. Raw value
// (may exceed 1 in high noise; clamp at the reporting layer if needed).
double error_prob_bound_total(const ProblemDims& dims, const Alphabet& alphabet,
                              double sigma_sq);

// Constants controlling the sparsity exponents gamma for which the sparse
// output law is indistinguishable from the Gaussian null. Meaningful
// (positive) only for sigma_sq > u_max^2/2; `valid` records that.
struct ConverseConstants {
    double c0 = 0.0;
    double c1_1 = 0.0;
    double c1_2 = 0.0;
    double c1 = 0.0;
    double gamma_max = 0.0;
    bool valid = false;
};

ConverseConstants converse_constants(double sigma_sq, const Alphabet& alphabet);

// MSE lower bound value with its intermediate factors, for inspection:
//   bound = (1/alpha) { C_N(alpha) e^{-2J} - 1 },
//   C_N(alpha) = (1 - u_max^4 alpha^2) e^{alpha Ex2/k}
//                / (1 + f(alpha) {[1 + k/(N-k)]^k - 1})^2,
//   f(alpha) = sqrt((1 - u_max^4 alpha^2)/(1 - 2 u_max^2 alpha)) - 1.
struct MseBound {
    double alpha = 0.0;
    double j = 0.0;
    double ex2_over_k = 0.0;
    double f_alpha = 0.0;
    double log_c_n = 0.0;
    double value = 0.0;
};

// Requires 0 < alpha < 1/(2 u_max^2). j >= 0 is the caller-supplied gap
// functional; j = 0 reproduces the asymptotic converse curve.
MseBound mse_lower_bound(double alpha, double j, double ex2_over_k,
                         const ProblemDims& dims, const Alphabet& alphabet);

// Exact rational L_{w,w'}^k = prod_{i<w'-w} (w'-i)/(k-w-i) with its
// ceiling, the copy count in the bipartite matching argument.
struct MatchingRatio {
    double value = 0.0;
    long long ceil = 0;
    unsigned long long num = 0;  // reduced fraction
    unsigned long long den = 1;
};

// Requires 0 <= w < w' <= k.
MatchingRatio matching_coefficients(int w, int w_prime, int k);

// H_w(j): H_0 = 1; otherwise sum over feasible w' of
// C(j,w') ceil(L_{k-w-w', k-j}^{k-j}). Exact integer arithmetic.
long long h_coeff(int w, int j, int k);

// E[exp(Z1 (v Z1 + Z2))] for (Z1, Z2) = (a.u1, a.u2), a ~ N(0, I_k):
//   {(1 - u2.u1)^2 - (2v + ||u2||^2) ||u1||^2}^{-1/2}.
// Throws std::domain_error when the positivity condition fails.
double gaussian_bilinear_mgf(double v, const Vector& u1, const Vector& u2);

// Monte Carlo estimate of D(p || q) between the exact k-sparse output law
// p(y) and the power-matched Gaussian null q(y) with covariance
// lambda sigma_eff^2 I, lambda = 1 + E||x||^2 / (N sigma_eff^2).
struct KlEstimate {
    double lambda = 0.0;
    double estimate = 0.0;
    double std_err = 0.0;
    int samples = 0;
};

// ln p(y) is evaluated by log-sum-exp over every k-sparse candidate, so
// feasibility requires C(N,k) M^k <= 10^6.
KlEstimate kl_estimate_small(const ProblemDims& dims, const Alphabet& alphabet,
                             double sigma_sq, int samples, std::uint64_t seed);

}  // namespace subsparse

#endif
