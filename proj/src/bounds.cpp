#include "subsparse/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "subsparse/numeric.hpp"
#include "subsparse/rng.hpp"

namespace subsparse {

namespace {

void check_error_type(int w, int w_prime, const Alphabet& alphabet) {
    if (w < 1 || w_prime < 0)
        throw std::invalid_argument("reliability: require w >= 1, w' >= 0");
    if (alphabet.M() == 1 && w_prime > 0)
        throw std::invalid_argument("reliability: w' > 0 needs at least two alphabet points");
}

// d_min^2 with the convention that it only enters multiplied by w', so a
// single-point alphabet (d_min = NaN) contributes 0 at w' = 0.
double gap_sq_term(int w_prime, const Alphabet& alphabet) {
    return w_prime > 0 ? alphabet.d_min * alphabet.d_min : 0.0;
}

}  // namespace

RecoveryThresholds recovery_thresholds(const Alphabet& alphabet) {
    return {0.5 * alphabet.u_min * alphabet.u_min,
            0.5 * alphabet.u_max * alphabet.u_max};
}

double reliability_function(int w, int w_prime, double sigma_sq,
                            const Alphabet& alphabet) {
    check_error_type(w, w_prime, alphabet);
    if (!(sigma_sq > 0.0))
        throw std::invalid_argument("reliability: sigma_sq must be positive");

    const double u2 = alphabet.u_min * alphabet.u_min;
    const double dd = gap_sq_term(w_prime, alphabet);
    const double aw = u2 * w + dd * w_prime;

    if (sigma_sq < u2 / 8.0)
        return (u2 / (4.0 * sigma_sq) - 1.0) * w + dd * w_prime / (8.0 * sigma_sq);
    if (sigma_sq < u2 / 2.0) {
        const double num = 2.0 * (u2 - std::sqrt(2.0 * sigma_sq * u2)) * w + dd * w_prime;
        return num * num / (8.0 * sigma_sq * aw);
    }
    if (sigma_sq < aw / (2.0 * w)) {
        const double num = (u2 - 2.0 * sigma_sq) * w + dd * w_prime;
        return num * num / (8.0 * sigma_sq * aw);
    }
    return 0.0;
}

namespace {

// Golden-section maximization of a concave function on [0, 1].
template <typename Fn>
double max_on_unit_interval(Fn&& f, int iters) {
    constexpr double inv_phi = 0.6180339887498949;
    double lo = 0.0, hi = 1.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    return std::max({f(lo), f1, f2, f(hi)});
}

}  // namespace

double reliability_oracle(int w, int w_prime, double sigma_sq,
                          const Alphabet& alphabet, int grid_n) {
    check_error_type(w, w_prime, alphabet);
    if (grid_n < 2)
        throw std::invalid_argument("reliability_oracle: grid_n >= 2");

    const double u2 = alphabet.u_min * alphabet.u_min;
    const double dd = gap_sq_term(w_prime, alphabet);
    const double a_lo = u2 * w + dd * w_prime;
    const double b_lo = u2 * w;

    auto inner_max = [&](double a, double b) {
        auto e_of_rho = [&](double rho) {
            const double s = a + b;
            return s * s * rho / (8.0 * sigma_sq * (a * rho + b)) - rho * w;
        };
        return max_on_unit_interval(e_of_rho, 32);
    };

    auto scan_box = [&](double a0, double a1, double b0, double b1, int n,
                        double& best_a, double& best_b) {
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const double a = a0 + (a1 - a0) * i / (n - 1);
            for (int j = 0; j < n; ++j) {
                const double b = b0 + (b1 - b0) * j / (n - 1);
                const double val = inner_max(a, b);
                if (val < best) {
                    best = val;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        return best;
    };

    double a_star = a_lo, b_star = b_lo;
    double best = scan_box(a_lo, 10.0 * a_lo, b_lo, 10.0 * b_lo, grid_n, a_star, b_star);

    // Two local refinement rounds around the incumbent, clipped to the box.
    double step_a = 9.0 * a_lo / (grid_n - 1);
    double step_b = 9.0 * b_lo / (grid_n - 1);
    for (int round = 0; round < 2; ++round) {
        const double a0 = std::max(a_lo, a_star - 1.5 * step_a);
        const double a1 = std::min(10.0 * a_lo, a_star + 1.5 * step_a);
        const double b0 = std::max(b_lo, b_star - 1.5 * step_b);
        const double b1 = std::min(10.0 * b_lo, b_star + 1.5 * step_b);
        best = std::min(best, scan_box(a0, a1, b0, b1, 40, a_star, b_star));
        step_a = (a1 - a0) / 39.0;
        step_b = (b1 - b0) / 39.0;
    }
    // rho = 0 always attains 0, so the true minimax is nonnegative.
    return std::max(best, 0.0);
}

GallagerParams::GallagerParams(int w_, int w_prime_, double sigma_sq_,
                               Alphabet alphabet_, ProblemDims dims_)
    : w(w_),
      w_prime(w_prime_),
      sigma_sq(sigma_sq_),
      alphabet(std::move(alphabet_)),
      dims(dims_),
      d(truncation_level(dims_)) {
    if (w < 0 || w > dims.k || w_prime < 0 || w_prime > dims.k - w)
        throw std::invalid_argument("gallager: require 0 <= w <= k, 0 <= w' <= k - w");
    if (!(sigma_sq > 0.0))
        throw std::invalid_argument("gallager: sigma_sq must be positive");
}

int truncation_level(const ProblemDims& dims) {
    return static_cast<int>(std::ceil(dims.k / std::sqrt(dims.log_ratio())));
}

double gallager_type_bound(const GallagerParams& p) {
    const int M = p.alphabet.M();
    if (M == 1 && p.w_prime > 0) return 0.0;  // the (M-1)^{w'} factor

    const double log_ratio = p.dims.log_ratio();
    const int k = p.dims.k;
    double log_term;
    if (p.w == 0) {
        const double dd = gap_sq_term(p.w_prime, p.alphabet);
        log_term = log_binomial(k, p.w_prime)
                 - dd * p.w_prime / (8.0 * p.sigma_sq) * log_ratio;
    } else {
        log_term = p.w * (1.0 + std::log(static_cast<double>(k) / p.w))
                 + log_binomial(k - p.w, p.w_prime)
                 + p.w * std::log(static_cast<double>(M))
                 - reliability_function(p.w, p.w_prime, p.sigma_sq, p.alphabet)
                   * log_ratio;
    }
    if (p.w_prime > 0) log_term += p.w_prime * std::log(static_cast<double>(M - 1));
    return std::exp(log_term);
}

double error_prob_bound_total(const ProblemDims& dims, const Alphabet& alphabet,
                              double sigma_sq) {
    const int d = truncation_level(dims);
    const int M = alphabet.M();
    std::vector<double> log_terms;
    for (int w = 0; w <= dims.k; ++w) {
        for (int w_prime = 0; w_prime <= dims.k - w; ++w_prime) {
            if (w + w_prime < d) continue;
            if (M == 1 && w_prime > 0) continue;
            GallagerParams p(w, w_prime, sigma_sq, alphabet, dims);
            const double val = gallager_type_bound(p);
            if (val > 0.0) log_terms.push_back(std::log(val));
        }
    }
    if (log_terms.empty()) return 0.0;  // no type reaches the truncation level
    return std::exp(log_sum_exp(std::move(log_terms)));
}

ConverseConstants converse_constants(double sigma_sq, const Alphabet& alphabet) {
    if (!(sigma_sq > 0.0))
        throw std::invalid_argument("converse_constants: sigma_sq must be positive");
    const double umax = alphabet.u_max;
    const double umin = alphabet.u_min;
    const double umax2 = umax * umax;
    const double slack = 1.0 - umax2 / (2.0 * sigma_sq);

    ConverseConstants c;
    c.c0 = sigma_sq / umax2 * slack;
    c.c1_1 = sigma_sq / (2.0 * umax2) * slack * slack;
    c.c1_2 = (umax - 0.5 * umin) * (umax - 0.5 * umin) / (2.0 * sigma_sq);
    c.c1 = c.c1_1 + c.c1_2;
    c.gamma_max = std::min({c.c0 / (c.c0 + sigma_sq / (umax * umin)),
                            c.c1 / (c.c1 + 3.0), 0.5});
    c.valid = sigma_sq > umax2 / 2.0;
    return c;
}

MseBound mse_lower_bound(double alpha, double j, double ex2_over_k,
                         const ProblemDims& dims, const Alphabet& alphabet) {
    const double umax2 = alphabet.u_max * alphabet.u_max;
    if (!(alpha > 0.0) || !(alpha < 1.0 / (2.0 * umax2)))
        throw std::invalid_argument("mse_lower_bound: require 0 < alpha < 1/(2 u_max^2)");
    if (j < 0.0)
        throw std::invalid_argument("mse_lower_bound: require j >= 0");

    MseBound b;
    b.alpha = alpha;
    b.j = j;
    b.ex2_over_k = ex2_over_k;

    const double log_one_minus_sq = std::log1p(-umax2 * umax2 * alpha * alpha);
    b.f_alpha = std::expm1(0.5 * (log_one_minus_sq - std::log1p(-2.0 * umax2 * alpha)));
    // [1 + k/(N-k)]^k - 1, kept in expm1 form for small k/N
    const double growth = std::expm1(
        dims.k * std::log1p(static_cast<double>(dims.k) / (dims.N - dims.k)));
    b.log_c_n = log_one_minus_sq + alpha * ex2_over_k
              - 2.0 * std::log1p(b.f_alpha * growth);
    b.value = std::expm1(b.log_c_n - 2.0 * j) / alpha;
    return b;
}

namespace {

// L as an exact reduced fraction; allows w = w' (empty product = 1),
// which the h_coeff summation needs.
MatchingRatio matching_ratio_impl(int w, int w_prime, int k) {
    using u128 = unsigned __int128;
    auto gcd128 = [](u128 a, u128 b) {
        while (b != 0) {
            const u128 t = a % b;
            a = b;
            b = t;
        }
        return a;
    };
    u128 num = 1, den = 1;
    for (int i = 0; i < w_prime - w; ++i) {
        num *= static_cast<unsigned>(w_prime - i);
        den *= static_cast<unsigned>(k - w - i);
        const u128 g = gcd128(num, den);
        num /= g;
        den /= g;
    }
    MatchingRatio r;
    r.num = static_cast<unsigned long long>(num);
    r.den = static_cast<unsigned long long>(den);
    r.value = static_cast<double>(r.num) / static_cast<double>(r.den);
    r.ceil = static_cast<long long>((num + den - 1) / den);
    return r;
}

}  // namespace

MatchingRatio matching_coefficients(int w, int w_prime, int k) {
    if (!(0 <= w && w < w_prime && w_prime <= k))
        throw std::invalid_argument("matching_coefficients: require 0 <= w < w' <= k");
    return matching_ratio_impl(w, w_prime, k);
}

long long h_coeff(int w, int j, int k) {
    if (w < 0 || w > k || j < 0 || j > k)
        throw std::invalid_argument("h_coeff: require 0 <= w <= k, 0 <= j <= k");
    if (w == 0) return 1;
    long long total = 0;
    const int lo = std::max(j - w, 0);
    const int hi = std::min(j, k - w);
    for (int w_prime = lo; w_prime <= hi; ++w_prime) {
        // exact small binomial C(j, w')
        long long binom = 1;
        for (int i = 0; i < w_prime; ++i) binom = binom * (j - i) / (i + 1);
        total += binom * matching_ratio_impl(k - w - w_prime, k - j, k - j).ceil;
    }
    return total;
}

double gaussian_bilinear_mgf(double v, const Vector& u1, const Vector& u2) {
    if (u1.size() != u2.size())
        throw std::invalid_argument("gaussian_bilinear_mgf: dimension mismatch");
    const double cross = 1.0 - u2.dot(u1);
    const double cond = cross * cross - (2.0 * v + u2.squaredNorm()) * u1.squaredNorm();
    if (!(cond > 0.0))
        throw std::domain_error("gaussian_bilinear_mgf: expectation diverges");
    return 1.0 / std::sqrt(cond);
}

KlEstimate kl_estimate_small(const ProblemDims& dims, const Alphabet& alphabet,
                             double sigma_sq, int samples, std::uint64_t seed) {
    if (samples < 2)
        throw std::invalid_argument("kl_estimate_small: need at least 2 samples");
    const int M = alphabet.M();
    const double log_count =
        log_binomial(dims.N, dims.k) + dims.k * std::log(static_cast<double>(M));
    if (log_count > std::log(1e6))
        throw std::invalid_argument("kl_estimate_small: C(N,k) M^k too large");

    const double v = effective_noise_variance(sigma_sq, dims);
    double p_u = 0.0;
    for (double u : alphabet.points) p_u += u * u;
    p_u /= M;

    KlEstimate out;
    out.samples = samples;
    out.lambda = 1.0 + dims.k * p_u / (dims.N * v);

    // Enumerate candidates once: support set plus per-slot value choices.
    struct Candidate {
        std::vector<int> support;
        std::vector<double> values;
        double half_energy;
    };
    std::vector<Candidate> cands;
    std::vector<int> supp(dims.k);
    std::iota(supp.begin(), supp.end(), 0);
    for (;;) {
        std::vector<int> vidx(dims.k, 0);
        for (;;) {
            Candidate c;
            c.support = supp;
            c.values.resize(dims.k);
            c.half_energy = 0.0;
            for (int i = 0; i < dims.k; ++i) {
                c.values[i] = alphabet.points[vidx[i]];
                c.half_energy += 0.5 * c.values[i] * c.values[i];
            }
            cands.push_back(std::move(c));
            int pos = dims.k - 1;
            while (pos >= 0 && vidx[pos] == M - 1) --pos;
            if (pos < 0) break;
            ++vidx[pos];
            std::fill(vidx.begin() + pos + 1, vidx.end(), 0);
        }
        int i = dims.k - 1;
        while (i >= 0 && supp[i] == dims.N - dims.k + i) --i;
        if (i < 0) break;
        ++supp[i];
        for (int t = i + 1; t < dims.k; ++t) supp[t] = supp[t - 1] + 1;
    }

    const double log_x_count = std::log(static_cast<double>(cands.size()));
    const double log_2pi = std::log(2.0 * M_PI);
    const double sd = std::sqrt(v);

    double mean = 0.0, m2 = 0.0;
    Vector y(dims.N);
    std::vector<double> lw(cands.size());
    for (int s = 0; s < samples; ++s) {
        Rng rng(substream(seed, 0x6b6c, static_cast<std::uint64_t>(s)));
        const SparseSignal x = sample_signal(dims, alphabet, rng);
        for (int n = 0; n < dims.N; ++n) y[n] = sd * rng.normal();
        for (int i = 0; i < dims.k; ++i) y[x.support[i]] += x.values[i];

        const double energy = y.squaredNorm();
        for (std::size_t c = 0; c < cands.size(); ++c) {
            double dot = 0.0;
            for (int i = 0; i < dims.k; ++i)
                dot += cands[c].values[i] * y[cands[c].support[i]];
            lw[c] = (dot - cands[c].half_energy) / v;
        }
        const double log_p = -0.5 * energy / v - 0.5 * dims.N * (log_2pi + std::log(v))
                           - log_x_count + log_sum_exp(lw);
        const double log_q = -0.5 * energy / (out.lambda * v)
                           - 0.5 * dims.N * (log_2pi + std::log(out.lambda * v));
        const double ratio = log_p - log_q;
        const double delta = ratio - mean;
        mean += delta / (s + 1);
        m2 += delta * (ratio - mean);
    }
    out.estimate = mean;
    out.std_err = std::sqrt(m2 / (samples - 1) / samples);
    return out;
}

}  // namespace subsparse
