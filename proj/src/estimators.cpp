#include "subsparse/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "subsparse/numeric.hpp"

namespace subsparse {

namespace {

// Squared distance to the nearest alphabet point, minus the squared
// distance to zero. Negative when claiming rank i as a non-zero lowers
// the residual.
double boundary_penalty(double t, const Alphabet& a) {
    double best = std::numeric_limits<double>::infinity();
    for (double u : a.points) {
        const double d = (t - u) * (t - u);
        if (d < best) best = d;
    }
    return best - t * t;
}

// Top/bottom order-statistic windows of width w under the total order
// "descending value, ties by ascending original index".
struct OrderWindows {
    std::vector<int> top;  // ranks 1..w from the top, in order
    std::vector<int> bot;  // ranks 1..w from the bottom, in order
    double total_sq = 0.0;
};

OrderWindows order_windows(const Vector& y, int w) {
    const int N = static_cast<int>(y.size());
    OrderWindows out;
    out.total_sq = y.squaredNorm();
    if (w == 0) return out;

    auto desc = [&y](int a, int b) {
        return y[a] > y[b] || (y[a] == y[b] && a < b);
    };
    // "Later in descending order comes first": among equal values the
    // larger index sits deeper in the bottom.
    auto asc_from_end = [&y](int a, int b) {
        return y[a] < y[b] || (y[a] == y[b] && a > b);
    };

    std::vector<int> idx(N);
    std::iota(idx.begin(), idx.end(), 0);
    std::nth_element(idx.begin(), idx.begin() + (w - 1), idx.end(), desc);
    out.top.assign(idx.begin(), idx.begin() + w);
    std::sort(out.top.begin(), out.top.end(), desc);

    std::iota(idx.begin(), idx.end(), 0);
    std::nth_element(idx.begin(), idx.begin() + (w - 1), idx.end(), asc_from_end);
    out.bot.assign(idx.begin(), idx.begin() + w);
    std::sort(out.bot.begin(), out.bot.end(), asc_from_end);
    return out;
}

struct ProfileCore {
    XiProfile profile;
    std::vector<int> top_idx;
    std::vector<int> bot_idx;
};

ProfileCore xi_profile_core(const Vector& y, int k, const Alphabet& alphabet,
                            bool flip_scan) {
    const int N = static_cast<int>(y.size());
    if (k < 0 || N < 2 * k)
        throw std::invalid_argument("xi_profile: require N >= 2k, k >= 0");

    OrderWindows win = order_windows(y, k);

    XiProfile p;
    p.total_sq = win.total_sq;
    p.top_penalty.resize(k);
    p.bottom_penalty.resize(k);
    for (int r = 0; r < k; ++r) {
        p.top_penalty[r] = boundary_penalty(y[win.top[r]], alphabet);
        p.bottom_penalty[r] = boundary_penalty(y[win.bot[r]], alphabet);
    }
    std::vector<double> ptop(k + 1, 0.0), pbot(k + 1, 0.0);
    for (int r = 0; r < k; ++r) {
        ptop[r + 1] = ptop[r] + p.top_penalty[r];
        pbot[r + 1] = pbot[r] + p.bottom_penalty[r];
    }

    p.xi_values.resize(k + 1);
    for (int k0 = 0; k0 <= k; ++k0)
        p.xi_values[k0] = p.total_sq + ptop[k0] + pbot[k - k0];

    p.k_star = 0;
    for (int k0 = 1; k0 <= k; ++k0) {
        const bool better = flip_scan ? p.xi_values[k0] > p.xi_values[p.k_star]
                                      : p.xi_values[k0] < p.xi_values[p.k_star];
        if (better) p.k_star = k0;
    }

    ProfileCore out;
    out.profile = std::move(p);
    out.top_idx = std::move(win.top);
    out.bot_idx = std::move(win.bot);
    return out;
}

SparseSignal assemble_ml(const Vector& y, const ProblemDims& dims,
                         const Alphabet& alphabet, const ProfileCore& core) {
    const int k = dims.k;
    const int k_star = core.profile.k_star;
    SparseSignal s;
    s.n = dims.N;
    s.support.assign(core.top_idx.begin(), core.top_idx.begin() + k_star);
    s.support.insert(s.support.end(), core.bot_idx.begin(),
                     core.bot_idx.begin() + (k - k_star));
    std::sort(s.support.begin(), s.support.end());
    s.values.resize(k);
    for (int i = 0; i < k; ++i)
        s.values[i] = hard_decision(y[s.support[i]], alphabet);
    return s;
}

}  // namespace

double hard_decision(double y_n, const Alphabet& alphabet) {
    double best = std::numeric_limits<double>::infinity();
    double pick = alphabet.points.front();
    for (double u : alphabet.points) {
        const double d = (y_n - u) * (y_n - u);
        if (d < best) {
            best = d;
            pick = u;
        }
    }
    return pick;
}

XiProfile xi_profile(const Vector& y, int k, const Alphabet& alphabet) {
    return xi_profile_core(y, k, alphabet, false).profile;
}

SparseSignal ml_estimate(const Vector& y, const ProblemDims& dims,
                         const Alphabet& alphabet) {
    if (y.size() != dims.N)
        throw std::invalid_argument("ml_estimate: dimension mismatch");
    ProfileCore core = xi_profile_core(y, dims.k, alphabet, false);
    return assemble_ml(y, dims, alphabet, core);
}

SparseSignal ml_estimate_with_fault_injection(const Vector& y,
                                              const ProblemDims& dims,
                                              const Alphabet& alphabet) {
    if (y.size() != dims.N)
        throw std::invalid_argument("ml_estimate: dimension mismatch");
    ProfileCore core = xi_profile_core(y, dims.k, alphabet, true);
    return assemble_ml(y, dims, alphabet, core);
}

ErrorType classify_error(const SparseSignal& x, const SparseSignal& xhat) {
    if (x.n != xhat.n)
        throw std::invalid_argument("classify_error: dimension mismatch");
    ErrorType e;
    std::size_t i = 0, j = 0;
    while (i < x.support.size()) {
        while (j < xhat.support.size() && xhat.support[j] < x.support[i]) ++j;
        if (j < xhat.support.size() && xhat.support[j] == x.support[i]) {
            if (x.values[i] != xhat.values[j]) ++e.w_prime;
        } else {
            ++e.w;
        }
        ++i;
    }
    return e;
}

Vector separable_bayes(const Vector& y, const ProblemDims& dims,
                       const Alphabet& alphabet, double sigma_eff_sq) {
    if (y.size() != dims.N)
        throw std::invalid_argument("separable_bayes: dimension mismatch");
    if (!(sigma_eff_sq > 0.0))
        throw std::invalid_argument("separable_bayes: sigma_eff_sq must be positive");
    const int M = alphabet.M();
    const double log_c =
        std::log(static_cast<double>(dims.k) / (static_cast<double>(M) * (dims.N - dims.k)));

    Vector out(dims.N);
    std::vector<double> t(M);
    for (int n = 0; n < dims.N; ++n) {
        const double yn = y[n];
        double shift = 0.0;  // the zero-state term contributes exp(0)
        for (int m = 0; m < M; ++m) {
            const double u = alphabet.points[m];
            t[m] = log_c + (u * yn - 0.5 * u * u) / sigma_eff_sq;
            if (t[m] > shift) shift = t[m];
        }
        double num = 0.0, den = std::exp(-shift);
        for (int m = 0; m < M; ++m) {
            const double e = std::exp(t[m] - shift);
            num += alphabet.points[m] * e;
            den += e;
        }
        out[n] = num / den;
    }
    return out;
}

double ell_m(const Vector& y_minus_n, int m, const ProblemDims& dims,
             const Alphabet& alphabet) {
    const int Nm1 = static_cast<int>(y_minus_n.size());
    if (Nm1 != dims.N - 1)
        throw std::invalid_argument("ell_m: expected a length N-1 vector");
    if (Nm1 < 2 * dims.k)
        throw std::invalid_argument("ell_m: require N-1 >= 2k");
    if (m < 0 || m >= alphabet.M())
        throw std::invalid_argument("ell_m: alphabet index out of range");
    const double u = alphabet.points[m];
    const XiProfile a = xi_profile(y_minus_n, dims.k - 1, alphabet);
    const XiProfile b = xi_profile(y_minus_n, dims.k, alphabet);
    return u * u + a.xi_values[a.k_star] - b.xi_values[b.k_star];
}

DenoiserContext make_denoiser_context(const Vector& y, const ProblemDims& dims,
                                      const Alphabet& alphabet) {
    const int N = static_cast<int>(y.size());
    const int k = dims.k;
    if (N != dims.N)
        throw std::invalid_argument("denoiser context: dimension mismatch");
    if (N - 1 < 2 * k)
        throw std::invalid_argument("denoiser context: require N-1 >= 2k");

    // Window width k+1: removing one entry shifts ranks by at most one, so
    // every leave-one-out prefix of length <= k stays inside the window.
    const int w = k + 1;
    OrderWindows win = order_windows(y, w);

    DenoiserContext c;
    c.N = N;
    c.k = k;
    c.total_sq = win.total_sq;
    c.top_idx = std::move(win.top);
    c.bot_idx = std::move(win.bot);
    c.top_pen.resize(w);
    c.bot_pen.resize(w);
    for (int r = 0; r < w; ++r) {
        c.top_pen[r] = boundary_penalty(y[c.top_idx[r]], alphabet);
        c.bot_pen[r] = boundary_penalty(y[c.bot_idx[r]], alphabet);
    }
    c.top_pen_prefix.assign(w + 1, 0.0);
    c.bot_pen_prefix.assign(w + 1, 0.0);
    for (int r = 0; r < w; ++r) {
        c.top_pen_prefix[r + 1] = c.top_pen_prefix[r] + c.top_pen[r];
        c.bot_pen_prefix[r + 1] = c.bot_pen_prefix[r] + c.bot_pen[r];
    }
    c.top_rank.assign(N, 0);
    c.bot_rank.assign(N, 0);
    for (int r = 0; r < w; ++r) {
        c.top_rank[c.top_idx[r]] = r + 1;
        c.bot_rank[c.bot_idx[r]] = r + 1;
    }

    // Middle indexes share one value; compute it once with no adjustments.
    double a_min = std::numeric_limits<double>::infinity();
    for (int k0 = 0; k0 <= k - 1; ++k0)
        a_min = std::min(a_min, c.top_pen_prefix[k0] + c.bot_pen_prefix[k - 1 - k0]);
    double b_min = std::numeric_limits<double>::infinity();
    for (int k0 = 0; k0 <= k; ++k0)
        b_min = std::min(b_min, c.top_pen_prefix[k0] + c.bot_pen_prefix[k - k0]);
    c.mid_delta = a_min - b_min;
    return c;
}

double DenoiserContext::loo_delta(int n) const {
    const int r = top_rank[n];
    const int s = bot_rank[n];
    if (r == 0 && s == 0) return mid_delta;

    auto top_sum = [&](int k0) {
        if (r != 0 && r <= k0) return top_pen_prefix[k0 + 1] - top_pen[r - 1];
        return top_pen_prefix[k0];
    };
    auto bot_sum = [&](int j) {
        if (s != 0 && s <= j) return bot_pen_prefix[j + 1] - bot_pen[s - 1];
        return bot_pen_prefix[j];
    };

    double a_min = std::numeric_limits<double>::infinity();
    for (int k0 = 0; k0 <= k - 1; ++k0)
        a_min = std::min(a_min, top_sum(k0) + bot_sum(k - 1 - k0));
    double b_min = std::numeric_limits<double>::infinity();
    for (int k0 = 0; k0 <= k; ++k0)
        b_min = std::min(b_min, top_sum(k0) + bot_sum(k - k0));
    return a_min - b_min;
}

double coordinate_posterior_mean(double y_n, double delta,
                                 const Alphabet& alphabet, double sigma_eff_sq) {
    const int M = alphabet.M();
    const double inv_m = 1.0 / M;
    // t_m = u y_n / v - l_m / (2v) with l_m = u^2 + delta. Two passes
    // (shift, then accumulate) keep this allocation-free; it is the inner
    // kernel of the AMP divergence loop.
    auto logit = [&](double u) {
        return (2.0 * u * y_n - u * u - delta) / (2.0 * sigma_eff_sq);
    };
    double shift = 0.0;
    for (double u : alphabet.points) shift = std::max(shift, logit(u));
    double num = 0.0, den = std::exp(-shift);
    for (double u : alphabet.points) {
        const double e = inv_m * std::exp(logit(u) - shift);
        num += u * e;
        den += e;
    }
    return num / den;
}

Vector nonseparable_bayes(const Vector& y, const ProblemDims& dims,
                          const Alphabet& alphabet, double sigma_eff_sq) {
    if (y.size() != dims.N)
        throw std::invalid_argument("nonseparable_bayes: dimension mismatch");
    if (!(sigma_eff_sq > 0.0))
        throw std::invalid_argument("nonseparable_bayes: sigma_eff_sq must be positive");
    const DenoiserContext ctx = make_denoiser_context(y, dims, alphabet);

    Vector out(dims.N);
    for (int n = 0; n < dims.N; ++n)
        out[n] = coordinate_posterior_mean(y[n], ctx.loo_delta(n), alphabet,
                                           sigma_eff_sq);
    return out;
}

namespace {

// Visits every k-sparse candidate: supports in lexicographic order, value
// assignments odometer-style within each support.
template <typename Fn>
void for_each_candidate(int N, int k, const Alphabet& alphabet, Fn&& fn) {
    const int M = alphabet.M();
    std::vector<int> supp(k);
    std::iota(supp.begin(), supp.end(), 0);
    std::vector<int> vidx(k, 0);
    std::vector<double> vals(k);
    for (;;) {
        std::fill(vidx.begin(), vidx.end(), 0);
        for (;;) {
            for (int i = 0; i < k; ++i) vals[i] = alphabet.points[vidx[i]];
            fn(supp, vals);
            int pos = k - 1;
            while (pos >= 0 && vidx[pos] == M - 1) --pos;
            if (pos < 0) break;
            ++vidx[pos];
            std::fill(vidx.begin() + pos + 1, vidx.end(), 0);
        }
        // next combination
        int i = k - 1;
        while (i >= 0 && supp[i] == N - k + i) --i;
        if (i < 0) break;
        ++supp[i];
        for (int j = i + 1; j < k; ++j) supp[j] = supp[j - 1] + 1;
    }
}

void check_enumeration_guard(const ProblemDims& dims, const Alphabet& alphabet,
                             double limit) {
    const double log_count =
        log_binomial(dims.N, dims.k) + dims.k * std::log(static_cast<double>(alphabet.M()));
    if (log_count > std::log(limit))
        throw std::invalid_argument("enumeration guard exceeded: C(N,k) M^k too large");
}

}  // namespace

Vector exact_posterior_mean(const Vector& y, const ProblemDims& dims,
                            const Alphabet& alphabet, double sigma_eff_sq) {
    if (y.size() != dims.N)
        throw std::invalid_argument("exact_posterior_mean: dimension mismatch");
    if (!(sigma_eff_sq > 0.0))
        throw std::invalid_argument("exact_posterior_mean: sigma_eff_sq must be positive");
    check_enumeration_guard(dims, alphabet, 1e7);

    const double inv_v = 1.0 / sigma_eff_sq;
    auto log_weight = [&](const std::vector<int>& supp, const std::vector<double>& vals) {
        double lw = 0.0;
        for (std::size_t i = 0; i < supp.size(); ++i)
            lw += vals[i] * y[supp[i]] - 0.5 * vals[i] * vals[i];
        return lw * inv_v;
    };

    double max_lw = -std::numeric_limits<double>::infinity();
    for_each_candidate(dims.N, dims.k, alphabet,
                       [&](const std::vector<int>& s, const std::vector<double>& v) {
                           max_lw = std::max(max_lw, log_weight(s, v));
                       });

    Vector num = Vector::Zero(dims.N);
    double den = 0.0;
    for_each_candidate(dims.N, dims.k, alphabet,
                       [&](const std::vector<int>& s, const std::vector<double>& v) {
                           const double e = std::exp(log_weight(s, v) - max_lw);
                           den += e;
                           for (std::size_t i = 0; i < s.size(); ++i)
                               num[s[i]] += v[i] * e;
                       });
    return num / den;
}

double residual_sq(const Vector& y, const SparseSignal& s) {
    if (y.size() != s.n)
        throw std::invalid_argument("residual_sq: dimension mismatch");
    double acc = 0.0;
    std::size_t i = 0;
    for (int n = 0; n < s.n; ++n) {
        double xn = 0.0;
        if (i < s.support.size() && s.support[i] == n) xn = s.values[i++];
        const double d = y[n] - xn;
        acc += d * d;
    }
    return acc;
}

SparseSignal brute_force_ml(const Vector& y, const ProblemDims& dims,
                            const Alphabet& alphabet) {
    if (y.size() != dims.N)
        throw std::invalid_argument("brute_force_ml: dimension mismatch");
    check_enumeration_guard(dims, alphabet, 1e7);

    SparseSignal best;
    best.n = dims.N;
    double best_res = std::numeric_limits<double>::infinity();
    for_each_candidate(dims.N, dims.k, alphabet,
                       [&](const std::vector<int>& s, const std::vector<double>& v) {
                           SparseSignal cand;
                           cand.n = dims.N;
                           cand.support = s;
                           cand.values = v;
                           const double res = residual_sq(y, cand);
                           // strict < keeps the lexicographically first tie
                           if (res < best_res) {
                               best_res = res;
                               best = std::move(cand);
                           }
                       });
    return best;
}

}  // namespace subsparse
