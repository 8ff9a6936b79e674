#include "subsparse/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace subsparse {

Alphabet Alphabet::from_points(std::vector<double> pts) {
    if (pts.empty())
        throw std::invalid_argument("alphabet: needs at least one point");
    for (double u : pts) {
        if (u == 0.0 || !std::isfinite(u))
            throw std::invalid_argument("alphabet: points must be finite and non-zero");
    }
    std::vector<double> sorted = pts;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("alphabet: points must be distinct");

    Alphabet a;
    a.points = std::move(pts);
    a.u_min = std::numeric_limits<double>::infinity();
    a.u_max = 0.0;
    for (double u : a.points) {
        a.u_min = std::min(a.u_min, std::abs(u));
        a.u_max = std::max(a.u_max, std::abs(u));
    }
    if (a.points.size() == 1) {
        // No distinct pair exists; keep the gaps at an undefined sentinel.
        a.d_min = std::numeric_limits<double>::quiet_NaN();
        a.d_max = std::numeric_limits<double>::quiet_NaN();
    } else {
        a.d_min = std::numeric_limits<double>::infinity();
        a.d_max = 0.0;
        for (std::size_t i = 0; i < a.points.size(); ++i) {
            for (std::size_t j = i + 1; j < a.points.size(); ++j) {
                const double g = std::abs(a.points[i] - a.points[j]);
                a.d_min = std::min(a.d_min, g);
                a.d_max = std::max(a.d_max, g);
            }
        }
    }
    return a;
}

ProblemDims::ProblemDims(int N_, int k_) : N(N_), k(k_) {
    if (k < 1) throw std::invalid_argument("dims: k must be positive");
    // N >= 2k keeps the top-k0 and bottom-(k-k0) order-statistic windows
    // disjoint, which the ML support rule relies on.
    if (N < 2 * k) throw std::invalid_argument("dims: require N >= 2k");
}

double ProblemDims::log_ratio() const {
    return std::log(static_cast<double>(N) / k);
}

double effective_noise_variance(double sigma_sq, const ProblemDims& dims) {
    if (!(sigma_sq > 0.0))
        throw std::invalid_argument("noise: sigma_sq must be positive");
    if (dims.N <= dims.k)
        throw std::invalid_argument("noise: require N > k");
    return sigma_sq / dims.log_ratio();
}

NoiseModel NoiseModel::make(double sigma_sq, const ProblemDims& dims) {
    NoiseModel m;
    m.sigma_sq = sigma_sq;
    // sigma_sq = 0 is allowed as a degenerate test mode.
    if (sigma_sq == 0.0) {
        m.sigma_eff_sq = 0.0;
    } else {
        m.sigma_eff_sq = effective_noise_variance(sigma_sq, dims);
    }
    return m;
}

Vector SparseSignal::dense() const {
    Vector x = Vector::Zero(n);
    for (std::size_t i = 0; i < support.size(); ++i) x[support[i]] = values[i];
    return x;
}

SparseSignal sample_signal(const ProblemDims& dims, const Alphabet& alphabet,
                           Rng& rng) {
    // Floyd's subset sampling: k draws, uniform over k-subsets.
    const int N = dims.N;
    const int k = dims.k;
    std::vector<int> chosen;
    chosen.reserve(k);
    auto contains = [&](int v) {
        return std::find(chosen.begin(), chosen.end(), v) != chosen.end();
    };
    for (int j = N - k; j < N; ++j) {
        const int t = static_cast<int>(rng.below(static_cast<std::uint64_t>(j) + 1));
        if (contains(t))
            chosen.push_back(j);
        else
            chosen.push_back(t);
    }
    std::sort(chosen.begin(), chosen.end());

    SparseSignal x;
    x.n = N;
    x.support = std::move(chosen);
    x.values.resize(k);
    const int M = alphabet.M();
    for (int i = 0; i < k; ++i)
        x.values[i] = alphabet.points[rng.below(M)];
    return x;
}

double square_error(const SparseSignal& x, const Vector& xhat, int k) {
    if (x.n != xhat.size())
        throw std::invalid_argument("square_error: dimension mismatch");
    double acc = 0.0;
    std::size_t s = 0;
    for (int i = 0; i < x.n; ++i) {
        double xi = 0.0;
        if (s < x.support.size() && x.support[s] == i) xi = x.values[s++];
        const double d = xi - xhat[i];
        acc += d * d;
    }
    return acc / k;
}

double square_error(const SparseSignal& x, const SparseSignal& xhat, int k) {
    if (x.n != xhat.n)
        throw std::invalid_argument("square_error: dimension mismatch");
    // Merge the two sorted supports; coordinates outside both contribute 0.
    double acc = 0.0;
    std::size_t i = 0, j = 0;
    while (i < x.support.size() || j < xhat.support.size()) {
        int si = i < x.support.size() ? x.support[i] : x.n;
        int sj = j < xhat.support.size() ? xhat.support[j] : x.n;
        double d;
        if (si < sj) {
            d = x.values[i++];
        } else if (sj < si) {
            d = -xhat.values[j++];
        } else {
            d = x.values[i++] - xhat.values[j++];
        }
        acc += d * d;
    }
    return acc / k;
}

}  // namespace subsparse
