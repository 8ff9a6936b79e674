#include "subsparse/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace subsparse {

double log_binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n)
        throw std::invalid_argument("log_binomial: need 0 <= k <= n");
    if (k == 0 || k == n) return 0.0;
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_sum_exp(std::vector<double> terms) {
    const double neg_inf = -std::numeric_limits<double>::infinity();
    terms.erase(std::remove(terms.begin(), terms.end(), neg_inf), terms.end());
    if (terms.empty()) return neg_inf;
    const double m = *std::max_element(terms.begin(), terms.end());
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    return m + std::log(s);
}

double sorted_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end(),
              [](double a, double b) { return std::abs(a) < std::abs(b); });
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

}  // namespace subsparse
