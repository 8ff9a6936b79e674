#ifndef SUBSPARSE_NUMERIC_HPP
#define SUBSPARSE_NUMERIC_HPP

#include <vector>

// Log-domain numeric helpers shared by the bound and estimator code.

namespace subsparse {

// ln C(n, k) via lgamma; exact 0 for k=0 or k=n.
double log_binomial(int n, int k);

// ln(sum exp(terms)). Max-subtraction plus ascending-order accumulation.
// Empty input returns -inf. Terms of -inf are skipped.
double log_sum_exp(std::vector<double> terms);

// Sum with ascending |value| accumulation, for reproducible reductions.
double sorted_sum(std::vector<double> terms);

}  // namespace subsparse

#endif
