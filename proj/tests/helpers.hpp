#pragma once

#include <cmath>
#include <vector>

#include "dmgrid/common.hpp"

namespace testutil {

inline dmgrid::Vec basis(int dim, int i) {
    dmgrid::Vec v = dmgrid::Vec::Zero(dim);
    v[i] = 1.0;
    return v;
}

// P(X <= k) for X ~ Binomial(n, p), summed in log space.
inline double binom_cdf(int n, double p, int k) {
    double s = 0.0;
    for (int i = 0; i <= k; ++i)
        s += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
                      i * std::log(p) + (n - i) * std::log1p(-p));
    return s;
}

// Central (1 - alpha) interval of Binomial(n, p) counts.
inline std::pair<int, int> binom_interval(int n, double p, double alpha) {
    int lo = 0;
    while (binom_cdf(n, p, lo) < alpha / 2.0) ++lo;
    int hi = lo;
    while (binom_cdf(n, p, hi) < 1.0 - alpha / 2.0) ++hi;
    return {lo, hi};
}

// Pearson chi-square of observed counts against expected probabilities.
inline double chi_square(const std::vector<long>& counts, const std::vector<double>& probs) {
    long n = 0;
    for (long c : counts) n += c;
    double x = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double e = probs[i] * static_cast<double>(n);
        x += (counts[i] - e) * (counts[i] - e) / e;
    }
    return x;
}

}  // namespace testutil
