#pragma once

#include <string>
#include <vector>

#include "dmgrid/rng.hpp"

namespace dmgrid::stats {

double median(std::vector<double> values);
double mean(const std::vector<double>& values);

enum class Statistic { Median, Mean };

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool degenerate = false;  ///< single-element sample
};

/// Percentile bootstrap interval. Throws InvalidArgument on an empty sample or
/// fewer than 1000 resamples.
Interval bootstrap_ci(const std::vector<double>& sample, Statistic statistic, int n_resamples,
                      double level, Rng& rng);

/// Average ranks (1-based), ties share the mean rank.
std::vector<double> ranks(const std::vector<double>& values);

struct Correlation {
    double rho = 0.0;
    bool undefined = false;
};

Correlation pearson(const std::vector<double>& x, const std::vector<double>& y);
Correlation spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

struct TestResult {
    double p_one_sided = 1.0;  ///< P(at least this many positives | fair coin), sign test only
    double p_two_sided = 1.0;
    double statistic = 0.0;
    int n = 0;  ///< non-zero differences used
    bool undefined = false;
};

/// Exact binomial sign test; zero differences dropped.
TestResult sign_test(const std::vector<double>& diffs);

/// Wilcoxon signed-rank, two-sided. Exact null distribution for n <= 25,
/// normal approximation with tie correction above. Statistic = W+.
TestResult wilcoxon_signed_rank(const std::vector<double>& diffs);

struct Mediation {
    double a = 0.0;         ///< m ~ x slope (standardized)
    double b = 0.0;         ///< m coefficient in y ~ x + m (standardized)
    double direct = 0.0;    ///< x coefficient in y ~ x + m
    double indirect = 0.0;  ///< a * b
    double total = 0.0;     ///< y ~ x slope
    double sobel_t = 0.0;
    double r_squared = 0.0;  ///< of y ~ x + m
    bool collinear = false;  ///< |corr(x, m)| == 1: only the b path (y ~ m) is reported
};

/// Two-regression mediation on standardized variables (needs >= 10 points).
Mediation mediation_indirect(const std::vector<double>& x, const std::vector<double>& m,
                             const std::vector<double>& y);

/// True iff the bootstrap CI of median(a) - median(b) lies inside [-margin, margin].
bool equivalence_check(const std::vector<double>& a, const std::vector<double>& b, double margin,
                       Rng& rng, int n_resamples = 2000, double level = 0.95);

}  // namespace dmgrid::stats
