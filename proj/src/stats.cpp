#include "dmgrid/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dmgrid/common.hpp"

namespace dmgrid::stats {

namespace {

double quantile_sorted(const std::vector<double>& s, double q) {
    // Linear interpolation between order statistics (type 7).
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, s.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return s[lo] + frac * (s[hi] - s[lo]);
}

double binom_pmf(int n, int k) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
                    n * std::log(2.0));
}

std::vector<double> standardize(const std::vector<double>& v) {
    const double mu = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    std::vector<double> out(v.size(), 0.0);
    if (sd > 0.0)
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mu) / sd;
    return out;
}

}  // namespace

double median(std::vector<double> values) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "median of empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(const std::vector<double>& values) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "mean of empty sample");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

Interval bootstrap_ci(const std::vector<double>& sample, Statistic statistic, int n_resamples,
                      double level, Rng& rng) {
    if (sample.empty()) throw Error(ErrorCode::InvalidArgument, "bootstrap of empty sample");
    if (n_resamples < 1000) throw Error(ErrorCode::InvalidArgument, "bootstrap needs >= 1000 resamples");
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidArgument, "level must lie in (0, 1)");
    for (double v : sample)
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite sample value");
    if (sample.size() == 1) return {sample[0], sample[0], true};

    const std::size_t n = sample.size();
    std::vector<double> stats(n_resamples);
    std::vector<double> draw(n);
    for (int r = 0; r < n_resamples; ++r) {
        for (std::size_t i = 0; i < n; ++i) draw[i] = sample[rng.index(n)];
        stats[r] = statistic == Statistic::Median ? median(draw) : mean(draw);
    }
    std::sort(stats.begin(), stats.end());
    const double alpha = 1.0 - level;
    return {quantile_sorted(stats, alpha / 2.0), quantile_sorted(stats, 1.0 - alpha / 2.0), false};
}

std::vector<double> ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> out(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) out[order[t]] = r;
        i = j + 1;
    }
    return out;
}

Correlation pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "correlation needs two equal-length samples");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return {0.0, true};
    return {std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0), false};
}

Correlation spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw Error(ErrorCode::InvalidArgument, "spearman needs equal lengths >= 3");
    return pearson(ranks(x), ranks(y));
}

TestResult sign_test(const std::vector<double>& diffs) {
    TestResult r;
    int pos = 0, n = 0;
    for (double d : diffs) {
        if (d == 0.0) continue;
        ++n;
        if (d > 0.0) ++pos;
    }
    r.n = n;
    r.statistic = pos;
    if (n == 0) {
        r.undefined = true;
        return r;
    }
    double upper = 0.0, lower = 0.0;
    for (int k = pos; k <= n; ++k) upper += binom_pmf(n, k);
    for (int k = 0; k <= pos; ++k) lower += binom_pmf(n, k);
    r.p_one_sided = std::min(1.0, upper);
    r.p_two_sided = std::min(1.0, 2.0 * std::min(upper, lower));
    return r;
}

TestResult wilcoxon_signed_rank(const std::vector<double>& diffs) {
    TestResult r;
    std::vector<double> mags, signs;
    for (double d : diffs) {
        if (d == 0.0) continue;
        mags.push_back(std::fabs(d));
        signs.push_back(d > 0.0 ? 1.0 : -1.0);
    }
    const int n = static_cast<int>(mags.size());
    r.n = n;
    if (n == 0) {
        r.undefined = true;
        r.p_two_sided = 1.0;
        return r;
    }
    const std::vector<double> rk = ranks(mags);
    double w_plus = 0.0;
    for (int i = 0; i < n; ++i)
        if (signs[i] > 0) w_plus += rk[i];
    r.statistic = w_plus;
    const double total = n * (n + 1) / 2.0;
    const double center = total / 2.0;

    if (n <= 25) {
        // Exact null over all 2^n sign assignments of the observed (possibly tied) ranks,
        // counted on a half-integer grid.
        const int scale = 2;
        const int max_sum = static_cast<int>(std::lround(total * scale));
        std::vector<double> dist(max_sum + 1, 0.0);
        dist[0] = 1.0;
        int reach = 0;
        for (int i = 0; i < n; ++i) {
            const int w = static_cast<int>(std::lround(rk[i] * scale));
            for (int s = reach; s >= 0; --s)
                if (dist[s] != 0.0) dist[s + w] += dist[s];
            reach += w;
        }
        const double norm = std::ldexp(1.0, n);
        const double dev = std::fabs(w_plus - center);
        double tail = 0.0;
        for (int s = 0; s <= max_sum; ++s) {
            if (dist[s] == 0.0) continue;
            const double v = static_cast<double>(s) / scale;
            if (std::fabs(v - center) >= dev - 1e-9) tail += dist[s];
        }
        r.p_two_sided = std::min(1.0, tail / norm);
        r.p_one_sided = r.p_two_sided / 2.0;
        return r;
    }

    double tie_term = 0.0;
    std::vector<double> sorted = mags;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if (var <= 0.0) {
        r.undefined = true;
        return r;
    }
    const double z = (w_plus - center) / std::sqrt(var);
    r.p_two_sided = std::min(1.0, std::erfc(std::fabs(z) / std::sqrt(2.0)));
    r.p_one_sided = r.p_two_sided / 2.0;
    return r;
}

Mediation mediation_indirect(const std::vector<double>& x, const std::vector<double>& m,
                             const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (m.size() != n || y.size() != n || n < 10)
        throw Error(ErrorCode::InvalidArgument, "mediation needs three equal-length samples of >= 10");
    const auto zx = standardize(x), zm = standardize(m), zy = standardize(y);
    Mediation out;

    const double rxm = pearson(zx, zm).rho;
    const double rxy = pearson(zx, zy).rho;
    const double rmy = pearson(zm, zy).rho;
    out.a = rxm;
    out.total = rxy;
    const double nd = static_cast<double>(n);

    if (std::fabs(std::fabs(rxm) - 1.0) < 1e-12) {
        // x and m carry the same information: the whole effect runs through m.
        out.collinear = true;
        out.b = rmy;
        out.indirect = out.a * out.b;
        out.r_squared = rmy * rmy;
        return out;
    }

    // With standardized variables the two-predictor OLS has a closed form in correlations.
    const double det = 1.0 - rxm * rxm;
    out.b = (rmy - rxy * rxm) / det;
    out.direct = (rxy - rmy * rxm) / det;
    out.indirect = out.a * out.b;
    out.r_squared = std::clamp(out.direct * rxy + out.b * rmy, 0.0, 1.0);

    const double se_a = std::sqrt(std::max(0.0, (1.0 - rxm * rxm) / (nd - 2.0)));
    const double resid_var = std::max(0.0, (1.0 - out.r_squared) * (nd - 1.0) / (nd - 3.0));
    const double se_b = std::sqrt(resid_var / ((nd - 1.0) * det));
    const double se_ab = std::sqrt(out.b * out.b * se_a * se_a + out.a * out.a * se_b * se_b);
    out.sobel_t = se_ab > 0.0 ? out.indirect / se_ab : 0.0;
    return out;
}

bool equivalence_check(const std::vector<double>& a, const std::vector<double>& b, double margin,
                       Rng& rng, int n_resamples, double level) {
    if (!(margin > 0.0)) throw Error(ErrorCode::InvalidArgument, "equivalence margin must be positive");
    if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "equivalence of empty sample");
    std::vector<double> diffs(n_resamples);
    std::vector<double> da(a.size()), db(b.size());
    for (int r = 0; r < n_resamples; ++r) {
        for (auto& v : da) v = a[rng.index(a.size())];
        for (auto& v : db) v = b[rng.index(b.size())];
        diffs[r] = median(da) - median(db);
    }
    std::sort(diffs.begin(), diffs.end());
    const double alpha = 1.0 - level;
    const double lo = quantile_sorted(diffs, alpha / 2.0);
    const double hi = quantile_sorted(diffs, 1.0 - alpha / 2.0);
    return lo >= -margin && hi <= margin;
}

}  // namespace dmgrid::stats
