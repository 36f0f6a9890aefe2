#include "dmgrid/metrics.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numeric>

namespace dmgrid {

QualityResult representation_quality(const std::vector<Vec>& group_means,
                                     const std::vector<Vec>& true_centroids,
                                     const std::vector<int>& assignment) {
    if (group_means.size() != assignment.size())
        throw Error(ErrorCode::InvalidArgument, "assignment size does not match expert count");
    QualityResult out;
    out.r_per_context.resize(group_means.size());
    for (std::size_t e = 0; e < group_means.size(); ++e) {
        const Vec& c = true_centroids.at(static_cast<std::size_t>(assignment[e]));
        if (group_means[e].norm() < 1e-12) {
            out.degenerate = true;
            out.r_per_context[e] = 0.0;
        } else {
            out.r_per_context[e] = cosine(group_means[e], c);
        }
    }
    if (!out.r_per_context.empty())
        out.r_mean = std::accumulate(out.r_per_context.begin(), out.r_per_context.end(), 0.0) /
                     static_cast<double>(out.r_per_context.size());
    return out;
}

std::vector<int> best_assignment(const std::vector<Vec>& group_means,
                                 const std::vector<Vec>& true_centroids) {
    const std::size_t k = group_means.size();
    if (true_centroids.size() != k)
        throw Error(ErrorCode::InvalidArgument, "assignment needs as many contexts as experts");
    std::vector<std::vector<double>> sim(k, std::vector<double>(k));
    for (std::size_t e = 0; e < k; ++e)
        for (std::size_t c = 0; c < k; ++c) sim[e][c] = cosine(group_means[e], true_centroids[c]);

    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    auto score = [&](const std::vector<int>& p) {
        double s = 0.0;
        for (std::size_t e = 0; e < k; ++e) s += sim[e][p[e]];
        return s;
    };

    if (k <= 8) {
        std::vector<int> best = perm;
        double best_score = score(perm);
        while (std::next_permutation(perm.begin(), perm.end())) {
            const double s = score(perm);
            if (s > best_score + 1e-15) {
                best_score = s;
                best = perm;
            }
        }
        return best;
    }

    // Pairwise-swap hill climbing from the identity for large K.
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b) {
                const double delta = sim[a][perm[b]] + sim[b][perm[a]] - sim[a][perm[a]] - sim[b][perm[b]];
                if (delta > 1e-12) {
                    std::swap(perm[a], perm[b]);
                    improved = true;
                }
            }
    }
    return perm;
}

SelectivityResult firing_selectivity(const std::vector<std::vector<long>>& fire_log) {
    long fired = 0;
    long exclusive = 0;
    for (const auto& row : fire_log) {
        int contexts = 0;
        for (long c : row)
            if (c > 0) ++contexts;
        if (contexts == 0) continue;
        ++fired;
        if (contexts == 1) ++exclusive;
    }
    if (fired == 0) return {0.0, true};
    return {static_cast<double>(exclusive) / static_cast<double>(fired), false};
}

double mutual_information(const std::vector<std::vector<double>>& joint_counts) {
    double total = 0.0;
    const std::size_t rows = joint_counts.size();
    const std::size_t cols = rows ? joint_counts[0].size() : 0;
    std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        if (joint_counts[i].size() != cols)
            throw Error(ErrorCode::InvalidArgument, "ragged joint count table");
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = joint_counts[i][j];
            if (v < 0.0) throw Error(ErrorCode::InvalidArgument, "negative joint count");
            row_sum[i] += v;
            col_sum[j] += v;
            total += v;
        }
    }
    if (total <= 0.0) throw Error(ErrorCode::InvalidArgument, "joint count table is empty");
    double mi = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = joint_counts[i][j];
            if (v <= 0.0) continue;
            mi += (v / total) * std::log(v * total / (row_sum[i] * col_sum[j]));
        }
    return std::max(0.0, mi);
}

SilhouetteResult silhouette_cosine(const std::vector<Vec>& points, const std::vector<int>& labels) {
    const std::size_t n = points.size();
    if (labels.size() != n) throw Error(ErrorCode::InvalidArgument, "points and labels differ in length");
    if (n == 0) return {0.0, true};

    std::vector<int> ids = labels;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() < 2) return {0.0, true};
    std::vector<int> cluster(n);
    for (std::size_t i = 0; i < n; ++i)
        cluster[i] = static_cast<int>(std::lower_bound(ids.begin(), ids.end(), labels[i]) - ids.begin());
    const std::size_t m = ids.size();
    std::vector<long> size(m, 0);
    for (int c : cluster) ++size[c];

    // Unit-normalise once; cosine distance is then 1 - dot.
    const int dim = static_cast<int>(points[0].size());
    Eigen::MatrixXd u(dim, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double nrm = points[i].norm();
        u.col(i) = nrm > 1e-12 ? Vec(points[i] / nrm) : Vec(Vec::Zero(dim));
    }
    const Eigen::MatrixXd gram = u.transpose() * u;

    double total = 0.0;
    std::vector<double> dist_sum(m);
    for (std::size_t i = 0; i < n; ++i) {
        if (size[cluster[i]] < 2) continue;  // singleton scores 0
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            dist_sum[cluster[j]] += 1.0 - gram(i, j);
        }
        const double a = dist_sum[cluster[i]] / static_cast<double>(size[cluster[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < m; ++c) {
            if (static_cast<int>(c) == cluster[i]) continue;
            b = std::min(b, dist_sum[c] / static_cast<double>(size[c]));
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return {total / static_cast<double>(n), false};
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "Pass";
        case Verdict::Degraded: return "Degraded";
        case Verdict::Fail: return "Fail";
        case Verdict::NotApplicable: return "n/a";
    }
    return "n/a";
}

Verdict classify_operating_point(const MetricsReport& report, const MetricsReport& baseline, int k,
                                 const ClassifierThresholds& t) {
    const double delta = report.r_mean - baseline.r_mean;
    if (delta < t.fail_delta) return Verdict::Fail;
    const bool pass = report.r_mean > t.pass_r && delta >= t.pass_delta &&
                      report.mutual_information >= t.pass_mi_fraction * std::log(static_cast<double>(k)) &&
                      report.firing_selectivity >= t.pass_selectivity;
    return pass ? Verdict::Pass : Verdict::Degraded;
}

}  // namespace dmgrid
