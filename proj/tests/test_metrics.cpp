#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dmgrid/metrics.hpp"
#include "dmgrid/rng.hpp"
#include "helpers.hpp"

using namespace dmgrid;
using testutil::basis;

TEST_CASE("R is 1 when group means equal the true centroids") {
    std::vector<Vec> c{basis(4, 0), basis(4, 1), basis(4, 2)};
    std::vector<Vec> g{2.0 * c[0], 0.5 * c[1], c[2]};
    const auto q = representation_quality(g, c, {0, 1, 2});
    CHECK(q.r_mean == doctest::Approx(1.0));
    CHECK_FALSE(q.degenerate);
}

TEST_CASE("R is 0 for orthogonal group means") {
    std::vector<Vec> c{basis(6, 0), basis(6, 1), basis(6, 2)};
    std::vector<Vec> g{basis(6, 3), basis(6, 4), basis(6, 5)};
    CHECK(representation_quality(g, c, {0, 1, 2}).r_mean == doctest::Approx(0.0));
}

TEST_CASE("zero group mean is flagged") {
    std::vector<Vec> c{basis(3, 0), basis(3, 1)};
    std::vector<Vec> g{Vec::Zero(3), basis(3, 1)};
    const auto q = representation_quality(g, c, {0, 1});
    CHECK(q.degenerate);
    CHECK(q.r_mean == doctest::Approx(0.5));
}

TEST_CASE("best assignment matches a brute-force search") {
    Rng rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        const int k = 2 + rep % 4;
        std::vector<Vec> g, c;
        for (int i = 0; i < k; ++i) {
            g.push_back(rng.unit_vector(8));
            c.push_back(rng.unit_vector(8));
        }
        std::vector<int> perm(k);
        std::iota(perm.begin(), perm.end(), 0);
        double best = -1e9;
        do {
            double s = 0.0;
            for (int e = 0; e < k; ++e) s += cosine(g[e], c[perm[e]]);
            best = std::max(best, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
        const auto a = best_assignment(g, c);
        double got = 0.0;
        for (int e = 0; e < k; ++e) got += cosine(g[e], c[a[e]]);
        CHECK(got == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("firing selectivity extremes") {
    CHECK(firing_selectivity({{5, 0, 0}, {0, 3, 0}, {0, 0, 1}}).value == doctest::Approx(1.0));
    CHECK(firing_selectivity({{5, 1, 0}, {1, 3, 0}, {2, 2, 2}}).value == doctest::Approx(0.0));
    CHECK(firing_selectivity({{0, 0}, {0, 0}}).undefined);
}

TEST_CASE("mutual information examples") {
    CHECK(mutual_information({{10, 0, 0}, {0, 10, 0}, {0, 0, 10}}) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(mutual_information({{5, 5}, {5, 5}}) == doctest::Approx(0.0));
    // Joint [[0.5, 0], [0.25, 0.25]].
    const double expect = 0.5 * std::log(0.5 / (0.5 * 0.75)) + 0.25 * std::log(0.25 / (0.5 * 0.75)) +
                          0.25 * std::log(0.25 / (0.5 * 0.25));
    CHECK(mutual_information({{2, 0}, {1, 1}}) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(mutual_information({{2, 0}, {1, 1}}) == doctest::Approx(0.2158).epsilon(1e-3));
}

TEST_CASE("MI of a bijective table is ln K") {
    std::vector<std::vector<double>> t(5, std::vector<double>(5, 0.0));
    const int perm[5] = {3, 0, 4, 1, 2};
    for (int i = 0; i < 5; ++i) t[i][perm[i]] = 7.0;
    CHECK(std::fabs(mutual_information(t) - std::log(5.0)) < 1e-9);
}

TEST_CASE("silhouette of antipodal clusters") {
    Rng rng(5);
    std::vector<Vec> pts;
    std::vector<int> lab;
    for (int i = 0; i < 50; ++i) {
        Vec v = basis(4, 0) + 0.01 * rng.gaussian(4);
        pts.push_back(i % 2 ? v : Vec(-v));
        lab.push_back(i % 2);
    }
    CHECK(silhouette_cosine(pts, lab).value >= 0.99);
}

TEST_CASE("silhouette with random labels is near zero") {
    Rng rng(6);
    std::vector<Vec> pts;
    std::vector<int> lab;
    for (int i = 0; i < 1000; ++i) {
        pts.push_back(rng.unit_vector(8));
        lab.push_back(static_cast<int>(rng.index(3)));
    }
    CHECK(std::fabs(silhouette_cosine(pts, lab).value) <= 0.05);
}

TEST_CASE("silhouette is invariant to per-point rescaling") {
    Rng rng(7);
    std::vector<Vec> pts, scaled;
    std::vector<int> lab;
    for (int i = 0; i < 60; ++i) {
        Vec v = basis(5, i % 3) + 0.3 * rng.gaussian(5);
        pts.push_back(v);
        scaled.push_back((0.1 + rng.uniform() * 10.0) * v);
        lab.push_back(i % 3);
    }
    CHECK(silhouette_cosine(pts, lab).value == doctest::Approx(silhouette_cosine(scaled, lab).value).epsilon(1e-12));
}

TEST_CASE("silhouette of a single cluster is undefined") {
    CHECK(silhouette_cosine({basis(2, 0), basis(2, 1)}, {0, 0}).undefined);
}

namespace {
MetricsReport report(double r, double mi, double fsel) {
    MetricsReport m;
    m.r_mean = r;
    m.mutual_information = mi;
    m.firing_selectivity = fsel;
    return m;
}
}  // namespace

TEST_CASE("operating point classification") {
    const MetricsReport base = report(0.30, 0.0, 0.0);
    const double ln3 = std::log(3.0);
    CHECK(classify_operating_point(report(0.98, ln3, 1.0), base, 3) == Verdict::Pass);
    CHECK(classify_operating_point(report(0.568, ln3, 1.0), base, 3) == Verdict::Degraded);
    CHECK(classify_operating_point(report(0.30, ln3, 1.0), base, 3) == Verdict::Fail);
    // Good R but no routing information.
    CHECK(classify_operating_point(report(0.98, 0.0, 1.0), base, 3) == Verdict::Degraded);
    // R above 0.7 but too close to the baseline.
    CHECK(classify_operating_point(report(0.80, ln3, 1.0), report(0.72, 0, 0), 3) == Verdict::Fail);
}
