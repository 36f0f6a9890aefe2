#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dmgrid/stats.hpp"

using namespace dmgrid;
using namespace dmgrid::stats;

TEST_CASE("bootstrap median interval of 1..100 brackets 50.5") {
    std::vector<double> s(100);
    std::iota(s.begin(), s.end(), 1.0);
    Rng rng(1);
    const auto ci = bootstrap_ci(s, Statistic::Median, 2000, 0.95, rng);
    CHECK(ci.lo <= 50.5);
    CHECK(ci.hi >= 50.5);
    CHECK(ci.lo >= 40.0);
    CHECK(ci.hi <= 61.0);
}

TEST_CASE("bootstrap of a constant sample collapses") {
    Rng rng(2);
    const auto ci = bootstrap_ci(std::vector<double>(20, 0.37), Statistic::Median, 1000, 0.95, rng);
    CHECK(ci.lo == doctest::Approx(0.37));
    CHECK(ci.hi == doctest::Approx(0.37));
}

TEST_CASE("bootstrap intervals of disjoint samples do not overlap") {
    std::vector<double> a, b;
    for (int i = 0; i < 30; ++i) {
        a.push_back(i * 0.01);
        b.push_back(10.0 + i * 0.01);
    }
    Rng rng(3);
    const auto ca = bootstrap_ci(a, Statistic::Median, 2000, 0.95, rng);
    const auto cb = bootstrap_ci(b, Statistic::Median, 2000, 0.95, rng);
    CHECK(ca.hi < cb.lo);
}

TEST_CASE("bootstrap contains the point estimate") {
    Rng gen(4);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> s(15);
        for (auto& v : s) v = gen.normal();
        Rng rng(100 + rep);
        const auto ci = bootstrap_ci(s, Statistic::Median, 1000, 0.95, rng);
        const double m = median(s);
        CHECK(ci.lo <= m);
        CHECK(m <= ci.hi);
    }
}

TEST_CASE("bootstrap is deterministic for a fixed stream") {
    std::vector<double> s{0.3, 0.1, 0.9, 0.4, 0.5, 0.2};
    Rng a(9), b(9);
    const auto x = bootstrap_ci(s, Statistic::Mean, 1000, 0.9, a);
    const auto y = bootstrap_ci(s, Statistic::Mean, 1000, 0.9, b);
    CHECK(x.lo == y.lo);
    CHECK(x.hi == y.hi);
}

TEST_CASE("bootstrap rejects bad arguments") {
    Rng rng(1);
    CHECK_THROWS_AS(bootstrap_ci({}, Statistic::Median, 1000, 0.95, rng), Error);
    CHECK_THROWS_AS(bootstrap_ci({1.0, 2.0}, Statistic::Median, 999, 0.95, rng), Error);
    CHECK_THROWS_AS(bootstrap_ci({1.0, NAN}, Statistic::Median, 1000, 0.95, rng), Error);
}

TEST_CASE("spearman of monotone maps is +-1") {
    std::vector<double> x{1, 2, 3, 4, 5, 6, 7}, up, down;
    for (double v : x) {
        up.push_back(std::exp(v));
        down.push_back(-v * v * v);
    }
    CHECK(spearman_rho(x, up).rho == doctest::Approx(1.0));
    CHECK(spearman_rho(x, down).rho == doctest::Approx(-1.0));
    CHECK(spearman_rho(x, std::vector<double>(7, 2.0)).undefined);
}

TEST_CASE("ranks share ties") {
    const auto r = ranks({10, 20, 20, 5});
    CHECK(r == std::vector<double>{2, 3.5, 3.5, 1});
}

TEST_CASE("sign test") {
    // 10 positives of 12: two-sided p = 2 * 79 / 4096.
    std::vector<double> d(12, 1.0);
    d[0] = d[1] = -1.0;
    CHECK(sign_test(d).p_two_sided == doctest::Approx(2.0 * 79.0 / 4096.0).epsilon(1e-12));
    CHECK(sign_test(d).p_two_sided == doctest::Approx(0.0386).epsilon(0.01));
    CHECK(sign_test({1, 1, 1, 1, 1, 1}).p_one_sided == doctest::Approx(1.0 / 64.0));
    CHECK(sign_test({0, 0, 0}).undefined);
}

TEST_CASE("wilcoxon exact null") {
    std::vector<double> pos;
    for (int i = 1; i <= 10; ++i) pos.push_back(i * 0.1);
    CHECK(wilcoxon_signed_rank(pos).p_two_sided == doctest::Approx(2.0 / 1024.0).epsilon(1e-12));
    // Perfectly symmetric differences.
    CHECK(wilcoxon_signed_rank({1, -1, 2, -2, 3, -3}).p_two_sided == doctest::Approx(1.0));
    CHECK(wilcoxon_signed_rank({0, 0}).undefined);
}

TEST_CASE("wilcoxon normal approximation agrees with direction") {
    std::vector<double> d;
    for (int i = 0; i < 40; ++i) d.push_back(i % 5 == 0 ? -0.1 : 1.0 + i);
    const auto w = wilcoxon_signed_rank(d);
    CHECK(w.p_two_sided < 1e-4);
    CHECK(w.statistic > 40 * 41 / 4.0);
}

TEST_CASE("sign and wilcoxon agree on direction") {
    Rng rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> d(12);
        const double shift = (rep % 2 ? 1.0 : -1.0) * 2.0;
        for (auto& v : d) v = shift + rng.normal();
        const auto s = sign_test(d);
        const auto w = wilcoxon_signed_rank(d);
        CHECK((s.statistic > 6) == (w.statistic > 39.0));
    }
}

TEST_CASE("mediation: pure chain and independent mediator") {
    std::vector<double> x(20);
    std::iota(x.begin(), x.end(), 0.0);
    const auto chain = mediation_indirect(x, x, x);
    CHECK(chain.collinear);
    CHECK(chain.indirect == doctest::Approx(1.0));
    CHECK(chain.total == doctest::Approx(1.0));

    Rng rng(6);
    std::vector<double> xs(400), m(400), y(400);
    for (int i = 0; i < 400; ++i) {
        xs[i] = rng.normal();
        m[i] = rng.normal();
        y[i] = xs[i] + 0.1 * rng.normal();
    }
    const auto ind = mediation_indirect(xs, m, y);
    CHECK(std::fabs(ind.indirect) < 0.05);
    CHECK(ind.direct > 0.9);
}

TEST_CASE("mediation: full mediation through a noisy mediator") {
    Rng rng(7);
    std::vector<double> x(200), m(200), y(200);
    for (int i = 0; i < 200; ++i) {
        x[i] = rng.normal();
        m[i] = x[i] + 0.5 * rng.normal();
        y[i] = m[i] + 0.1 * rng.normal();
    }
    const auto r = mediation_indirect(x, m, y);
    CHECK(r.indirect > 0.7);
    CHECK(std::fabs(r.direct) < 0.1);
    CHECK(r.sobel_t > 4.0);
    CHECK(r.r_squared > 0.9);
    CHECK_THROWS_AS(mediation_indirect({1, 2, 3}, {1, 2, 3}, {1, 2, 3}), Error);
}

TEST_CASE("equivalence check") {
    std::vector<double> a{0.50, 0.51, 0.49, 0.50, 0.52, 0.48};
    Rng rng(8);
    CHECK(equivalence_check(a, a, 0.05, rng));
    std::vector<double> b;
    for (double v : a) b.push_back(v + 0.5);
    CHECK_FALSE(equivalence_check(a, b, 0.05, rng));
    CHECK_THROWS_AS(equivalence_check(a, b, 0.0, rng), Error);
}

TEST_CASE("median and mean") {
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 2, 3}) == 2.5);
    CHECK(mean({1, 2, 3, 4}) == 2.5);
    CHECK_THROWS_AS(median({}), Error);
}
