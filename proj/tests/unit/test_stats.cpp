#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "meshsim/core/rng.hpp"
#include "meshsim/stats/stats.hpp"

using namespace meshsim;
using namespace meshsim::stats;

namespace {

std::vector<std::int64_t> row(std::initializer_list<std::int64_t> v) { return v; }

SquareMatrix block_similarity(const std::vector<int>& group, double within, double across) {
    const int n = static_cast<int>(group.size());
    SquareMatrix L(n, 1.0);
    for (int r = 0; r < n; ++r) {
        for (int s = 0; s < n; ++s) {
            if (r != s) L(r, s) = group[static_cast<std::size_t>(r)] == group[static_cast<std::size_t>(s)] ? within : across;
        }
    }
    return L;
}

}  // namespace

TEST_CASE("wilson-hilferty critical values") {
    // Frozen from the cube-root normal approximation evaluated independently.
    CHECK(chi2_critical(1, 0.01) == doctest::Approx(6.585773096926759).epsilon(1e-9));
    CHECK(chi2_critical(7, 0.05) == doctest::Approx(14.046832848231944).epsilon(1e-9));
    CHECK(chi2_critical(3, 0.10) == doctest::Approx(6.213921164979363).epsilon(1e-9));
    CHECK_THROWS(chi2_critical(0, 0.05));
    CHECK_THROWS(chi2_critical(3, 1.5));
}

TEST_CASE("chi-square row test") {
    const auto a = row({10, 0});
    const auto b = row({0, 10});
    const auto r = chi2_row_test(a, b, 0.01);
    CHECK(r.statistic == doctest::Approx(20.0));
    CHECK(r.reject);

    const auto same = chi2_row_test(row({3, 4, 5}), row({3, 4, 5}), 0.05);
    CHECK(same.statistic == doctest::Approx(0.0));
    CHECK_FALSE(same.reject);

    const auto empty = chi2_row_test(row({0, 0}), row({0, 0}), 0.05);
    CHECK(empty.no_sample);
    CHECK_FALSE(empty.reject);

    // Scaling both rows by 2 doubles the statistic.
    const auto x = chi2_row_test(row({5, 3, 2}), row({2, 6, 2}), 0.05).statistic;
    const auto y = chi2_row_test(row({10, 6, 4}), row({4, 12, 4}), 0.05).statistic;
    CHECK(y == doctest::Approx(2 * x));
}

TEST_CASE("similarity is alpha to the number of rejected rows") {
    CountMatrix a(2);
    CountMatrix b(2);
    CHECK(similarity_L(a, b, 0.01).value == 1.0);
    a.at(0, 0) = 10;
    b.at(0, 1) = 10;
    a.at(1, 0) = 10;
    b.at(1, 1) = 10;
    const auto sim = similarity_L(a, b, 0.01);
    CHECK(sim.rejected_rows == 2);
    CHECK(sim.value == doctest::Approx(1e-4));
}

TEST_CASE("dissimilarity") {
    const double eps = 0.125;
    const int peers = 4;
    SquareMatrix L(peers + 2, 1.0);
    for (int t = 2; t < peers + 2; ++t) {
        L(0, t) = L(t, 0) = 1.0;
        L(1, t) = L(t, 1) = eps;
    }
    CHECK(dissimilarity_d(0, 1, L) == doctest::Approx(1.0 - eps));
    CHECK(dissimilarity_d(1, 0, L) == doctest::Approx(1.0 - eps));
    CHECK(dissimilarity_d(2, 3, L) == doctest::Approx(0.0));

    SquareMatrix zero(3, 0.0);
    CHECK(dissimilarity_d(0, 1, zero) == 1.0);
}

TEST_CASE("single linkage") {
    const auto L = block_similarity({0, 0, 1, 1, 0, 1}, 1.0, 0.01);
    const auto d = dissimilarity_matrix(L);
    CHECK(single_linkage_cluster(d, 6) == std::vector<int>{0, 1, 2, 3, 4, 5});
    CHECK(single_linkage_cluster(d, 1) == std::vector<int>(6, 0));
    CHECK(single_linkage_cluster(d, 2) == std::vector<int>{0, 0, 1, 1, 0, 1});
    CHECK_THROWS(single_linkage_cluster(d, 7));

    // All distances tied: the lowest index pair merges first.
    SquareMatrix flat(4, 0.5);
    for (int i = 0; i < 4; ++i) flat(i, i) = 0.0;
    CHECK(single_linkage_cluster(flat, 3) == std::vector<int>{0, 0, 1, 2});
}

TEST_CASE("cooperation scores") {
    const auto L = block_similarity({0, 0, 0, 1, 1}, 1.0, 0.0);
    const std::vector<int> good{0, 1, 2};
    const std::vector<int> bad{3, 4};
    const auto c = cooperation_scores(L, good, bad);
    CHECK(c[0] == doctest::Approx(1.0));
    CHECK(c[3] == doctest::Approx(-1.0));

    const auto uniform = block_similarity({0, 0, 0, 0}, 0.3, 0.3);
    for (double v : cooperation_scores(uniform, std::vector<int>{0, 1}, std::vector<int>{2, 3})) CHECK(v == doctest::Approx(0.0));
    CHECK_THROWS(cooperation_scores(L, std::vector<int>{}, bad));
}

TEST_CASE("anova permutation p against exact enumeration") {
    const std::vector<double> scores{0, 0, 0, 1, 1, 1};
    const std::vector<int> labels{0, 0, 0, 1, 1, 1};
    // Exact: of the 20 ways to pick 3 positions for label 0, only 2 reach the
    // observed between-cluster sum of squares, so p = 0.1.
    int extreme = 0;
    int total = 0;
    const double observed = between_cluster_ss(scores, labels);
    for (int mask = 0; mask < 64; ++mask) {
        if (__builtin_popcount(static_cast<unsigned>(mask)) != 3) continue;
        std::vector<int> l(6);
        for (int i = 0; i < 6; ++i) l[static_cast<std::size_t>(i)] = (mask >> i) & 1;
        ++total;
        extreme += between_cluster_ss(scores, l) >= observed - 1e-12;
    }
    CHECK(total == 20);
    CHECK(extreme == 2);
    CHECK(anova_p(scores, labels, 10000, 1) == doctest::Approx(0.1).epsilon(0.1));

    CHECK(anova_p(std::vector<double>{2, 2, 2, 2}, std::vector<int>{0, 0, 1, 1}, 100, 1) == 1.0);
    CHECK_THROWS(anova_p(scores, std::vector<int>(6, 0), 100, 1));
    CHECK(anova_p(scores, labels, 500, 9) == anova_p(scores, labels, 500, 9));
}

TEST_CASE("anova f-test p value") {
    // scipy.stats.f_oneway([1, 2, 3], [4, 5, 6]): F = 13.5 on (1, 4) df.
    CHECK(anova_f_p(std::vector<double>{1, 2, 3, 4, 5, 6}, std::vector<int>{0, 0, 0, 1, 1, 1}) ==
          doctest::Approx(0.02131164112875672).epsilon(1e-9));
    CHECK(anova_f_p(std::vector<double>{0, 0, 1, 1}, std::vector<int>{0, 0, 1, 1}) == 0.0);
    CHECK(anova_f_p(std::vector<double>{2, 2, 2, 2}, std::vector<int>{0, 0, 1, 1}) == 1.0);
    CHECK(anova_f_p(std::vector<double>{0, 1}, std::vector<int>{0, 1}) == 1.0);
    CHECK(to_string(AnovaMethod::FTest) == "f_test");
    CHECK(anova_method_from_string("permutation") == AnovaMethod::Permutation);
    CHECK_FALSE(anova_method_from_string("bogus"));

    ClassifyParams params;
    params.anova = AnovaMethod::FTest;
    const auto cls = classify_similarity(block_similarity({0, 0, 0, 0, 0, 0, 1, 1}, 1.0, 0.05), params);
    REQUIRE(cls.accepted);
    CHECK(cls.labels[6] == Label::Selfish);
    CHECK(cls.labels[0] == Label::Cooperative);
}

TEST_CASE("classification on block structured similarity") {
    ClassifyParams params;
    params.resamples = 2000;
    const auto two_bad = block_similarity({0, 0, 0, 0, 0, 0, 1, 1}, 1.0, 0.05);
    const auto cls = classify_similarity(two_bad, params);
    REQUIRE(cls.accepted);
    CHECK(cls.labels[6] == Label::Selfish);
    CHECK(cls.labels[7] == Label::Selfish);
    for (int i = 0; i < 6; ++i) CHECK(cls.labels[static_cast<std::size_t>(i)] == Label::Cooperative);

    const auto honest = block_similarity({0, 0, 0, 0, 0}, 1.0, 1.0);
    const auto none = classify_similarity(honest, params);
    CHECK_FALSE(none.accepted);
    for (auto l : none.labels) CHECK(l == Label::Cooperative);

    const auto tiny = classify_similarity(block_similarity({0, 1}, 1.0, 0.0), params);
    CHECK(tiny.insufficient_data);
    CHECK(tiny.labels == std::vector<Label>{Label::Unknown, Label::Unknown});
}

TEST_CASE("chi-square calibration under the null") {
    Rng rng(2024);
    const double probs[4] = {0.4, 0.3, 0.2, 0.1};
    auto draw = [&] {
        std::vector<std::int64_t> r(4, 0);
        for (int i = 0; i < 200; ++i) {
            const double u = rng.uniform01();
            double acc = 0.0;
            for (int j = 0; j < 4; ++j) {
                acc += probs[j];
                if (u < acc || j == 3) {
                    ++r[static_cast<std::size_t>(j)];
                    break;
                }
            }
        }
        return r;
    };
    int rejects = 0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) rejects += chi2_row_test(draw(), draw(), 0.05).reject;
    const double rate = static_cast<double>(rejects) / trials;
    CHECK(rate > 0.03);
    CHECK(rate < 0.07);
}
