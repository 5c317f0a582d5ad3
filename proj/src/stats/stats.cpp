#include "meshsim/stats/stats.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "meshsim/core/rng.hpp"

namespace meshsim::stats {

double chi2_critical(int df, double alpha) {
    if (df < 1) throw std::invalid_argument("chi-square needs df >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("significance level must lie in (0, 1)");
    const double z = boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha);
    const double v = 2.0 / (9.0 * df);
    const double base = 1.0 - v + z * std::sqrt(v);
    return df * base * base * base;
}

Chi2RowResult chi2_row_test(std::span<const std::int64_t> row_r, std::span<const std::int64_t> row_s, double alpha) {
    if (row_r.size() != row_s.size() || row_r.empty()) throw std::invalid_argument("chi-square rows must have equal, non-zero length");
    const double total_r = std::accumulate(row_r.begin(), row_r.end(), 0.0);
    const double total_s = std::accumulate(row_s.begin(), row_s.end(), 0.0);
    Chi2RowResult out;
    if (total_r + total_s <= 0.0) {
        out.no_sample = true;
        return out;
    }
    const double pooled = total_r + total_s;
    double chi2 = 0.0;
    for (std::size_t j = 0; j < row_r.size(); ++j) {
        const double column = static_cast<double>(row_r[j] + row_s[j]);
        for (auto [observed, total] : {std::pair{static_cast<double>(row_r[j]), total_r}, std::pair{static_cast<double>(row_s[j]), total_s}}) {
            const double expected = total * column / pooled;
            if (expected <= 0.0) continue;
            chi2 += (observed - expected) * (observed - expected) / expected;
        }
    }
    out.statistic = chi2;
    out.reject = chi2 > chi2_critical(static_cast<int>(row_r.size()) - 1, alpha);
    return out;
}

Similarity similarity_L(const CountMatrix& t_r, const CountMatrix& t_s, double alpha) {
    if (t_r.size() != t_s.size()) throw std::invalid_argument("transition matrices differ in size");
    Similarity sim;
    for (int i = 0; i < t_r.size(); ++i) {
        if (chi2_row_test(t_r.row(i), t_s.row(i), alpha).reject) ++sim.rejected_rows;
    }
    sim.value = std::pow(alpha, sim.rejected_rows);
    return sim;
}

SquareMatrix similarity_matrix(std::span<const CountMatrix> matrices, double alpha) {
    const int n = static_cast<int>(matrices.size());
    SquareMatrix L(n, 1.0);
    for (int r = 0; r < n; ++r) {
        for (int s = r + 1; s < n; ++s) {
            const double v = similarity_L(matrices[static_cast<std::size_t>(r)], matrices[static_cast<std::size_t>(s)], alpha).value;
            L(r, s) = v;
            L(s, r) = v;
        }
    }
    return L;
}

double dissimilarity_d(int r, int s, const SquareMatrix& L) {
    double n_rs = 0.0;
    double n_r = 0.0;
    double n_s = 0.0;
    for (int t = 0; t < L.size(); ++t) {
        if (t == r || t == s) continue;
        n_rs += std::min(L(r, t), L(s, t));
        n_r += L(r, t);
        n_s += L(s, t);
    }
    if (n_r <= 0.0 || n_s <= 0.0) return 1.0;
    const double d = 1.0 - (n_rs * n_rs) / (n_r * n_s);
    return std::clamp(d, 0.0, 1.0);
}

SquareMatrix dissimilarity_matrix(const SquareMatrix& L) {
    const int n = L.size();
    SquareMatrix d(n, 0.0);
    for (int r = 0; r < n; ++r) {
        for (int s = r + 1; s < n; ++s) {
            const double v = dissimilarity_d(r, s, L);
            d(r, s) = v;
            d(s, r) = v;
        }
    }
    return d;
}

std::vector<int> single_linkage_cluster(const SquareMatrix& d, int k) {
    const int n = d.size();
    if (k < 1 || k > n) throw std::invalid_argument("cluster count must lie in [1, number of items]");
    std::vector<int> cluster(static_cast<std::size_t>(n));
    std::iota(cluster.begin(), cluster.end(), 0);
    for (int clusters = n; clusters > k; --clusters) {
        double best = std::numeric_limits<double>::infinity();
        int best_a = -1;
        int best_b = -1;
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                if (cluster[static_cast<std::size_t>(a)] == cluster[static_cast<std::size_t>(b)]) continue;
                if (d(a, b) < best) {
                    best = d(a, b);
                    best_a = a;
                    best_b = b;
                }
            }
        }
        const int keep = std::min(cluster[static_cast<std::size_t>(best_a)], cluster[static_cast<std::size_t>(best_b)]);
        const int drop = std::max(cluster[static_cast<std::size_t>(best_a)], cluster[static_cast<std::size_t>(best_b)]);
        for (auto& c : cluster) {
            if (c == drop) c = keep;
        }
    }
    // Renumber 0..k-1 in order of first appearance (smallest member first).
    std::map<int, int> remap;
    for (auto& c : cluster) {
        auto [it, inserted] = remap.emplace(c, static_cast<int>(remap.size()));
        c = it->second;
    }
    return cluster;
}

std::vector<double> cooperation_scores(const SquareMatrix& L, std::span<const int> good_seed, std::span<const int> bad_seed) {
    if (good_seed.empty() || bad_seed.empty()) throw std::invalid_argument("cooperation score needs non-empty seed sets");
    for (int g : good_seed) {
        if (std::find(bad_seed.begin(), bad_seed.end(), g) != bad_seed.end()) throw std::invalid_argument("seed sets must be disjoint");
    }
    auto mean_against = [&](int r, std::span<const int> set) {
        double sum = 0.0;
        int count = 0;
        for (int t : set) {
            if (t == r) continue;
            sum += L(r, t);
            ++count;
        }
        return count == 0 ? 1.0 : sum / count;
    };
    std::vector<double> scores(static_cast<std::size_t>(L.size()));
    for (int r = 0; r < L.size(); ++r) scores[static_cast<std::size_t>(r)] = mean_against(r, good_seed) - mean_against(r, bad_seed);
    return scores;
}

double between_cluster_ss(std::span<const double> scores, std::span<const int> labels) {
    std::map<int, std::pair<double, int>> groups;
    double grand = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        auto& g = groups[labels[i]];
        g.first += scores[i];
        g.second += 1;
        grand += scores[i];
    }
    grand /= static_cast<double>(scores.size());
    double ss = 0.0;
    for (const auto& [label, g] : groups) {
        const double mean = g.first / g.second;
        ss += g.second * (mean - grand) * (mean - grand);
    }
    return ss;
}

double anova_p(std::span<const double> scores, std::span<const int> labels, int resamples, std::uint64_t seed) {
    if (scores.size() != labels.size() || scores.empty()) throw std::invalid_argument("scores and labels must align");
    std::vector<int> distinct(labels.begin(), labels.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) throw std::invalid_argument("ANOVA needs at least two clusters");
    if (resamples < 1) throw std::invalid_argument("ANOVA needs at least one resample");

    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    if (*hi - *lo <= 1e-12 * std::max(1.0, std::abs(*hi))) return 1.0;

    const double observed = between_cluster_ss(scores, labels);
    const double tolerance = 1e-9 * std::max(1.0, observed);
    Rng rng(seed);
    std::vector<double> shuffled(scores.begin(), scores.end());
    int at_least = 0;
    for (int r = 0; r < resamples; ++r) {
        for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
            std::swap(shuffled[i], shuffled[rng.uniform_int(0, i)]);
        }
        if (between_cluster_ss(shuffled, labels) >= observed - tolerance) ++at_least;
    }
    return static_cast<double>(at_least) / resamples;
}

double anova_f_p(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty()) throw std::invalid_argument("scores and labels must align");
    std::map<int, std::pair<double, int>> groups;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        auto& g = groups[labels[i]];
        g.first += scores[i];
        g.second += 1;
    }
    const auto k = static_cast<double>(groups.size());
    const auto n = static_cast<double>(scores.size());
    if (groups.size() < 2) throw std::invalid_argument("ANOVA needs at least two clusters");
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    if (*hi - *lo <= 1e-12 * std::max(1.0, std::abs(*hi))) return 1.0;
    if (n - k < 1.0) return 1.0;

    double within = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& g = groups[labels[i]];
        const double d = scores[i] - g.first / g.second;
        within += d * d;
    }
    const double between = between_cluster_ss(scores, labels);
    if (within <= 1e-12 * std::max(1.0, between)) return 0.0;
    const double f = (between / (k - 1.0)) / (within / (n - k));
    const boost::math::fisher_f dist(k - 1.0, n - k);
    return boost::math::cdf(boost::math::complement(dist, f));
}

std::string to_string(AnovaMethod method) { return method == AnovaMethod::FTest ? "f_test" : "permutation"; }

std::optional<AnovaMethod> anova_method_from_string(std::string_view s) {
    if (s == "permutation") return AnovaMethod::Permutation;
    if (s == "f_test") return AnovaMethod::FTest;
    return std::nullopt;
}

std::string to_string(Label label) {
    switch (label) {
        case Label::Cooperative: return "cooperative";
        case Label::Selfish: return "selfish";
        case Label::Unknown: return "unknown";
    }
    return "unknown";
}

namespace {

std::vector<double> cluster_means(std::span<const double> values, std::span<const int> labels, int k) {
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        sum[static_cast<std::size_t>(labels[i])] += values[i];
        count[static_cast<std::size_t>(labels[i])] += 1;
    }
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] /= std::max(1, count[c]);
    return sum;
}

std::vector<int> members(std::span<const int> labels, int cluster) {
    std::vector<int> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == cluster) out.push_back(static_cast<int>(i));
    }
    return out;
}

}  // namespace

Classification classify_similarity(const SquareMatrix& L, const ClassifyParams& params) {
    const int n = L.size();
    Classification result;
    if (n < 3) {
        result.labels.assign(static_cast<std::size_t>(n), Label::Unknown);
        result.scores.assign(static_cast<std::size_t>(n), 0.0);
        result.insufficient_data = true;
        return result;
    }
    result.labels.assign(static_cast<std::size_t>(n), Label::Cooperative);
    result.scores.assign(static_cast<std::size_t>(n), 0.0);

    const SquareMatrix d = dissimilarity_matrix(L);
    std::vector<double> row_mean(static_cast<std::size_t>(n), 0.0);
    for (int r = 0; r < n; ++r) {
        double s = 0.0;
        for (int t = 0; t < n; ++t) {
            if (t != r) s += L(r, t);
        }
        row_mean[static_cast<std::size_t>(r)] = s / (n - 1);
    }

    std::optional<double> previous;
    const int k_last = std::min(params.k_max, n - 1);
    for (int k = 2; k <= k_last; ++k) {
        const auto labels = single_linkage_cluster(d, k);
        const auto seed_means = cluster_means(row_mean, labels, k);
        const int good = static_cast<int>(std::max_element(seed_means.begin(), seed_means.end()) - seed_means.begin());
        const int bad = static_cast<int>(std::min_element(seed_means.begin(), seed_means.end()) - seed_means.begin());
        if (good == bad) break;
        const auto good_seed = members(labels, good);
        const auto bad_seed = members(labels, bad);
        const auto scores = cooperation_scores(L, good_seed, bad_seed);
        const double p = params.anova == AnovaMethod::FTest
                             ? anova_f_p(scores, labels)
                             : anova_p(scores, labels, params.resamples, params.anova_seed + static_cast<std::uint64_t>(k));

        result.k = k;
        result.p_k = p;
        result.scores = scores;
        if (p < params.beta) {
            const auto score_means = cluster_means(scores, labels, k);
            const int lowest = static_cast<int>(std::min_element(score_means.begin(), score_means.end()) - score_means.begin());
            const int highest = static_cast<int>(std::max_element(score_means.begin(), score_means.end()) - score_means.begin());
            for (int i = 0; i < n; ++i) {
                const int c = labels[static_cast<std::size_t>(i)];
                result.labels[static_cast<std::size_t>(i)] =
                    c == lowest ? Label::Selfish : (c == highest ? Label::Cooperative : Label::Unknown);
            }
            result.accepted = true;
            return result;
        }
        if (previous && p > *previous) break;
        previous = p;
    }
    std::fill(result.labels.begin(), result.labels.end(), Label::Cooperative);
    return result;
}

Classification classify(std::span<const CountMatrix> matrices, const ClassifyParams& params) {
    if (matrices.size() < 3) {
        Classification result;
        result.labels.assign(matrices.size(), Label::Unknown);
        result.scores.assign(matrices.size(), 0.0);
        result.insufficient_data = true;
        return result;
    }
    return classify_similarity(similarity_matrix(matrices, params.alpha), params);
}

}  // namespace meshsim::stats
