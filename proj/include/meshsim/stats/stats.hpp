#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meshsim/stats/count_matrix.hpp"

namespace meshsim::stats {

/// Upper-tail chi-square critical value via the Wilson-Hilferty cube-root
/// normal approximation.
double chi2_critical(int df, double alpha);

struct Chi2RowResult {
    double statistic = 0.0;
    bool reject = false;
    bool no_sample = false;  // both row totals zero
};

/// Pearson homogeneity test of two count rows. Expected cell count for row
/// l is F_l * (f_rj + f_sj) / (F_r + F_s); cells with zero expectation are
/// skipped. Critical value uses df = m - 1.
Chi2RowResult chi2_row_test(std::span<const std::int64_t> row_r, std::span<const std::int64_t> row_s, double alpha);

struct Similarity {
    double value = 1.0;  // alpha^S
    int rejected_rows = 0;
};

/// L_rs = alpha^S where S counts the rows whose chi-square test rejects.
Similarity similarity_L(const CountMatrix& t_r, const CountMatrix& t_s, double alpha);

SquareMatrix similarity_matrix(std::span<const CountMatrix> matrices, double alpha);

/// d_rs = 1 - n_rs^2 / (n_{r/s} n_{s/r}); 1 when a denominator vanishes.
double dissimilarity_d(int r, int s, const SquareMatrix& L);
SquareMatrix dissimilarity_matrix(const SquareMatrix& L);

/// Agglomerative single-linkage clustering down to k clusters. Returns a
/// cluster index per item; clusters are numbered by their smallest member.
std::vector<int> single_linkage_cluster(const SquareMatrix& d, int k);

/// C_r = mean_{t in G, t != r} L_rt - mean_{t in B, t != r} L_rt. A seed set
/// that is empty once r is excluded contributes r's self-similarity (1).
std::vector<double> cooperation_scores(const SquareMatrix& L, std::span<const int> good_seed, std::span<const int> bad_seed);

/// Between-cluster sum of squares of `scores` grouped by `labels`.
double between_cluster_ss(std::span<const double> scores, std::span<const int> labels);

/// Permutation p-value of the between-cluster variance: the fraction of
/// label shuffles whose statistic reaches the observed one.
double anova_p(std::span<const double> scores, std::span<const int> labels, int resamples, std::uint64_t seed);

/// One-way ANOVA F-test p-value. Zero within-cluster spread with distinct
/// means gives 0; no residual degrees of freedom gives 1.
double anova_f_p(std::span<const double> scores, std::span<const int> labels);

enum class AnovaMethod { Permutation, FTest };
std::string to_string(AnovaMethod method);
std::optional<AnovaMethod> anova_method_from_string(std::string_view s);

enum class Label { Cooperative, Selfish, Unknown };
std::string to_string(Label label);

struct ClassifyParams {
    double alpha = 0.05;
    double beta = 0.05;
    int k_max = 4;
    int resamples = 10000;
    std::uint64_t anova_seed = 0x5eed;
    AnovaMethod anova = AnovaMethod::Permutation;
};

struct Classification {
    std::vector<Label> labels;
    std::vector<double> scores;
    int k = 0;
    double p_k = 1.0;
    bool accepted = false;
    bool insufficient_data = false;
};

/// Full pipeline on a precomputed similarity matrix.
Classification classify_similarity(const SquareMatrix& L, const ClassifyParams& params);

/// Full pipeline from per-neighbor transition matrices.
Classification classify(std::span<const CountMatrix> matrices, const ClassifyParams& params);

}  // namespace meshsim::stats
