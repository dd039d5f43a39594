#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace logdrift::stats {

// ---------------------------------------------------------------------------
// Special functions. Absolute error <= 1e-10 over the tested domain.
// ---------------------------------------------------------------------------

// Regularized incomplete beta I_x(a, b), a,b > 0, x in [0,1].
double reg_inc_beta(double x, double a, double b);

// Regularized lower incomplete gamma P(s, x), s > 0, x >= 0.
double reg_inc_gamma_lower(double s, double x);

// Exact CDFs built on the special functions above.
double t_cdf(double t, double df);
double f_cdf(double f, double df1, double df2);
double chi2_cdf(double x, double df);

// Inverse of t_cdf in its first argument (bisection; p in (0,1)).
double t_quantile(double p, double df);

// ---------------------------------------------------------------------------
// Hypothesis tests
// ---------------------------------------------------------------------------

enum class TestKind { paired_t, chi2_yates, ancova_f };

struct StatTestResult {
  TestKind test = TestKind::paired_t;
  double statistic = 0.0;
  double df1 = 0.0;
  double df2 = 0.0;  // 0 for single-df tests
  double p = 1.0;
  std::optional<double> effect;  // partial eta squared for ANCOVA
};

// Two-tailed paired t-test on equal-length samples. Throws
// std::invalid_argument on n < 2 or an all-identical difference vector
// ("degenerate sample").
StatTestResult paired_t_test(std::span<const double> x, std::span<const double> y);

// 2x2 contingency table, rows = group yes/no, columns = factor yes/no.
struct TwoByTwo {
  std::int64_t a = 0;  // group & factor
  std::int64_t b = 0;  // group & !factor
  std::int64_t c = 0;  // !group & factor
  std::int64_t d = 0;  // !group & !factor
};

// Chi-square test of independence with the continuity correction
// (|O-E| - 0.5, clamped at zero) applied by default. Throws on a zero
// marginal.
StatTestResult chi2_test(const TwoByTwo& table, bool yates_correction = true);

// One-way ANCOVA: y ~ intercept + group + covariate, F-test on the group
// term via the full-vs-reduced sum-of-squares comparison, partial eta
// squared as the effect size. group holds 0/1 labels. Throws
// std::invalid_argument on n < 4, an empty group, or a rank-deficient
// design ("singular design"). Omitting the covariate gives the plain
// one-way F-test (equal to the pooled-variance t squared).
StatTestResult ancova_one_cov(std::span<const double> y,
                              std::span<const int> group,
                              std::span<const double> cov);
StatTestResult anova_group(std::span<const double> y,
                           std::span<const int> group);

// Holm step-down correction: flags, in input order, of the hypotheses
// rejected at family-wise level alpha.
std::vector<bool> holm(std::span<const double> pvals, double alpha = 0.05);

struct GroupSummary {
  std::int64_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double ci95_lo = 0.0;
  double ci95_hi = 0.0;
};

// Mean, sample SD, and the t-based 95% confidence interval. Requires n >= 2.
GroupSummary group_summary(std::span<const double> values);

}  // namespace logdrift::stats
