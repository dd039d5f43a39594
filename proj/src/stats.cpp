#include "logdrift/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace logdrift::stats {

namespace {

constexpr int kMaxIter = 500;
constexpr double kEps = 1e-15;
constexpr double kFpMin = 1e-300;

double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

// Series for P(s, x), valid for x < s + 1.
double gamma_series(double s, double x) {
  double ap = s;
  double sum = 1.0 / s;
  double del = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) {
      return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
    }
  }
  throw std::runtime_error("incomplete gamma series did not converge");
}

// Continued fraction for Q(s, x), valid for x >= s + 1.
double gamma_cf(double s, double x) {
  double b = x + 1.0 - s;
  double c = 1.0 / kFpMin;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = b + an / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) {
      return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
    }
  }
  throw std::runtime_error("incomplete gamma continued fraction did not converge");
}

}  // namespace

double reg_inc_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::domain_error("reg_inc_beta: a and b must be positive");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("reg_inc_beta: x must be in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front =
      std::exp(a * std::log(x) + b * std::log1p(-x) - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(x, a, b) / a;
  }
  return 1.0 - front * beta_cf(1.0 - x, b, a) / b;
}

double reg_inc_gamma_lower(double s, double x) {
  if (!(s > 0.0)) throw std::domain_error("reg_inc_gamma_lower: s must be positive");
  if (x < 0.0) throw std::domain_error("reg_inc_gamma_lower: x must be nonnegative");
  if (x == 0.0) return 0.0;
  return x < s + 1.0 ? gamma_series(s, x) : 1.0 - gamma_cf(s, x);
}

double t_cdf(double t, double df) {
  if (!(df > 0.0)) throw std::domain_error("t_cdf: df must be positive");
  if (t == 0.0) return 0.5;
  const double x = df / (df + t * t);
  const double tail = 0.5 * reg_inc_beta(x, 0.5 * df, 0.5);
  return t > 0.0 ? 1.0 - tail : tail;
}

double f_cdf(double f, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) {
    throw std::domain_error("f_cdf: degrees of freedom must be positive");
  }
  if (f <= 0.0) return 0.0;
  const double x = df1 * f / (df1 * f + df2);
  return reg_inc_beta(x, 0.5 * df1, 0.5 * df2);
}

double chi2_cdf(double x, double df) {
  if (!(df > 0.0)) throw std::domain_error("chi2_cdf: df must be positive");
  if (x <= 0.0) return 0.0;
  return reg_inc_gamma_lower(0.5 * df, 0.5 * x);
}

double t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("t_quantile: p must be in (0, 1)");
  if (!(df > 0.0)) throw std::domain_error("t_quantile: df must be positive");
  if (p == 0.5) return 0.0;
  const bool upper = p > 0.5;
  const double target = upper ? p : 1.0 - p;
  double lo = 0.0;
  double hi = 1.0;
  while (t_cdf(hi, df) < target) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (t_cdf(mid, df) < target ? lo : hi) = mid;
  }
  const double q = 0.5 * (lo + hi);
  return upper ? q : -q;
}

StatTestResult paired_t_test(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("paired_t_test: samples must have equal length");
  }
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("paired_t_test: n < 2");
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x[i] - y[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (x[i] - y[i]) - mean;
    ss += d * d;
  }
  if (ss == 0.0) throw std::invalid_argument("paired_t_test: degenerate sample");
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  StatTestResult r;
  r.test = TestKind::paired_t;
  r.statistic = t;
  r.df1 = static_cast<double>(n - 1);
  r.p = 2.0 * (1.0 - t_cdf(std::fabs(t), r.df1));
  return r;
}

StatTestResult chi2_test(const TwoByTwo& t, bool yates_correction) {
  const std::int64_t r1 = t.a + t.b, r2 = t.c + t.d;
  const std::int64_t c1 = t.a + t.c, c2 = t.b + t.d;
  if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0) {
    throw std::invalid_argument("chi2_test: negative count");
  }
  if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) {
    throw std::invalid_argument("chi2_test: zero marginal");
  }
  const double n = static_cast<double>(r1 + r2);
  // |O - E| is the same in all four cells of a 2x2 table.
  double delta = std::fabs(static_cast<double>(t.a) * static_cast<double>(t.d) -
                           static_cast<double>(t.b) * static_cast<double>(t.c)) / n;
  if (yates_correction) delta = std::max(delta - 0.5, 0.0);
  const double inv_e_sum = n * n * n / (static_cast<double>(r1) * static_cast<double>(r2) *
                                        static_cast<double>(c1) * static_cast<double>(c2));
  StatTestResult r;
  r.test = TestKind::chi2_yates;
  r.statistic = delta * delta * inv_e_sum;
  r.df1 = 1.0;
  r.p = 1.0 - chi2_cdf(r.statistic, 1.0);
  return r;
}

namespace {

StatTestResult group_f_from_design(std::span<const double> y,
                                   std::span<const int> group,
                                   const double* cov) {
  const std::size_t n = y.size();
  if (group.size() != n || n < 4) {
    throw std::invalid_argument("ancova: need matching vectors with n >= 4");
  }
  std::int64_t ones = 0;
  for (int g : group) {
    if (g != 0 && g != 1) throw std::invalid_argument("ancova: group labels must be 0/1");
    ones += g;
  }
  if (ones == 0 || ones == static_cast<std::int64_t>(n)) {
    throw std::invalid_argument("ancova: both groups must be nonempty");
  }
  const int p_full = cov ? 3 : 2;
  Eigen::MatrixXd x_full(n, p_full);
  Eigen::VectorXd yv(n);
  for (std::size_t i = 0; i < n; ++i) {
    x_full(i, 0) = 1.0;
    x_full(i, 1) = static_cast<double>(group[i]);
    if (cov) x_full(i, 2) = cov[i];
    yv(i) = y[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_full(x_full);
  qr_full.setThreshold(1e-10);
  if (qr_full.rank() < p_full) {
    throw std::invalid_argument("ancova: singular design");
  }
  const double ss_full = (yv - x_full * qr_full.solve(yv)).squaredNorm();

  Eigen::MatrixXd x_red(n, p_full - 1);
  x_red.col(0) = x_full.col(0);
  if (cov) x_red.col(1) = x_full.col(2);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_red(x_red);
  const double ss_red = (yv - x_red * qr_red.solve(yv)).squaredNorm();

  const double df2 = static_cast<double>(n - p_full);
  const double ss_group = std::max(ss_red - ss_full, 0.0);
  StatTestResult r;
  r.test = TestKind::ancova_f;
  r.df1 = 1.0;
  r.df2 = df2;
  if (ss_full <= 0.0) {
    // Perfect fit: the group effect is either absent or exact.
    r.statistic = ss_group > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    r.p = ss_group > 0.0 ? 0.0 : 1.0;
    r.effect = ss_group > 0.0 ? 1.0 : 0.0;
    return r;
  }
  r.statistic = ss_group / (ss_full / df2);
  r.p = 1.0 - f_cdf(r.statistic, 1.0, df2);
  r.effect = ss_group / (ss_group + ss_full);
  return r;
}

}  // namespace

StatTestResult ancova_one_cov(std::span<const double> y,
                              std::span<const int> group,
                              std::span<const double> cov) {
  if (cov.size() != y.size()) {
    throw std::invalid_argument("ancova: covariate length mismatch");
  }
  return group_f_from_design(y, group, cov.data());
}

StatTestResult anova_group(std::span<const double> y, std::span<const int> group) {
  return group_f_from_design(y, group, nullptr);
}

std::vector<bool> holm(std::span<const double> pvals, double alpha) {
  const std::size_t m = pvals.size();
  for (double p : pvals) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("holm: p-values must be in [0, 1]");
    }
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return pvals[i] < pvals[j]; });
  std::vector<bool> reject(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    const double threshold = alpha / static_cast<double>(m - i);
    if (pvals[order[i]] <= threshold) {
      reject[order[i]] = true;
    } else {
      break;  // retain this hypothesis and all larger p-values
    }
  }
  return reject;
}

GroupSummary group_summary(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw std::invalid_argument("group_summary: n < 2");
  GroupSummary s;
  s.n = static_cast<std::int64_t>(n);
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  s.mean = mean;
  s.sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double half = t_quantile(0.975, static_cast<double>(n - 1)) * s.sd /
                      std::sqrt(static_cast<double>(n));
  s.ci95_lo = mean - half;
  s.ci95_hi = mean + half;
  return s;
}

}  // namespace logdrift::stats
