#include "commute/stats.hpp"

#include "commute/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace commute {

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

namespace {

double beta_continued_fraction(double a, double b, double x)
{
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x)
{
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed_p(double t, double df)
{
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

double f_distribution_survival(double f, double df1, double df2)
{
  if (std::isnan(f)) return std::numeric_limits<double>::quiet_NaN();
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return regularized_incomplete_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f));
}

std::string significance_stars(double p)
{
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return {};
}

// ---------------------------------------------------------------------------
// Rank grouping
// ---------------------------------------------------------------------------

std::vector<std::optional<int>> rank_bins(std::span<const std::optional<double>> values, int bins)
{
  if (bins <= 0) throw std::invalid_argument("bins must be positive");
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i]) present.push_back(i);
  }
  std::stable_sort(present.begin(), present.end(),
                   [&](std::size_t a, std::size_t b) { return *values[a] < *values[b]; });
  std::vector<std::optional<int>> out(values.size());
  const std::size_t m = present.size();
  for (std::size_t r = 0; r < m; ++r) {
    const auto bin = static_cast<int>((static_cast<std::size_t>(bins) * r) / m);
    out[present[r]] = std::clamp(bin, 0, bins - 1);
  }
  return out;
}

std::vector<std::string> QuintileAssignment::labels() const
{
  std::vector<std::string> out(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i]) out[i] = std::string(kQuintileLabels[static_cast<std::size_t>(*group[i])]);
  }
  return out;
}

QuintileAssignment quintile_group(const ZoneSet& zones)
{
  std::vector<std::optional<double>> wages(zones.size());
  std::size_t present = 0;
  for (std::size_t i = 0; i < zones.size(); ++i) {
    wages[i] = zones[i].mean_wage;
    present += wages[i] ? 1 : 0;
  }
  if (present < kQuintiles) throw std::invalid_argument("quintile grouping needs at least 5 zones with a mean wage");

  QuintileAssignment out;
  out.group = rank_bins(wages, static_cast<int>(kQuintiles));
  out.cutoff.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < zones.size(); ++i) {
    if (!out.group[i]) continue;
    double& c = out.cutoff[static_cast<std::size_t>(*out.group[i])];
    c = std::max(c, *wages[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Regression
// ---------------------------------------------------------------------------

namespace {

using Real = long double;
using Matrix = std::vector<std::vector<Real>>;

/// Inverts a symmetric positive (semi)definite matrix after unit-diagonal
/// scaling, by Gauss-Jordan elimination with partial pivoting.
Matrix invert_scaled(const Matrix& a)
{
  const std::size_t k = a.size();
  std::vector<Real> scale(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(a[i][i] > 0)) throw DegenerateDesign("design column " + std::to_string(i) + " is identically zero");
    scale[i] = 1 / std::sqrt(a[i][i]);
  }
  Matrix m(k, std::vector<Real>(2 * k, 0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) m[i][j] = a[i][j] * scale[i] * scale[j];
    m[i][k + i] = 1;
  }
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < k; ++r) {
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    }
    if (std::abs(m[pivot][col]) < static_cast<Real>(1e-13)) throw DegenerateDesign("singular design matrix");
    std::swap(m[col], m[pivot]);
    const Real inv = 1 / m[col][col];
    for (auto& v : m[col]) v *= inv;
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col || m[r][col] == 0) continue;
      const Real factor = m[r][col];
      for (std::size_t c = 0; c < 2 * k; ++c) m[r][c] -= factor * m[col][c];
    }
  }
  Matrix inv(k, std::vector<Real>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) inv[i][j] = m[i][k + j] * scale[i] * scale[j];
  }
  return inv;
}

struct Fit
{
  std::vector<Real> beta;
  Matrix xtwx_inverse;
  Real sse = 0;
  Real sst = 0;
};

Fit solve(std::span<const std::vector<double>> columns, std::span<const double> y, std::span<const double> weights)
{
  const std::size_t k = columns.size();
  const std::size_t n = y.size();
  auto weight = [&](std::size_t i) -> Real { return weights.empty() ? Real(1) : Real(weights[i]); };

  Matrix xtwx(k, std::vector<Real>(k, 0));
  std::vector<Real> xtwy(k, 0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      CompensatedSum<Real> s;
      for (std::size_t i = 0; i < n; ++i) s += weight(i) * Real(columns[a][i]) * Real(columns[b][i]);
      xtwx[a][b] = xtwx[b][a] = s.value();
    }
    CompensatedSum<Real> s;
    for (std::size_t i = 0; i < n; ++i) s += weight(i) * Real(columns[a][i]) * Real(y[i]);
    xtwy[a] = s.value();
  }

  Fit fit;
  fit.xtwx_inverse = invert_scaled(xtwx);
  fit.beta.assign(k, 0);
  for (std::size_t a = 0; a < k; ++a) {
    CompensatedSum<Real> s;
    for (std::size_t b = 0; b < k; ++b) s += fit.xtwx_inverse[a][b] * xtwy[b];
    fit.beta[a] = s.value();
  }

  CompensatedSum<Real> wsum;
  CompensatedSum<Real> wy;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += weight(i);
    wy += weight(i) * Real(y[i]);
  }
  const Real ybar = wy.value() / wsum.value();
  CompensatedSum<Real> sse;
  CompensatedSum<Real> sst;
  for (std::size_t i = 0; i < n; ++i) {
    Real fitted = 0;
    for (std::size_t a = 0; a < k; ++a) fitted += fit.beta[a] * Real(columns[a][i]);
    const Real e = Real(y[i]) - fitted;
    const Real dev = Real(y[i]) - ybar;
    sse += weight(i) * e * e;
    sst += weight(i) * dev * dev;
  }
  fit.sse = sse.value();
  fit.sst = sst.value();
  return fit;
}

void fill_inference(RegressionResult& r, const std::vector<Real>& beta, const Matrix& cov_unscaled, Real sse, Real sst)
{
  const std::size_t k = beta.size();
  const double df = static_cast<double>(r.df_residual);
  const Real sigma2 = sse / Real(df);
  r.coefficients.resize(k);
  r.std_errors.resize(k);
  r.t_stats.resize(k);
  r.p_values.resize(k);
  for (std::size_t a = 0; a < k; ++a) {
    r.coefficients[a] = static_cast<double>(beta[a]);
    const Real var = sigma2 * cov_unscaled[a][a];
    r.std_errors[a] = static_cast<double>(std::sqrt(std::max(var, Real(0))));
    if (r.std_errors[a] > 0.0) {
      r.t_stats[a] = r.coefficients[a] / r.std_errors[a];
    } else if (r.coefficients[a] == 0.0) {
      r.t_stats[a] = 0.0;
    } else {
      r.t_stats[a] = std::copysign(std::numeric_limits<double>::infinity(), r.coefficients[a]);
    }
    r.p_values[a] = student_t_two_tailed_p(r.t_stats[a], df);
  }

  r.sse = static_cast<double>(sse);
  if (sst > 0) {
    r.r_squared = static_cast<double>(std::clamp(1 - sse / sst, Real(0), Real(1)));
  } else {
    r.r_squared = 0.0;
  }
  if (k > 1) {
    const Real ssr = std::max(sst - sse, Real(0));
    const double df_model = static_cast<double>(k - 1);
    if (sse > 0) {
      r.f_statistic = static_cast<double>((ssr / Real(df_model)) / sigma2);
    } else {
      r.f_statistic = ssr > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    r.f_p_value = f_distribution_survival(r.f_statistic, df_model, df);
  }
}

}  // namespace

RegressionResult weighted_least_squares(std::span<const std::vector<double>> columns, std::span<const double> y,
                                        std::span<const double> weights, std::vector<std::string> names)
{
  const std::size_t k = columns.size();
  const std::size_t n = y.size();
  if (k == 0) throw std::invalid_argument("regression needs at least one column");
  for (const auto& c : columns) {
    if (c.size() != n) throw std::invalid_argument("design columns must match y in length");
  }
  if (!weights.empty() && weights.size() != n) throw std::invalid_argument("weights must match y in length");
  for (const double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("regression weights must be positive");
  }
  if (n <= k) throw std::invalid_argument("regression needs more observations than coefficients");

  const Fit fit = solve(columns, y, weights);
  RegressionResult r;
  r.names = std::move(names);
  r.names.resize(k);
  r.n_obs = n;
  r.df_residual = n - k;
  fill_inference(r, fit.beta, fit.xtwx_inverse, fit.sse, fit.sst);
  return r;
}

RegressionResult quadratic_fit(std::span<const double> y, std::span<const double> wage)
{
  const std::size_t n = y.size();
  if (wage.size() != n) throw std::invalid_argument("y and wage must have equal length");
  if (n < 4) throw std::invalid_argument("quadratic fit needs at least 4 observations");

  CompensatedSum<Real> sum;
  for (const double w : wage) sum += Real(w);
  const Real mean = sum.value() / Real(n);
  CompensatedSum<Real> ss;
  for (const double w : wage) ss += (Real(w) - mean) * (Real(w) - mean);
  const Real sd = std::sqrt(ss.value() / Real(n));
  if (!(sd > 0)) throw DegenerateDesign("all wages are equal; quadratic design is singular");

  std::vector<std::vector<double>> columns(3, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const Real z = (Real(wage[i]) - mean) / sd;
    columns[0][i] = 1.0;
    columns[1][i] = static_cast<double>(z);
    columns[2][i] = static_cast<double>(z * z);
  }
  const Fit fit = solve(columns, y, {});

  // original = T * centred, with z = (w - m) / s
  const Real s = sd;
  const Real m = mean;
  const Real t[3][3] = {{1, -m / s, m * m / (s * s)}, {0, 1 / s, -2 * m / (s * s)}, {0, 0, 1 / (s * s)}};
  std::vector<Real> beta(3, 0);
  Matrix cov(3, std::vector<Real>(3, 0));
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) beta[a] += t[a][b] * fit.beta[b];
  }
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      Real acc = 0;
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t d = 0; d < 3; ++d) acc += t[a][c] * fit.xtwx_inverse[c][d] * t[b][d];
      }
      cov[a][b] = acc;
    }
  }

  RegressionResult r;
  r.names = {"intercept", "mean_wage", "mean_wage_sq"};
  r.n_obs = n;
  r.df_residual = n - 3;
  fill_inference(r, beta, cov, fit.sse, fit.sst);
  return r;
}

// ---------------------------------------------------------------------------
// Flag test
// ---------------------------------------------------------------------------

std::vector<std::optional<double>> wage_group_shares(const ZoneSet& zones, std::size_t bin)
{
  if (bin >= kWageBinCount) throw std::out_of_range("wage bin out of range");
  std::vector<std::optional<double>> out(zones.size());
  for (std::size_t i = 0; i < zones.size(); ++i) {
    std::int64_t total = 0;
    for (const auto c : zones[i].wage_bins) total += c;
    if (total > 0) out[i] = 100.0 * static_cast<double>(zones[i].wage_bins[bin]) / static_cast<double>(total);
  }
  return out;
}

FlagTestOutcome flag_test(std::span<const std::optional<double>> metric, std::span<const std::optional<double>> shares,
                          std::span<const double> weights, std::string label)
{
  if (metric.size() != shares.size() || metric.size() != weights.size()) {
    throw std::invalid_argument("flag_test inputs must be per-zone and equally sized");
  }

  CompensatedSum<double> wm;
  CompensatedSum<double> ws;
  for (std::size_t i = 0; i < metric.size(); ++i) {
    if (!metric[i] || !(weights[i] > 0.0)) continue;
    wm += weights[i] * *metric[i];
    ws += weights[i];
  }
  FlagTestOutcome outcome;
  if (!(ws.value() > 0.0)) {
    outcome.untestable_reason = "no zone with both a metric and a positive weight";
    return outcome;
  }
  const double benchmark = wm.value() / ws.value();

  std::vector<double> y;
  std::vector<double> w;
  std::vector<double> flag;
  for (std::size_t i = 0; i < metric.size(); ++i) {
    if (!metric[i] || !shares[i] || !(weights[i] > 0.0)) continue;
    y.push_back(*shares[i]);
    w.push_back(weights[i]);
    flag.push_back(*metric[i] > benchmark ? 1.0 : 0.0);
  }
  const auto above = static_cast<std::size_t>(std::count(flag.begin(), flag.end(), 1.0));
  const std::size_t below = flag.size() - above;
  if (above == 0 || below == 0) {
    outcome.untestable_reason = "all zones fall on one side of the benchmark";
    return outcome;
  }
  if (flag.size() < 3) {
    outcome.untestable_reason = "fewer than 3 zones";
    return outcome;
  }

  FlagTestRow row;
  row.label = std::move(label);
  row.benchmark = benchmark;
  row.n_below = below;
  row.n_above = above;

  CompensatedSum<double> sum[2];
  CompensatedSum<double> wsum[2];
  bool constant[2] = {true, true};
  std::optional<double> first[2];
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto g = static_cast<std::size_t>(flag[i]);
    sum[g] += w[i] * y[i];
    wsum[g] += w[i];
    if (!first[g]) first[g] = y[i];
    constant[g] = constant[g] && y[i] == *first[g];
  }
  row.pct_below = sum[0].value() / wsum[0].value();
  row.pct_above = sum[1].value() / wsum[1].value();
  row.difference = row.pct_above - row.pct_below;

  const std::vector<std::vector<double>> columns = {std::vector<double>(y.size(), 1.0), flag};
  row.regression = weighted_least_squares(columns, y, w, {"intercept", "flag"});

  if (constant[0] && constant[1] && *first[0] == *first[1]) {
    row.t = 0.0;
    row.p = 1.0;
  } else if (constant[0] && constant[1]) {
    row.t = std::copysign(std::numeric_limits<double>::infinity(), row.difference);
    row.p = 0.0;
  } else {
    row.t = row.regression.t_stats[1];
    row.p = row.regression.p_values[1];
  }
  row.stars = significance_stars(row.p);
  outcome.row = std::move(row);
  return outcome;
}

// ---------------------------------------------------------------------------
// Bivariate classes
// ---------------------------------------------------------------------------

std::vector<std::string> bivariate_classify(std::span<const std::optional<double>> metric,
                                            const QuintileAssignment& quintiles)
{
  if (metric.size() != quintiles.group.size()) throw std::invalid_argument("metric and quintiles must align");
  std::vector<std::optional<double>> eligible(metric.size());
  for (std::size_t i = 0; i < metric.size(); ++i) {
    if (metric[i] && quintiles.group[i]) eligible[i] = metric[i];
  }
  const auto terciles = rank_bins(eligible, 3);
  std::vector<std::string> out(metric.size());
  for (std::size_t i = 0; i < metric.size(); ++i) {
    if (!terciles[i]) continue;
    out[i] = "D" + std::to_string(*terciles[i] + 1) + "W" + std::to_string(*quintiles.group[i] + 1);
  }
  return out;
}

}  // namespace commute
