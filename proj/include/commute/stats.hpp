#pragma once

#include "commute/geodata.hpp"

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace commute {

inline constexpr std::size_t kQuintiles = 5;
inline constexpr std::array<std::string_view, kQuintiles> kQuintileLabels = {"0-20", "20-40", "40-60", "60-80",
                                                                             "80-100"};

// ---------------------------------------------------------------------------
// Distributions
// ---------------------------------------------------------------------------

/// I_x(a, b) by Lentz's continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double student_t_two_tailed_p(double t, double df);

/// P(F >= f) for the F distribution.
double f_distribution_survival(double f, double df1, double df2);

/// "***" below 0.001, "**" below 0.01, "*" below 0.05, else empty.
std::string significance_stars(double p);

// ---------------------------------------------------------------------------
// Rank grouping
// ---------------------------------------------------------------------------

/// Equal-frequency bins by rank. Values are ranked by (value, position) and
/// the element at rank r of m present values gets bin floor(bins * r / m).
/// Absent values get no bin.
std::vector<std::optional<int>> rank_bins(std::span<const std::optional<double>> values, int bins);

struct QuintileAssignment
{
  /// 0..4 per zone index; absent for zones without a mean wage.
  std::vector<std::optional<int>> group;
  /// Highest member wage per group.
  std::array<double, kQuintiles> cutoff{};

  /// Group label per zone ("" when ungrouped), for modal_split.
  std::vector<std::string> labels() const;
};

/// Throws std::invalid_argument with fewer than five zones carrying a wage.
QuintileAssignment quintile_group(const ZoneSet& zones);

// ---------------------------------------------------------------------------
// Regression
// ---------------------------------------------------------------------------

class DegenerateDesign : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct RegressionResult
{
  std::vector<std::string> names;
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<double> t_stats;
  std::vector<double> p_values;
  double r_squared = 0.0;
  double f_statistic = 0.0;
  double f_p_value = 1.0;
  double sse = 0.0;
  std::size_t n_obs = 0;
  std::size_t df_residual = 0;
};

/// Weighted least squares via normal equations accumulated and solved in
/// extended precision. `columns` holds the design column-wise (include the
/// intercept column yourself); empty `weights` means unweighted. Throws
/// DegenerateDesign for a singular design and std::invalid_argument when
/// there are not more observations than coefficients.
RegressionResult weighted_least_squares(std::span<const std::vector<double>> columns, std::span<const double> y,
                                        std::span<const double> weights, std::vector<std::string> names);

/// OLS of y on [1, w, w^2]. Wages are centred and scaled before solving;
/// coefficients, standard errors and t-statistics are reported on the
/// original scale.
RegressionResult quadratic_fit(std::span<const double> y, std::span<const double> wage);

// ---------------------------------------------------------------------------
// Flag test
// ---------------------------------------------------------------------------

struct FlagTestRow
{
  std::string label;
  double benchmark = 0.0;
  double pct_below = 0.0;   // a
  double pct_above = 0.0;   // a + b
  double difference = 0.0;  // pct_above - pct_below
  double t = 0.0;
  double p = 1.0;
  std::string stars;
  std::size_t n_below = 0;
  std::size_t n_above = 0;
  RegressionResult regression;
};

struct FlagTestOutcome
{
  std::optional<FlagTestRow> row;
  std::string untestable_reason;

  bool testable() const { return row.has_value(); }
};

/// Share (%) of zone workers in one wage bin; absent when the bins sum to 0.
std::vector<std::optional<double>> wage_group_shares(const ZoneSet& zones, std::size_t bin);

/// Splits zones at the weighted mean of `metric` (Flag = metric > benchmark)
/// and regresses `shares` on [1, Flag] with `weights`. Zones lacking a
/// metric or share, or with weight <= 0, are left out.
FlagTestOutcome flag_test(std::span<const std::optional<double>> metric, std::span<const std::optional<double>> shares,
                          std::span<const double> weights, std::string label);

// ---------------------------------------------------------------------------
// Bivariate classes
// ---------------------------------------------------------------------------

/// "D{1..3}W{1..5}" from metric terciles crossed with wage quintiles; empty
/// for zones lacking either.
std::vector<std::string> bivariate_classify(std::span<const std::optional<double>> metric,
                                            const QuintileAssignment& quintiles);

}  // namespace commute
