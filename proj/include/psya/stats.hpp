#pragma once

// Significance tests used by the experiment reports. All p-values are two-sided.

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace psya::stats {

/// 2x2 contingency table: rows are groups, columns are (yes, no).
struct Table2x2 {
    std::array<std::array<std::int64_t, 2>, 2> n{};

    std::int64_t row(int i) const { return n[i][0] + n[i][1]; }
    std::int64_t col(int j) const { return n[0][j] + n[1][j]; }
    std::int64_t total() const { return row(0) + row(1); }
    bool has_zero_margin() const { return row(0) == 0 || row(1) == 0 || col(0) == 0 || col(1) == 0; }
};

struct TestResult {
    std::string test;
    double statistic = 0.0;
    double p = 1.0;
    bool skipped = false;
    std::string reason;
    bool yates = false;
};

/// Pearson statistic, optionally with the continuity correction.
double chi_square_statistic(const Table2x2& t, bool yates);
/// Upper tail of the chi-square distribution with one degree of freedom.
double chi_square_p(double statistic);

/// Chi-square test; Yates' correction is applied when any expected count is below 5.
TestResult chi_square_2x2(const Table2x2& t);
/// Fisher's exact test: total probability of tables no more likely than the observed one.
TestResult fisher_exact_2x2(const Table2x2& t);

/// Welch's unequal-variance t-test.
TestResult welch_t_test(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> x);
double sample_variance(std::span<const double> x);

}  // namespace psya::stats
