#include "psya/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace psya::stats {

namespace {

double expected(const Table2x2& t, int i, int j) {
    return static_cast<double>(t.row(i)) * static_cast<double>(t.col(j)) / static_cast<double>(t.total());
}

bool small_expected(const Table2x2& t) {
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if (expected(t, i, j) < 5.0) return true;
    return false;
}

TestResult skipped(std::string test, std::string reason) {
    TestResult r;
    r.test = std::move(test);
    r.skipped = true;
    r.reason = std::move(reason);
    return r;
}

}  // namespace

double chi_square_statistic(const Table2x2& t, bool yates) {
    double chi = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double e = expected(t, i, j);
            double diff = std::abs(static_cast<double>(t.n[i][j]) - e);
            if (yates) diff = std::max(0.0, diff - 0.5);
            chi += diff * diff / e;
        }
    return chi;
}

double chi_square_p(double statistic) {
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(0.5, statistic / 2.0);
}

TestResult chi_square_2x2(const Table2x2& t) {
    if (t.has_zero_margin()) return skipped("chi-square", "zero margin");
    TestResult r;
    r.test = "chi-square";
    r.yates = small_expected(t);
    r.statistic = chi_square_statistic(t, r.yates);
    r.p = chi_square_p(r.statistic);
    return r;
}

TestResult fisher_exact_2x2(const Table2x2& t) {
    if (t.has_zero_margin()) return skipped("fisher", "zero margin");
    const std::int64_t r0 = t.row(0), c0 = t.col(0), total = t.total();
    const std::int64_t lo = std::max<std::int64_t>(0, r0 + c0 - total);
    const std::int64_t hi = std::min(r0, c0);
    auto log_choose = [](std::int64_t n, std::int64_t k) {
        return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    };
    const double log_denominator = log_choose(total, c0);
    std::vector<double> prob;
    for (std::int64_t a = lo; a <= hi; ++a)
        prob.push_back(std::exp(log_choose(r0, a) + log_choose(total - r0, c0 - a) - log_denominator));
    const double observed = prob[static_cast<std::size_t>(t.n[0][0] - lo)];
    double p = 0.0;
    for (double q : prob)
        if (q <= observed * (1.0 + 1e-7)) p += q;
    TestResult r;
    r.test = "fisher";
    r.statistic = observed;
    r.p = std::clamp(p, 0.0, 1.0);
    return r;
}

double mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

TestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) return skipped("welch-t", "fewer than two observations in a group");
    const double va = sample_variance(a) / static_cast<double>(a.size());
    const double vb = sample_variance(b) / static_cast<double>(b.size());
    const double diff = mean(a) - mean(b);
    TestResult r;
    r.test = "welch-t";
    if (va + vb == 0.0) {
        if (diff == 0.0) {
            r.statistic = 0.0;
            r.p = 1.0;
            return r;
        }
        return skipped("welch-t", "zero variance in both groups");
    }
    r.statistic = diff / std::sqrt(va + vb);
    const double df = (va + vb) * (va + vb) /
                      (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    boost::math::students_t dist(df);
    r.p = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic))), 0.0, 1.0);
    return r;
}

}  // namespace psya::stats
