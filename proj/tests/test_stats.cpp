#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "routelab/stats.hpp"

using namespace routelab;

namespace {

// Independent oracle: adaptive Simpson quadrature of the Student-t density.
double t_pdf(double x, double df) {
  const double c = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                   0.5 * std::log(df * std::acos(-1.0));
  return std::exp(c - 0.5 * (df + 1.0) * std::log1p(x * x / df));
}

double simpson(double a, double b, double fa, double fm, double fb, double df) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(double a, double b, double fa, double fm, double fb, double whole, double df,
                double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = t_pdf(lm, df);
  const double frm = t_pdf(rm, df);
  const double left = simpson(a, m, fa, flm, fm, df);
  const double right = simpson(m, b, fm, frm, fb, df);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive(a, m, fa, flm, fm, left, df, eps / 2.0, depth - 1) +
         adaptive(m, b, fm, frm, fb, right, df, eps / 2.0, depth - 1);
}

double t_cdf_by_quadrature(double t, double df) {
  // integrate the density from 0 to |t| and use symmetry around zero
  const double a = 0.0;
  const double b = std::abs(t);
  if (b == 0.0) return 0.5;
  const double fa = t_pdf(a, df);
  const double fb = t_pdf(b, df);
  const double fm = t_pdf(0.5 * (a + b), df);
  const double whole = simpson(a, b, fa, fm, fb, df);
  const double integral = adaptive(a, b, fa, fm, fb, whole, df, 1e-12, 40);
  return t >= 0.0 ? 0.5 + integral : 0.5 - integral;
}

}  // namespace

TEST_CASE("t cdf agrees with numerical quadrature") {
  for (double df : {1.0, 2.0, 5.0, 19.0, 63.0, 255.0}) {
    for (double t : {-4.0, -2.5, -1.0, -0.2, 0.0, 0.3, 1.7, 3.3}) {
      CHECK_THAT(stats::student_t_cdf(t, df),
                 Catch::Matchers::WithinAbs(t_cdf_by_quadrature(t, df), 1e-9));
    }
  }
}

TEST_CASE("t cdf matches frozen reference values") {
  // textbook values (cross-checked against two independent computations)
  CHECK_THAT(stats::student_t_cdf(-2.0, 9.0),
             Catch::Matchers::WithinAbs(0.03827641188535052, 1e-12));
  CHECK_THAT(stats::student_t_cdf(1.5, 4.0), Catch::Matchers::WithinAbs(0.896, 1e-12));
  CHECK_THAT(stats::student_t_cdf(0.0, 7.0), Catch::Matchers::WithinAbs(0.5, 1e-15));
  CHECK_THAT(stats::student_t_cdf(-0.75, 255.0),
             Catch::Matchers::WithinAbs(0.22697305669921067, 1e-12));
}

TEST_CASE("paired t-test p-values match the reference computation") {
  SECTION("known vector") {
    // d = a - b = [-1, -2, 0, -1.5, -0.5, -2.5, 0.5, -1]
    const std::vector<double> a{1, 2, 3, 1.5, 2.5, 0.5, 3.5, 2};
    const std::vector<double> b{2, 4, 3, 3.0, 3.0, 3.0, 3.0, 3};
    // reference value computed from the t statistic -2.8284271 at df 7
    CHECK_THAT(stats::paired_ttest_pvalue_less(a, b),
               Catch::Matchers::WithinAbs(0.012731780841619627, 1e-9));
  }
  SECTION("no differences and zero variance gives no evidence") {
    const std::vector<double> a{3, 3, 3, 3};
    CHECK(stats::paired_ttest_pvalue_less(a, a) == 1.0);
  }
  SECTION("uniform strict improvement is certain") {
    const std::vector<double> a{1, 2, 3, 4};
    const std::vector<double> b{2, 3, 4, 5};
    CHECK(stats::paired_ttest_pvalue_less(a, b) == 0.0);
  }
  SECTION("symmetric case gives one half") {
    const std::vector<double> a{1, 3};
    const std::vector<double> b{2, 2};
    CHECK_THAT(stats::paired_ttest_pvalue_less(a, b), Catch::Matchers::WithinAbs(0.5, 1e-12));
  }
}

TEST_CASE("mean and sample std") {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  CHECK(stats::mean(xs) == 2.5);
  CHECK_THAT(stats::sample_std(xs),
             Catch::Matchers::WithinAbs(std::sqrt(5.0 / 3.0), 1e-12));
}
