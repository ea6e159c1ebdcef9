#include "textseg/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace textseg {

namespace {

// Continued-fraction core of the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
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

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0)
    throw std::invalid_argument("incomplete beta: parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0))
    return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int dof) {
  if (dof < 1) throw std::invalid_argument("t-test: dof must be >= 1");
  if (std::isinf(t)) return 0.0;
  const double nu = dof;
  return regularized_incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
}

TTestResult paired_ttest(const std::vector<double>& scores_a,
                         const std::vector<double>& scores_b) {
  if (scores_a.size() != scores_b.size())
    throw std::invalid_argument("paired_ttest: length mismatch");
  const int n = static_cast<int>(scores_a.size());
  if (n < 2) throw std::invalid_argument("paired_ttest: need at least 2 pairs");

  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += scores_a[i] - scores_b[i];
  mean /= n;
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = scores_a[i] - scores_b[i] - mean;
    var += d * d;
  }
  var /= (n - 1);

  TTestResult result;
  if (var == 0.0) {
    if (mean == 0.0) return {0.0, 1.0, false};
    result.t = mean > 0 ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
    result.p = 0.0;
    result.infinite_t = true;
    return result;
  }
  result.t = mean / std::sqrt(var / n);
  result.p = student_t_two_sided_p(result.t, n - 1);
  return result;
}

}  // namespace textseg
