#pragma once

#include <vector>

namespace textseg {

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  bool infinite_t = false;  // zero-variance, nonzero-mean differences
};

/// Two-sided paired-sample t-test. All-zero differences give t = 0, p = 1;
/// zero-variance nonzero differences give p = 0 with the infinite flag set.
TTestResult paired_ttest(const std::vector<double>& scores_a,
                         const std::vector<double>& scores_b);

/// Regularized incomplete beta function I_x(a, b) (continued fraction).
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided p-value of Student's t with `dof` degrees of freedom.
double student_t_two_sided_p(double t, int dof);

}  // namespace textseg
