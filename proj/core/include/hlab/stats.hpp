#pragma once

#include <vector>

namespace hlab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_stderr = 0.0;
  int n = 0;
};

// Ordinary least squares y ≈ intercept + slope·x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct QuadraticFit {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double r_squared = 0.0;
};

QuadraticFit fit_quadratic(const std::vector<double>& x, const std::vector<double>& y);

// Least squares y ≈ X·beta for a dense design given row-major.
std::vector<double> least_squares(const std::vector<std::vector<double>>& rows,
                                  const std::vector<double>& y);

struct TTest {
  double mean = 0.0;
  double t = 0.0;
  double p_value = 1.0;
  int dof = 0;
};

// One-sided one-sample test of H1: mean(values) > 0.
TTest t_test_positive(const std::vector<double>& values);

double mean(const std::vector<double>& v);

}  // namespace hlab
