#include "hlab/stats.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "hlab/error.hpp"

namespace hlab {

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorCode::InvalidArgument,
          "fit_line needs at least two paired samples");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorCode::DegenerateSamples, "fit_line: abscissae are identical");
  LinearFit fit;
  fit.n = static_cast<int>(x.size());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    sse += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.slope_stderr = n > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  return fit;
}

std::vector<double> least_squares(const std::vector<std::vector<double>>& rows,
                                  const std::vector<double>& y) {
  require(!rows.empty() && rows.size() == y.size(), ErrorCode::InvalidArgument,
          "least_squares: size mismatch");
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index p = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd X(m, p);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rows[i][j];
    b(i) = y[i];
  }
  Eigen::VectorXd beta = X.colPivHouseholderQr().solve(b);
  return std::vector<double>(beta.data(), beta.data() + beta.size());
}

QuadraticFit fit_quadratic(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 3, ErrorCode::InvalidArgument,
          "fit_quadratic needs at least three paired samples");
  std::vector<std::vector<double>> rows;
  rows.reserve(x.size());
  for (double xi : x) rows.push_back({1.0, xi, xi * xi});
  const auto beta = least_squares(rows, y);
  QuadraticFit fit{beta[0], beta[1], beta[2], 0.0};
  const double my = mean(y);
  double sse = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.c0 + fit.c1 * x[i] + fit.c2 * x[i] * x[i]);
    sse += r * r;
    syy += (y[i] - my) * (y[i] - my);
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

TTest t_test_positive(const std::vector<double>& values) {
  require(values.size() >= 2, ErrorCode::DegenerateSamples, "t-test needs at least two values");
  TTest out;
  out.dof = static_cast<int>(values.size()) - 1;
  out.mean = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double sd = std::sqrt(ss / out.dof);
  if (sd == 0.0) {
    out.t = out.mean > 0.0 ? INFINITY : (out.mean < 0.0 ? -INFINITY : 0.0);
    out.p_value = out.mean > 0.0 ? 0.0 : 1.0;
    return out;
  }
  out.t = out.mean / (sd / std::sqrt(static_cast<double>(values.size())));
  boost::math::students_t dist(out.dof);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.t));
  return out;
}

}  // namespace hlab
