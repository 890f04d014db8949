#include "hlab/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hlab/error.hpp"

namespace hlab {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr double kBig = 1e250;
constexpr int kMaxIter = 100000;
constexpr double kPi = std::numbers::pi;

// 1/Γ(z) = Σ_{k≥1} a_k z^k.
constexpr double kRecipGamma[] = {
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
    -0.0000002056338417,
    0.0000000061160950,
    0.0000000050020075,
    -0.0000000011812746,
    0.0000000001043427,
    0.0000000000077823,
    -0.0000000000036968,
    0.0000000000005100,
    -0.0000000000000206,
    -0.0000000000000054,
    0.0000000000000014,
    0.0000000000000001,
};

// Temme's auxiliary gammas for |mu| ≤ 1/2:
// gampl = 1/Γ(1+mu), gammi = 1/Γ(1−mu),
// gam1 = (gammi − gampl)/(2 mu), gam2 = (gammi + gampl)/2.
void temme_gammas(double mu, double& gam1, double& gam2, double& gampl, double& gammi) {
  // 1/Γ(1+z) = Σ_{j≥0} a_{j+1} z^j.
  double even = 0.0, odd = 0.0;
  const int n = static_cast<int>(std::size(kRecipGamma));
  const double mu2 = mu * mu;
  double pe = 1.0, po = 1.0;
  for (int j = 0; j < n; j += 2) {
    even += kRecipGamma[j] * pe;
    pe *= mu2;
  }
  for (int j = 1; j < n; j += 2) {
    odd += kRecipGamma[j] * po;
    po *= mu2;
  }
  // gampl = even + mu·odd, gammi = even − mu·odd.
  gam1 = -odd;
  gam2 = even;
  gampl = even + mu * odd;
  gammi = even - mu * odd;
}

// Hankel's expansion; accurate once x ≫ ν².
void hankel_jy(double nu, double x, double& j, double& y) {
  const double mu = 4.0 * nu * nu;
  double P = 0.0, Q = 0.0, term = 1.0, last = INFINITY;
  for (int k = 0; k < 200; ++k) {
    if (k > 0) term *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * 8.0 * x);
    if (std::abs(term) > last) break;
    last = std::abs(term);
    switch (k % 4) {
      case 0: P += term; break;
      case 1: Q += term; break;
      case 2: P -= term; break;
      case 3: Q -= term; break;
    }
    if (std::abs(term) < kEps * 1e-2) break;
  }
  // χ = x − (ν/2 + 1/4)π; x is reduced by the library, the shift exactly.
  const double shift = (0.5 * nu + 0.25) * kPi;
  const double cx = std::cos(x), sx = std::sin(x);
  const double cs = std::cos(shift), ss = std::sin(shift);
  const double cchi = cx * cs + sx * ss;
  const double schi = sx * cs - cx * ss;
  const double amp = std::sqrt(2.0 / (kPi * x));
  j = amp * (P * cchi - Q * schi);
  y = amp * (P * schi + Q * cchi);
}

}  // namespace

BesselJY bessel_jy(double nu, double x) {
  require(std::isfinite(nu) && std::isfinite(x) && nu >= 0.0 && x >= 0.0, ErrorCode::RangeGuard,
          "Bessel arguments must be finite and nonnegative");
  require(nu <= 500.0 && x <= 1e4, ErrorCode::RangeGuard, "Bessel order or argument out of range");

  BesselJY out;
  if (x == 0.0) {
    out.j = nu == 0.0 ? 1.0 : 0.0;
    out.log_abs_j = nu == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
    out.jp = nu == 1.0 ? 0.5 : ((nu > 0.0 && nu < 1.0) ? std::numeric_limits<double>::infinity() : 0.0);
    out.y = -std::numeric_limits<double>::infinity();
    out.yp = std::numeric_limits<double>::infinity();
    return out;
  }

  if (x >= 1000.0) {
    // Hankel at the fractional order, then upward recurrence, which is
    // stable for both kinds while ν < x.
    const int steps = static_cast<int>(nu);
    const double mu0 = nu - steps;
    double j0, y0, j1, y1;
    hankel_jy(mu0, x, j0, y0);
    hankel_jy(mu0 + 1.0, x, j1, y1);
    for (int i = 0; i < steps; ++i) {
      const double m = mu0 + 1.0 + i;
      const double j2 = 2.0 * m / x * j1 - j0;
      const double y2 = 2.0 * m / x * y1 - y0;
      j0 = j1;
      j1 = j2;
      y0 = y1;
      y1 = y2;
    }
    out.j = j0;
    out.y = y0;
    out.jp = nu / x * j0 - j1;
    out.yp = nu / x * y0 - y1;
    out.sign_j = out.j < 0.0 ? -1 : 1;
    out.log_abs_j = std::log(std::abs(out.j));
    return out;
  }

  const int nl = x < 2.0 ? static_cast<int>(nu + 0.5)
                         : std::max(0, static_cast<int>(nu - x + 1.5));
  const double xmu = nu - nl;
  const double xmu2 = xmu * xmu;
  const double xi = 1.0 / x;
  const double xi2 = 2.0 * xi;
  const double w = xi2 / kPi;

  // CF1 for f = J'_ν / J_ν by modified Lentz.
  int isign = 1;
  double h = std::max(nu * xi, kTiny);
  double b = xi2 * nu, d = 0.0, c = h;
  int it = 0;
  for (; it < kMaxIter; ++it) {
    b += xi2;
    d = b - d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b - 1.0 / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = c * d;
    h *= del;
    if (d < 0.0) isign = -isign;
    if (std::abs(del - 1.0) < kEps) break;
  }
  require(it < kMaxIter, ErrorCode::RangeGuard, "continued fraction CF1 did not converge");

  // Downward recurrence from ν to μ on an unnormalised sequence; rescaled
  // to stay finite, with the number of rescalings kept in `scalings`.
  double rjl = isign * kTiny;
  double rjpl = h * rjl;
  const double rjl1 = rjl;
  const double rjp1 = rjpl;
  double fact = nu * xi;
  int scalings = 0;
  for (int l = nl; l >= 1; --l) {
    const double rjtemp = fact * rjl + rjpl;
    fact -= xi;
    rjpl = fact * rjtemp - rjl;
    rjl = rjtemp;
    if (std::abs(rjl) > kBig) {
      rjl /= kBig;
      rjpl /= kBig;
      ++scalings;
    }
  }
  if (rjl == 0.0) rjl = kEps;
  const double f = rjpl / rjl;

  double rjmu, rymu, rymup, ry1;
  if (x < 2.0) {
    // Temme's series for Y_μ and Y_{μ+1}.
    const double x2 = 0.5 * x;
    const double pimu = kPi * xmu;
    const double fct = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    d = -std::log(x2);
    double e = xmu * d;
    const double fct2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
    double gam1, gam2, gampl, gammi;
    temme_gammas(xmu, gam1, gam2, gampl, gammi);
    double ff = 2.0 / kPi * fct * (gam1 * std::cosh(e) + gam2 * fct2 * d);
    e = std::exp(e);
    double p = e / (gampl * kPi);
    double q = 1.0 / (e * kPi * gammi);
    const double pimu2 = 0.5 * pimu;
    const double fct3 = std::abs(pimu2) < kEps ? 1.0 : std::sin(pimu2) / pimu2;
    const double r = kPi * pimu2 * fct3 * fct3;
    c = 1.0;
    d = -x2 * x2;
    double sum = ff + r * q;
    double sum1 = p;
    int i = 1;
    for (; i <= kMaxIter; ++i) {
      ff = (i * ff + p + q) / (i * static_cast<double>(i) - xmu2);
      c *= d / i;
      p /= (i - xmu);
      q /= (i + xmu);
      const double del = c * (ff + r * q);
      sum += del;
      const double del1 = c * p - i * del;
      sum1 += del1;
      if (std::abs(del) < (1.0 + std::abs(sum)) * kEps) break;
    }
    require(i <= kMaxIter, ErrorCode::RangeGuard, "Temme series did not converge");
    rymu = -sum;
    ry1 = -sum1 * xi2;
    rymup = xmu * xi * rymu - ry1;
    rjmu = w / (rymup - f * rymu);
  } else {
    // Steed's CF2 for p + iq = (J'_μ + iY'_μ)/(J_μ + iY_μ).
    double a = 0.25 - xmu2;
    double p = -0.5 * xi;
    double q = 1.0;
    const double br = 2.0 * x;
    double bi = 2.0;
    double fct = a * xi / (p * p + q * q);
    double cr = br + q * fct;
    double ci = bi + p * fct;
    double den = br * br + bi * bi;
    double dr = br / den;
    double di = -bi / den;
    double dlr = cr * dr - ci * di;
    double dli = cr * di + ci * dr;
    double temp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = temp;
    int i = 2;
    for (; i <= kMaxIter; ++i) {
      a += 2.0 * (i - 1);
      bi += 2.0;
      dr = a * dr + br;
      di = a * di + bi;
      if (std::abs(dr) + std::abs(di) < kTiny) dr = kTiny;
      fct = a / (cr * cr + ci * ci);
      cr = br + cr * fct;
      ci = bi - ci * fct;
      if (std::abs(cr) + std::abs(ci) < kTiny) cr = kTiny;
      den = dr * dr + di * di;
      dr /= den;
      di /= -den;
      dlr = cr * dr - ci * di;
      dli = cr * di + ci * dr;
      temp = p * dlr - q * dli;
      q = p * dli + q * dlr;
      p = temp;
      if (std::abs(dlr - 1.0) + std::abs(dli) < kEps) break;
    }
    require(i <= kMaxIter, ErrorCode::RangeGuard, "continued fraction CF2 did not converge");
    const double gam = (p - f) / q;
    rjmu = std::sqrt(w / ((p - f) * gam + q));
    rjmu = std::copysign(rjmu, rjl);
    rymu = rjmu * gam;
    rymup = rymu * (p + q / gam);
    ry1 = xmu * xi * rymu - rymup;
  }

  // Wronskian normalisation: J_ν = rjl1 · (J_μ / rjl) / kBig^scalings.
  const double ratio = rjmu / rjl;
  const double log_abs = std::log(std::abs(rjl1)) + std::log(std::abs(ratio)) -
                         scalings * std::log(kBig);
  const int sign = ((rjl1 < 0) != (ratio < 0)) ? -1 : 1;
  out.log_abs_j = log_abs;
  out.sign_j = sign;
  if (scalings == 0) {
    out.j = rjl1 * ratio;
    out.jp = rjp1 * ratio;
  } else {
    out.j = sign * std::exp(log_abs);
    out.jp = out.j * (rjp1 / rjl1);
  }

  for (int i = 1; i <= nl; ++i) {
    const double rytemp = (xmu + i) * xi2 * ry1 - rymu;
    rymu = ry1;
    ry1 = rytemp;
  }
  out.y = rymu;
  out.yp = nu * xi * rymu - ry1;
  return out;
}

double bessel_j(double alpha, double x) { return bessel_jy(alpha, x).j; }
double bessel_y(double alpha, double x) { return bessel_jy(alpha, x).y; }
double bessel_j_prime(double alpha, double x) { return bessel_jy(alpha, x).jp; }
double log_abs_bessel_j(double alpha, double x) { return bessel_jy(alpha, x).log_abs_j; }

double radial_mode(int n, int ell, double r) {
  const double alpha = ell + 0.5 * n - 1.0;
  if (n == 2) return bessel_j(alpha, r);
  return std::pow(r, 1.0 - 0.5 * n) * bessel_j(alpha, r);
}

double radial_mode_prime(int n, int ell, double r) {
  const double alpha = ell + 0.5 * n - 1.0;
  const BesselJY jy = bessel_jy(alpha, r);
  if (n == 2) return jy.jp;
  const double s = 1.0 - 0.5 * n;
  return std::pow(r, s) * jy.jp + s * std::pow(r, s - 1.0) * jy.j;
}

double bessel_j_first_zero(double alpha) {
  // j_{α,1} lies in (α, α + 2α^{1/3} + 3).
  double lo = std::max(alpha, 1e-3);
  double step = 0.05;
  double flo = bessel_j(alpha, lo);
  double hi = lo + step;
  double fhi = bessel_j(alpha, hi);
  while (std::signbit(flo) == std::signbit(fhi)) {
    lo = hi;
    flo = fhi;
    hi += step;
    require(hi < alpha + 20.0 + 3.0 * std::cbrt(alpha + 1.0), ErrorCode::RangeGuard,
            "no zero bracketed");
    fhi = bessel_j(alpha, hi);
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = bessel_j(alpha, mid);
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

BesselInequalityReport check_bessel_inequalities(const std::vector<double>& alphas,
                                                 const std::vector<double>& xs,
                                                 int monotonicity_samples) {
  BesselInequalityReport rep;
  const double inf = std::numeric_limits<double>::infinity();
  rep.min_ratio_lower = rep.min_ratio_upper = rep.min_logderiv_lower = rep.min_logderiv_upper =
      rep.min_order_ratio = inf;
  for (double a : alphas) {
    require(a > 0.0, ErrorCode::InvalidArgument, "orders must be positive");
    const double log_ja = log_abs_bessel_j(a, a);
    for (double x : xs) {
      require(x > 0.0 && x < 1.0, ErrorCode::InvalidArgument, "x must lie in (0,1)");
      const BesselJY at = bessel_jy(a, a * x);
      const BesselJY next = bessel_jy(a + 1.0, a * x);
      const double log_ratio = at.log_abs_j - a * std::log(x) - log_ja;
      const double s1 = std::expm1(log_ratio);
      const double s2 = a * (1.0 - x) - log_ratio;
      const double logderiv = 1.0 / x - at.jp / at.j;
      const double s3 = logderiv;
      const double s4 = 1.0 - logderiv;
      const double s5 = (2.0 * a + 2.0) / (a * x) - std::exp(at.log_abs_j - next.log_abs_j);
      rep.min_ratio_lower = std::min(rep.min_ratio_lower, s1);
      rep.min_ratio_upper = std::min(rep.min_ratio_upper, s2);
      rep.min_logderiv_lower = std::min(rep.min_logderiv_lower, s3);
      rep.min_logderiv_upper = std::min(rep.min_logderiv_upper, s4);
      rep.min_order_ratio = std::min(rep.min_order_ratio, s5);
      rep.violations += (s1 < 0.0) + (s2 < 0.0) + (s3 <= 0.0) + (s4 <= 0.0) + (s5 <= 0.0) +
                        (at.sign_j < 0 || next.sign_j < 0);
      ++rep.evaluations;
    }
    double prev = -inf;
    for (int i = 1; i < monotonicity_samples; ++i) {
      const double x = static_cast<double>(i) / monotonicity_samples;
      const double lj = log_abs_bessel_j(a, a * x);
      if (lj <= prev) ++rep.monotonicity_violations;
      prev = lj;
    }
  }
  return rep;
}

void gauss_legendre(int points, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  require(points >= 1, ErrorCode::InvalidArgument, "need at least one node");
  nodes.assign(points, 0.0);
  weights.assign(points, 0.0);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int i = 0; i < (points + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (points + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= points; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (points == 1) p0 = 1.0, p1 = x;
      dp = points * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = mid - half * x;
    nodes[points - 1 - i] = mid + half * x;
    weights[i] = weights[points - 1 - i] = half * w;
  }
}

namespace {

template <class F>
double composite_gauss(double a, double b, int panels, int points, F&& f) {
  std::vector<double> x, w;
  double s = 0.0;
  const double step = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    gauss_legendre(points, a + p * step, a + (p + 1) * step, x, w);
    for (int i = 0; i < points; ++i) s += w[i] * f(x[i]);
  }
  return s;
}

}  // namespace

double radial_l2_squared(int n, int ell, double k, double rho) {
  return composite_gauss(0.0, rho, 16, 24, [&](double r) {
    const double R = radial_mode(n, ell, k * r);
    return R * R * std::pow(r, n - 1);
  });
}

double radial_gradient_squared(int n, int ell, double k, double rho) {
  const double lambda = static_cast<double>(ell) * (ell + n - 2);
  return composite_gauss(0.0, rho, 16, 24, [&](double r) {
    const double R = radial_mode(n, ell, k * r);
    const double Rp = radial_mode_prime(n, ell, k * r);
    return (k * k * Rp * Rp + lambda * R * R / (r * r)) * std::pow(r, n - 1);
  });
}

double radial_l2_series(int n, int ell, double k) {
  double s = 0.0;
  for (int m = 0; m < 400; ++m) {
    const double nu = ell + 0.5 * n + 2.0 * m;
    const double j = bessel_j(nu, 0.5 * k);
    const double term = nu * j * j;
    s += term;
    if (term < 1e-18 * s) break;
  }
  return 2.0 * std::pow(k, -n) * s;
}

OptimalityBound optimality_lower_bound(double k, int ell, double epsilon, int n) {
  require(n == 2 || n == 3, ErrorCode::InvalidArgument, "dimension must be 2 or 3");
  require(k > 0.0 && ell >= 1, ErrorCode::InvalidArgument, "k > 0 and ℓ ≥ 1 are required");
  const double alpha = ell + 0.5 * n - 1.0;
  require(alpha > k, ErrorCode::HypothesisViolated, "ℓ + n/2 − 1 must exceed k");
  OptimalityBound out;
  out.n = n;
  out.ell = ell;
  out.k = k;
  out.epsilon = epsilon < 0.0 ? 1.0 / (std::pow(2.0, 0.5 * n + 4.0) * ell) : epsilon;
  out.asymptotic_regime = ell >= 4.0 * std::max(k * k, static_cast<double>(n));

  const double l2sq = radial_l2_squared(n, ell, k, 0.5);
  out.g_l2 = std::sqrt(l2sq);
  out.g_h1 = std::sqrt(l2sq + radial_gradient_squared(n, ell, k, 0.5));
  out.alpha_ell = 1.0 / out.g_h1;
  // ‖u − v_ℓ‖ ≥ |c − 1| α_ℓ ‖g_ℓ‖ with equality in the single-mode direction.
  out.c_min = std::max(0.0, 1.0 - out.epsilon / (out.alpha_ell * out.g_l2));
  const double lambda = static_cast<double>(ell) * (ell + n - 2);
  out.min_boundary_norm = std::sqrt(1.0 + std::sqrt(lambda)) * out.c_min * out.alpha_ell *
                          std::abs(radial_mode(n, ell, k));

  const double ratio = std::exp(log_abs_bessel_j(alpha, k) - log_abs_bessel_j(alpha, 0.5 * k));
  out.bound_2ell = 2.0 * std::sqrt(static_cast<double>(ell)) * ratio *
                   (std::pow(2.0, -0.5 * n) / (1.0 + k + std::sqrt(2.0 * ell / k)) -
                    out.epsilon * std::sqrt(2.0 * ell + n));
  return out;
}

}  // namespace hlab
