#include "hyperhopf/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace hyperhopf {

namespace {

// 15-point Kronrod nodes/weights on [-1,1] and the embedded 7-point Gauss weights.
constexpr double kKronrodNodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,                0.207784955007898,
    0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
constexpr double kKronrodWeights[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
constexpr double kGaussWeights[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870};

struct GkResult {
  double value;
  double error;
};

GkResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double hl = 0.5 * (b - a);
  double kron = 0, gauss = 0;
  for (int i = 0; i < 15; ++i) {
    const double fx = f(c + hl * kKronrodNodes[i]);
    kron += kKronrodWeights[i] * fx;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * fx;
  }
  return {kron * hl, std::abs(kron - gauss) * hl};
}

double adaptive_quadrature_rec(const std::function<double(double)>& f, double a,
                               double b, double tol, int depth) {
  const GkResult r = gk15(f, a, b);
  if (r.error <= tol || depth >= 30) return r.value;
  const double c = 0.5 * (a + b);
  return adaptive_quadrature_rec(f, a, c, 0.5 * tol, depth + 1) +
         adaptive_quadrature_rec(f, c, b, 0.5 * tol, depth + 1);
}

}  // namespace

double adaptive_quadrature(const std::function<double(double)>& f, double a,
                           double b, double tol) {
  if (a == b) return 0.0;
  return adaptive_quadrature_rec(f, a, b, tol, 0);
}

template <class T>
static T simpson_impl(const std::vector<T>& samples, double h) {
  const size_t n = samples.size();
  if (n < 3 || n % 2 == 0)
    throw NumericsError("simpson: need an odd number of samples >= 3");
  T acc = samples.front() + samples.back();
  for (size_t i = 1; i + 1 < n; ++i)
    acc += samples[i] * ((i % 2 == 1) ? 4.0 : 2.0);
  return acc * (h / 3.0);
}

double simpson(const std::vector<double>& samples, double h) {
  return simpson_impl(samples, h);
}
Complex simpson(const std::vector<Complex>& samples, double h) {
  return simpson_impl(samples, h);
}

int cubic_stencil(int sample_count, double x0, double h, double x,
                  double weights[4]) {
  if (sample_count < 4) throw NumericsError("cubic_stencil: need >= 4 samples");
  double u = (x - x0) / h;
  int base = static_cast<int>(std::floor(u)) - 1;
  base = std::clamp(base, 0, sample_count - 4);
  const double t = u - base;
  // Lagrange basis on nodes {0,1,2,3} evaluated at t.
  weights[0] = -(t - 1) * (t - 2) * (t - 3) / 6.0;
  weights[1] = t * (t - 2) * (t - 3) / 2.0;
  weights[2] = -t * (t - 1) * (t - 3) / 2.0;
  weights[3] = t * (t - 1) * (t - 2) / 6.0;
  return base;
}

template <class T>
static T cubic_impl(const std::vector<T>& values, double x0, double h,
                    double x) {
  double w[4];
  const int base =
      cubic_stencil(static_cast<int>(values.size()), x0, h, x, w);
  return values[base] * w[0] + values[base + 1] * w[1] +
         values[base + 2] * w[2] + values[base + 3] * w[3];
}

double cubic_interpolate(const std::vector<double>& values, double x0,
                         double h, double x) {
  return cubic_impl(values, x0, h, x);
}
Complex cubic_interpolate(const std::vector<Complex>& values, double x0,
                          double h, double x) {
  return cubic_impl(values, x0, h, x);
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
constexpr double kB5[7] = {35.0 / 384,     0.0,  500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double kB4[7] = {5179.0 / 57600,  0.0,           7571.0 / 16695,
                           393.0 / 640,     -92097.0 / 339200,
                           187.0 / 2100,    1.0 / 40};

}  // namespace

void integrate_ode(const OdeRhs& rhs, double x0, double x1,
                   std::vector<Complex>& y, const OdeOptions& opts) {
  const double span = x1 - x0;
  if (span == 0.0) return;
  const double dir = span > 0 ? 1.0 : -1.0;
  const size_t dim = y.size();

  std::vector<std::vector<Complex>> k(7, std::vector<Complex>(dim));
  std::vector<Complex> ytmp(dim), y5(dim), y4(dim);

  double x = x0;
  double h = dir * std::min(opts.initial_step, std::abs(span));
  int steps = 0;
  rhs(x, y, k[0]);  // FSAL seed

  while (dir * (x1 - x) > 0) {
    if (std::abs(h) < 1e-15 * std::max(1.0, std::abs(x)))
      throw NumericsError("integrate_ode: step size underflow (stiffness)");
    if (++steps > opts.max_steps)
      throw NumericsError("integrate_ode: step budget exhausted");
    if (dir * (x + h - x1) > 0) h = x1 - x;

    for (int s = 1; s < 7; ++s) {
      for (size_t i = 0; i < dim; ++i) {
        Complex acc = 0;
        for (int j = 0; j < s; ++j) acc += kA[s][j] * k[j][i];
        ytmp[i] = y[i] + h * acc;
      }
      rhs(x + kC[s] * h, ytmp, k[s]);
    }
    double err = 0;
    for (size_t i = 0; i < dim; ++i) {
      Complex acc5 = 0, acc4 = 0;
      for (int s = 0; s < 7; ++s) {
        acc5 += kB5[s] * k[s][i];
        acc4 += kB4[s] * k[s][i];
      }
      y5[i] = y[i] + h * acc5;
      y4[i] = y[i] + h * acc4;
      const double sc =
          opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      const double e = std::abs(y5[i] - y4[i]) / sc;
      err = std::max(err, e);
    }
    if (err <= 1.0) {
      x += h;
      y = y5;
      k[0] = k[6];  // FSAL
    } else {
      rhs(x, y, k[0]);
    }
    const double fac =
        std::clamp(0.9 * std::pow(std::max(err, 1e-12), -0.2), 0.2, 5.0);
    h *= fac;
  }
}

std::vector<std::vector<Complex>> integrate_ode_sampled(
    const OdeRhs& rhs, std::vector<Complex> y0, int N, const OdeOptions& opts) {
  std::vector<std::vector<Complex>> out;
  out.reserve(N + 1);
  out.push_back(y0);
  for (int i = 0; i < N; ++i) {
    integrate_ode(rhs, static_cast<double>(i) / N,
                  static_cast<double>(i + 1) / N, y0, opts);
    out.push_back(y0);
  }
  return out;
}

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw NumericsError("fit_line: need >= 2 points");
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double den = n * sxx - sx * sx;
  if (den == 0) throw NumericsError("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

}  // namespace hyperhopf
