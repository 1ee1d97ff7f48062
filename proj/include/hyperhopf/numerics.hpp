#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyperhopf {

using Complex = std::complex<double>;

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericsError : public Error {
 public:
  using Error::Error;
};

/// Adaptive Gauss-Kronrod (7/15) quadrature of f over [a, b].
double adaptive_quadrature(const std::function<double(double)>& f, double a,
                           double b, double tol = 1e-12);

/// Composite Simpson on uniformly sampled values with spacing h.
/// Requires an odd sample count; throws otherwise.
double simpson(const std::vector<double>& samples, double h);
Complex simpson(const std::vector<Complex>& samples, double h);

/// Local cubic (4-point Lagrange) interpolation on a uniform grid.
/// values[i] lives at x0 + i*h. Stencils are clamped at the ends.
double cubic_interpolate(const std::vector<double>& values, double x0,
                         double h, double x);
Complex cubic_interpolate(const std::vector<Complex>& values, double x0,
                          double h, double x);

/// Weights for the clamped 4-point stencil at x; returns the base index.
int cubic_stencil(int sample_count, double x0, double h, double x,
                  double weights[4]);

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-13;
  double initial_step = 1e-3;
  int max_steps = 2000000;
};

using OdeRhs =
    std::function<void(double, const std::vector<Complex>&, std::vector<Complex>&)>;

/// Dormand-Prince 5(4) with PI step control; advances y from x0 to x1 in place.
/// Throws NumericsError on step-size underflow (stiffness) or step budget.
void integrate_ode(const OdeRhs& rhs, double x0, double x1,
                   std::vector<Complex>& y, const OdeOptions& opts = {});

/// Integrate over [0,1] and record the state at the N+1 uniform grid points.
std::vector<std::vector<Complex>> integrate_ode_sampled(
    const OdeRhs& rhs, std::vector<Complex> y0, int N,
    const OdeOptions& opts = {});

struct LineFit {
  double slope = 0;
  double intercept = 0;
};

/// Least-squares straight line through (xs, ys).
LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace hyperhopf
