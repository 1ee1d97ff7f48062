#pragma once

#include <vector>

#include "hyperhopf/model.hpp"

namespace hyperhopf {

/// Per-(spec, lambda) cache of the two antiderivatives driving the
/// characteristic geometry,
///   A_j(x) = int_0^x d eta / a_j(eta, lambda),
///   B_j(x) = int_0^x b_jj(eta, lambda) / a_j(eta, lambda) d eta,
/// tabulated on a uniform grid with per-cell adaptive quadrature and
/// interpolated cubically between nodes. Immutable after construction.
class CharContext {
 public:
  CharContext(const SystemSpec& spec, double lambda, int cells = 1024);

  const SystemSpec& spec() const { return spec_; }
  double lambda() const { return lambda_; }

  double speed(int j, double x) const;          // a_j(x, lambda)
  double diag_coupling(int j, double x) const;  // d_{u_j} b_j(x, lambda, 0)

  double inv_speed_antiderivative(int j, double x) const;  // A_j
  double decay_antiderivative(int j, double x) const;      // B_j

  /// tau_j(xi, x, t) = omega * (A_j(xi) - A_j(x)) + t: the time at which the
  /// characteristic of component j through (x, t) passes position xi.
  double char_time(int j, double xi, double x, double t, double omega) const;

  /// The start time t with char_time(j, xi, x, t, omega) == tau.
  double char_time_inverse(int j, double xi, double x, double tau,
                           double omega) const;

  /// Position xi with A_j(xi) == target; strictly monotone inversion,
  /// clamped to [0,1] only by the caller.
  double invert_inv_speed(int j, double target) const;

  /// c_j(xi, x) = exp(B_j(xi) - B_j(x)); positive, c_j(x,x) = 1.
  double decay_factor(int j, double xi, double x) const;

  /// f_j(x, lambda, u) = b_jj(x) u_j - b_j(x, lambda, u); f(x, lambda, 0) = 0
  /// and the diagonal of d_u f(x, lambda, 0) vanishes.
  std::vector<double> remainder(double x, const std::vector<double>& u) const;
  double remainder(int j, double x, const double* u) const;

  struct Dissipativity {
    double R0 = 0;
    double R1 = 0;
    bool product_ok = false;
  };
  /// Weighted reflection gains R0, R1 and the smallness verdict R0*R1 < 1.
  Dissipativity dissipativity() const;

 private:
  double interp(const std::vector<double>& table, double x) const;

  SystemSpec spec_;
  double lambda_;
  int cells_;
  double h_;
  std::vector<std::vector<double>> inv_speed_;  // A_j nodes
  std::vector<std::vector<double>> decay_;      // B_j nodes
  std::vector<expr::CompiledExpr> a_;           // slots: x
  std::vector<expr::CompiledExpr> bjj_;         // slots: x
  std::vector<expr::CompiledExpr> b_;           // slots: x, u1..un
};

}  // namespace hyperhopf
