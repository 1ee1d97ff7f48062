#include "hyperhopf/charfield.hpp"

#include <algorithm>
#include <cmath>

namespace hyperhopf {

using expr::Bindings;

CharContext::CharContext(const SystemSpec& spec, double lambda, int cells)
    : spec_(spec), lambda_(lambda), cells_(cells), h_(1.0 / cells) {
  const int n = spec.n;

  Bindings fold;
  for (auto& [name, value] : spec.params) fold.set(name, value);
  fold.set("lambda", lambda);

  const std::vector<std::string> x_slot = {"x"};
  std::vector<std::string> xu_slots = {"x"};
  for (int j = 1; j <= n; ++j) xu_slots.push_back("u" + std::to_string(j));

  Bindings fold_u0 = fold;  // for b_jj: all u pinned to 0
  for (int j = 1; j <= n; ++j) fold_u0.set("u" + std::to_string(j), 0.0);

  for (int j = 0; j < n; ++j) {
    a_.emplace_back(spec.speeds[j], x_slot, fold);
    bjj_.emplace_back(
        spec.rhs[j].differentiate("u" + std::to_string(j + 1)), x_slot,
        fold_u0);
    b_.emplace_back(spec.rhs[j], xu_slots, fold);
  }

  inv_speed_.assign(n, std::vector<double>(cells_ + 1, 0.0));
  decay_.assign(n, std::vector<double>(cells_ + 1, 0.0));
  for (int j = 0; j < n; ++j) {
    auto inv_a = [&](double x) { return 1.0 / a_[j](&x); };
    auto bjj_over_a = [&](double x) { return bjj_[j](&x) / a_[j](&x); };
    for (int i = 0; i < cells_; ++i) {
      const double x0 = i * h_, x1 = (i + 1) * h_;
      inv_speed_[j][i + 1] =
          inv_speed_[j][i] + adaptive_quadrature(inv_a, x0, x1, 1e-12);
      decay_[j][i + 1] =
          decay_[j][i] + adaptive_quadrature(bjj_over_a, x0, x1, 1e-12);
    }
  }
}

double CharContext::speed(int j, double x) const { return a_[j](&x); }

double CharContext::diag_coupling(int j, double x) const { return bjj_[j](&x); }

double CharContext::interp(const std::vector<double>& table, double x) const {
  return cubic_interpolate(table, 0.0, h_, x);
}

double CharContext::inv_speed_antiderivative(int j, double x) const {
  return interp(inv_speed_[j], x);
}

double CharContext::decay_antiderivative(int j, double x) const {
  return interp(decay_[j], x);
}

double CharContext::char_time(int j, double xi, double x, double t,
                              double omega) const {
  return omega * (inv_speed_antiderivative(j, xi) -
                  inv_speed_antiderivative(j, x)) +
         t;
}

double CharContext::char_time_inverse(int j, double xi, double x, double tau,
                                      double omega) const {
  return tau - omega * (inv_speed_antiderivative(j, xi) -
                        inv_speed_antiderivative(j, x));
}

double CharContext::invert_inv_speed(int j, double target) const {
  const std::vector<double>& table = inv_speed_[j];
  const bool increasing = table.back() > table.front();
  // bracket on the node table, then Newton with A' = 1/a_j exact
  int lo = 0, hi = cells_;
  auto le = [&](double a, double b) { return increasing ? a <= b : a >= b; };
  if (le(target, table[0])) return 0.0;
  if (le(table[cells_], target)) return 1.0;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (le(table[mid], target))
      lo = mid;
    else
      hi = mid;
  }
  double xlo = lo * h_, xhi = hi * h_;
  double x = 0.5 * (xlo + xhi);
  for (int it = 0; it < 60; ++it) {
    const double f = interp(table, x) - target;
    if (le(0.0, f))
      xhi = std::min(xhi, x);
    else
      xlo = std::max(xlo, x);
    const double deriv = 1.0 / a_[j](&x);
    double step = f / deriv;
    double xn = x - step;
    if (!(xn > xlo && xn < xhi)) xn = 0.5 * (xlo + xhi);
    if (std::abs(xn - x) < 1e-15) return xn;
    x = xn;
  }
  return x;
}

double CharContext::decay_factor(int j, double xi, double x) const {
  return std::exp(decay_antiderivative(j, xi) - decay_antiderivative(j, x));
}

double CharContext::remainder(int j, double x, const double* u) const {
  // slots for b_: x, u1..un
  double slots[1 + 64];
  slots[0] = x;
  const int n = spec_.n;
  for (int k = 0; k < n; ++k) slots[1 + k] = u[k];
  return bjj_[j](&x) * u[j] - b_[j](slots);
}

std::vector<double> CharContext::remainder(double x,
                                           const std::vector<double>& u) const {
  std::vector<double> f(spec_.n);
  for (int j = 0; j < spec_.n; ++j) f[j] = remainder(j, x, u.data());
  return f;
}

CharContext::Dissipativity CharContext::dissipativity() const {
  const int n = spec_.n, m = spec_.m;
  Dissipativity d;
  const int samples = 4096;
  for (int j = 0; j < m; ++j) {
    double rsum = 0;
    for (int k = m; k < n; ++k) rsum += std::abs(spec_.reflection[j][k]);
    if (rsum == 0) continue;
    double wmax = 0;
    for (int i = 0; i <= samples; ++i) {
      const double x = static_cast<double>(i) / samples;
      wmax = std::max(wmax, std::exp(-decay_antiderivative(j, x)));
    }
    d.R0 = std::max(d.R0, rsum * wmax);
  }
  for (int j = m; j < n; ++j) {
    double rsum = 0;
    for (int k = 0; k < m; ++k) rsum += std::abs(spec_.reflection[j][k]);
    if (rsum == 0) continue;
    const double b1 = decay_antiderivative(j, 1.0);
    double wmax = 0;
    for (int i = 0; i <= samples; ++i) {
      const double x = static_cast<double>(i) / samples;
      wmax = std::max(wmax, std::exp(b1 - decay_antiderivative(j, x)));
    }
    d.R1 = std::max(d.R1, rsum * wmax);
  }
  d.product_ok = d.R0 * d.R1 < 1.0;
  return d;
}

}  // namespace hyperhopf
