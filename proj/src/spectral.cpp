#include "hyperhopf/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace hyperhopf {

using expr::Bindings;

// ---------------------------------------------------------------------------
// GridFn

Complex GridFn::interp(double xq, int j) const {
  double w[4];
  const int base = cubic_stencil(N + 1, 0.0, 1.0 / N, xq, w);
  Complex acc = 0;
  for (int s = 0; s < 4; ++s) acc += w[s] * data[(base + s) * n + j];
  return acc;
}

double GridFn::max_abs() const {
  double m = 0;
  for (const Complex& c : data) m = std::max(m, std::abs(c));
  return m;
}

double GridFn::l2_norm() const {
  std::vector<double> s(N + 1, 0.0);
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j < n; ++j) s[i] += std::norm(at(i, j));
  return std::sqrt(simpson(s, 1.0 / N));
}

Complex GridFn::pairing(const GridFn& f, const GridFn& g) {
  if (f.n != g.n || f.N != g.N)
    throw NumericsError("pairing: grid mismatch");
  std::vector<Complex> s(f.N + 1, Complex{});
  for (int i = 0; i <= f.N; ++i)
    for (int j = 0; j < f.n; ++j) s[i] += f.at(i, j) * std::conj(g.at(i, j));
  return simpson(s, 1.0 / f.N);
}

// ---------------------------------------------------------------------------
// SpectralSolver

SpectralSolver::SpectralSolver(const SystemSpec& spec, double lambda,
                               double ode_rtol)
    : spec_(spec), lambda_(lambda) {
  ode_.rtol = ode_rtol;
  ode_.atol = ode_rtol * 1e-3;

  Bindings fold;
  for (auto& [name, value] : spec.params) fold.set(name, value);
  fold.set("lambda", lambda);
  Bindings fold_u0 = fold;
  for (int j = 1; j <= spec.n; ++j) fold_u0.set("u" + std::to_string(j), 0.0);

  const std::vector<std::string> x_slot = {"x"};
  for (int j = 0; j < spec.n; ++j) {
    a_.emplace_back(spec.speeds[j], x_slot, fold);
    da_dx_.emplace_back(spec.speeds[j].differentiate("x"), x_slot, fold);
    for (int k = 0; k < spec.n; ++k)
      bjk_.emplace_back(
          spec.rhs[j].differentiate("u" + std::to_string(k + 1)), x_slot,
          fold_u0);
  }
  for (int j = 0; j < spec.n; ++j) {
    auto inv_a = [&](double x) { return 1.0 / a_[j](&x); };
    rescale_k_ += adaptive_quadrature(inv_a, 0.0, 1.0, 1e-12);
  }
}

double SpectralSolver::speed(int j, double x) const { return a_[j](&x); }
double SpectralSolver::coupling(int j, int k, double x) const {
  return bjk_[j * spec_.n + k](&x);
}
double SpectralSolver::speed_dx(int j, double x) const { return da_dx_[j](&x); }

void SpectralSolver::direct_rhs(Complex mu, double x,
                                const std::vector<Complex>& v,
                                std::vector<Complex>& dv) const {
  const int n = spec_.n;
  const int cols = static_cast<int>(v.size()) / n;
  for (int c = 0; c < cols; ++c) {
    const Complex* vc = v.data() + c * n;
    Complex* dc = dv.data() + c * n;
    for (int j = 0; j < n; ++j) {
      Complex coup = 0;
      for (int k = 0; k < n; ++k) coup += bjk_[j * n + k](&x) * vc[k];
      dc[j] = (mu * vc[j] - coup) / a_[j](&x);
    }
  }
}

void SpectralSolver::adjoint_rhs(Complex nu, double x,
                                 const std::vector<Complex>& w,
                                 std::vector<Complex>& dw) const {
  const int n = spec_.n;
  const int cols = static_cast<int>(w.size()) / n;
  for (int c = 0; c < cols; ++c) {
    const Complex* wc = w.data() + c * n;
    Complex* dc = dw.data() + c * n;
    for (int j = 0; j < n; ++j) {
      Complex coup = 0;  // sum_k d_{u_j} b_k w_k = sum_k B_kj w_k
      for (int k = 0; k < n; ++k) coup += bjk_[k * n + j](&x) * wc[k];
      dc[j] = (coup - nu * wc[j] - da_dx_[j](&x) * wc[j]) / a_[j](&x);
    }
  }
}

Eigen::MatrixXcd SpectralSolver::fundamental_matrix(Complex mu) const {
  const int n = spec_.n;
  std::vector<Complex> y(n * n, Complex{});
  for (int c = 0; c < n; ++c) y[c * n + c] = 1.0;  // identity columns
  integrate_ode(
      [&](double x, const std::vector<Complex>& v, std::vector<Complex>& dv) {
        direct_rhs(mu, x, v, dv);
      },
      0.0, 1.0, y, ode_);
  Eigen::MatrixXcd phi(n, n);
  for (int c = 0; c < n; ++c)
    for (int j = 0; j < n; ++j) phi(j, c) = y[c * n + j];
  return phi;
}

Eigen::MatrixXcd SpectralSolver::boundary_matrix(Complex mu) const {
  const int n = spec_.n, m = spec_.m;
  const Eigen::MatrixXcd phi = fundamental_matrix(mu);
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  // left rows: v_j(0) - sum_{k>m} r_jk v_k(0), with v(0) = identity columns
  for (int j = 0; j < m; ++j) {
    M(j, j) = 1.0;
    for (int k = m; k < n; ++k) M(j, k) = -spec_.reflection[j][k];
  }
  // right rows: v_j(1) - sum_{k<=m} r_jk v_k(1) applied to phi
  for (int j = m; j < n; ++j) {
    Eigen::RowVectorXcd row = phi.row(j);
    for (int k = 0; k < m; ++k) row -= spec_.reflection[j][k] * phi.row(k);
    M.row(j) = row;
  }
  return M;
}

Eigen::MatrixXcd SpectralSolver::adjoint_boundary_matrix(Complex nu) const {
  const int n = spec_.n, m = spec_.m;
  std::vector<Complex> y(n * n, Complex{});
  for (int c = 0; c < n; ++c) y[c * n + c] = 1.0;
  integrate_ode(
      [&](double x, const std::vector<Complex>& w, std::vector<Complex>& dw) {
        adjoint_rhs(nu, x, w, dw);
      },
      0.0, 1.0, y, ode_);
  Eigen::MatrixXcd psi(n, n);
  for (int c = 0; c < n; ++c)
    for (int j = 0; j < n; ++j) psi(j, c) = y[c * n + j];

  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  double x0 = 0.0, x1 = 1.0;
  // x=0 rows (j>m): a_j(0) w_j(0) + sum_{k<=m} r_kj a_k(0) w_k(0)
  for (int j = m; j < n; ++j) {
    M(j, j) = a_[j](&x0);
    for (int k = 0; k < m; ++k)
      M(j, k) += spec_.reflection[k][j] * a_[k](&x0);
  }
  // x=1 rows (j<=m): a_j(1) w_j(1) + sum_{k>m} r_kj a_k(1) w_k(1), via psi
  for (int j = 0; j < m; ++j) {
    Eigen::RowVectorXcd row = a_[j](&x1) * psi.row(j);
    for (int k = m; k < n; ++k)
      row += spec_.reflection[k][j] * a_[k](&x1) * psi.row(k);
    M.row(j) = row;
  }
  return M;
}

Complex SpectralSolver::char_determinant(Complex mu) const {
  const Eigen::MatrixXcd M = boundary_matrix(mu);
  return M.determinant() * std::exp(-mu * rescale_k_);
}

Complex SpectralSolver::determinant_derivative(Complex mu) const {
  const double h = 1e-6 * std::max(1.0, std::abs(mu));
  return (char_determinant(mu + h) - char_determinant(mu - h)) / (2 * h);
}

// ---------------------------------------------------------------------------
// argument principle

namespace {
constexpr double kBoundaryClearance = 1e-10;
}

SpectralSolver::Winding SpectralSolver::winding_number(const Rect& rect) const {
  const Complex corners[5] = {{rect.re_lo, rect.im_lo},
                              {rect.re_hi, rect.im_lo},
                              {rect.re_hi, rect.im_hi},
                              {rect.re_lo, rect.im_hi},
                              {rect.re_lo, rect.im_lo}};
  Winding w;
  w.min_abs = std::numeric_limits<double>::infinity();
  double total_phase = 0;

  struct Sample {
    Complex z;
    Complex d;
  };
  auto eval = [&](Complex z) -> Sample {
    Sample s{z, char_determinant(z)};
    const double m = std::abs(s.d);
    w.min_abs = std::min(w.min_abs, m);
    if (m < kBoundaryClearance)
      throw BoundaryTooCloseError(
          "winding: determinant magnitude on the contour under clearance");
    return s;
  };

  // phase difference along one segment, refined until each piece turns < pi/2
  const std::function<double(const Sample&, const Sample&, int)> segment =
      [&](const Sample& s0, const Sample& s1, int depth) -> double {
    const double dphi = std::arg(s1.d / s0.d);
    if (depth >= 2 && std::abs(dphi) < 1.2) return dphi;
    if (depth > 36)
      throw BoundaryTooCloseError(
          "winding: contour phase refinement exceeded depth limit");
    const Sample mid = eval(0.5 * (s0.z + s1.z));
    return segment(s0, mid, depth + 1) + segment(mid, s1, depth + 1);
  };

  for (int e = 0; e < 4; ++e) {
    const double len = std::abs(corners[e + 1] - corners[e]);
    const int init = len < 1.0 ? 8 : 16;
    Sample prev = eval(corners[e]);
    for (int i = 1; i <= init; ++i) {
      const Complex z =
          corners[e] + (corners[e + 1] - corners[e]) *
                           (static_cast<double>(i) / init);
      const Sample cur = eval(z);
      total_phase += segment(prev, cur, 0);
      prev = cur;
    }
  }

  w.integral = total_phase / (2 * M_PI);
  const double rounded = std::round(w.integral);
  if (std::abs(w.integral - rounded) > 0.01)
    throw BoundaryTooCloseError(
        "winding: contour integral not within 0.01 of an integer");
  w.count = static_cast<int>(rounded);
  return w;
}

std::optional<Complex> SpectralSolver::refine_zero(Complex seed, double tol,
                                                   double trust_radius) const {
  Complex z = seed;
  for (int it = 0; it < 60; ++it) {
    const Complex d = char_determinant(z);
    if (std::abs(d) < tol) return z;
    const Complex dd = determinant_derivative(z);
    if (dd == Complex{}) return std::nullopt;
    const Complex step = d / dd;
    z -= step;
    if (std::abs(z - seed) > trust_radius) return std::nullopt;
    if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(z))) break;
  }
  if (std::abs(char_determinant(z)) < tol) return z;
  return std::nullopt;
}

void SpectralSolver::find_in_rect(const Rect& rect, const SpectrumQuery& query,
                                  int depth,
                                  std::vector<std::pair<Complex, int>>& out)
    const {
  if (depth > 60)
    throw NumericsError("find_eigenvalues: subdivision depth exceeded");
  const Winding w = winding_number(rect);
  find_in_rect_counted(rect, w, query, depth, out);
}

void SpectralSolver::find_in_rect_counted(
    const Rect& rect, const Winding& w, const SpectrumQuery& query, int depth,
    std::vector<std::pair<Complex, int>>& out) const {
  if (w.count == 0) return;
  if (static_cast<int>(out.size()) + w.count > query.max_count)
    throw NumericsError("find_eigenvalues: more zeros than max_count");

  const double diag = std::hypot(rect.width(), rect.height());
  if (w.count == 1 && diag < 0.8) {
    if (auto z = refine_zero(rect.center(), query.newton_tol, 4 * diag)) {
      if (rect.contains(*z, 0.05 * diag)) {
        out.emplace_back(*z, 1);
        return;
      }
    }
    // Newton wandered; keep subdividing
  }
  if (diag < 1e-7) {
    // unresolvable cluster: report one zero carrying the whole winding count
    Complex z = rect.center();
    if (auto zr = refine_zero(z, query.newton_tol * 1e3, 10 * diag)) z = *zr;
    out.emplace_back(z, w.count);
    return;
  }
  if (depth > 58)
    throw NumericsError("find_eigenvalues: subdivision depth exceeded");

  // split across the longer side; shift the cut when a zero sits on it
  static constexpr double kCutFractions[] = {0.5,  0.45, 0.55, 0.4,
                                             0.6,  0.35, 0.65};
  const bool cut_re = rect.width() >= rect.height();
  for (double frac : kCutFractions) {
    Rect left = rect, right = rect;
    if (cut_re) {
      const double cut = rect.re_lo + frac * rect.width();
      left.re_hi = cut;
      right.re_lo = cut;
    } else {
      const double cut = rect.im_lo + frac * rect.height();
      left.im_hi = cut;
      right.im_lo = cut;
    }
    Winding wl, wr;
    try {
      wl = winding_number(left);
      wr = winding_number(right);
    } catch (const BoundaryTooCloseError&) {
      continue;
    }
    if (wl.count + wr.count != w.count) continue;  // cut swallowed a zero
    find_in_rect_counted(left, wl, query, depth + 1, out);
    find_in_rect_counted(right, wr, query, depth + 1, out);
    return;
  }
  throw NumericsError(
      "find_eigenvalues: could not place a zero-free subdivision cut");
}

std::vector<EigenPair> SpectralSolver::find_eigenvalues(
    const SpectrumQuery& query) const {
  std::vector<std::pair<Complex, int>> found;
  const Winding root = winding_number(query.region);
  find_in_rect_counted(query.region, root, query, 0, found);

  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    if (a.first.real() != b.first.real())
      return a.first.real() < b.first.real();
    return a.first.imag() < b.first.imag();
  });
  std::vector<EigenPair> out;
  int total = 0;
  for (const auto& [z, mult] : found) {
    total += mult;
    if (!out.empty() && std::abs(out.back().mu - z) < 1e-9) {
      out.back().winding_multiplicity += mult;
      continue;
    }
    EigenPair p;
    p.mu = z;
    p.winding_multiplicity = mult;
    out.push_back(std::move(p));
  }
  if (total != root.count)
    throw NumericsError(
        "find_eigenvalues: zero count does not match the winding number");
  return out;
}

// ---------------------------------------------------------------------------
// eigenfunctions

namespace {

SpectralSolver::NullSpace null_space_of(Eigen::MatrixXcd M) {
  // row-normalize: keeps the null space, makes thresholds scale-free
  for (int j = 0; j < M.rows(); ++j) {
    const double norm = M.row(j).norm();
    if (norm > 0) M.row(j) /= norm;
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
      M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  SpectralSolver::NullSpace ns;
  const int last = static_cast<int>(sv.size()) - 1;
  ns.sigma_min = sv(last);
  ns.sigma_next = last > 0 ? sv(last - 1) : std::numeric_limits<double>::infinity();
  ns.direction = svd.matrixV().col(last);
  ns.dimension = 0;
  for (int i = 0; i <= last; ++i)
    if (sv(i) < 1e-8) ++ns.dimension;
  return ns;
}

}  // namespace

SpectralSolver::NullSpace SpectralSolver::boundary_null_space(
    Complex mu) const {
  return null_space_of(boundary_matrix(mu));
}

SpectralSolver::NullSpace SpectralSolver::adjoint_boundary_null_space(
    Complex nu) const {
  return null_space_of(adjoint_boundary_matrix(nu));
}

GridFn SpectralSolver::eigenfunction(Complex mu, int N) const {
  const NullSpace ns = boundary_null_space(mu);
  if (ns.sigma_min >= 1e-8)
    throw NotSimpleError("eigenfunction: boundary system has no null space");
  if (ns.sigma_next < 1e-4)
    throw NotSimpleError(
        "eigenfunction: null space is not one-dimensional (geometric "
        "simplicity fails)");
  const int n = spec_.n;
  std::vector<Complex> y(ns.direction.data(), ns.direction.data() + n);
  const auto samples = integrate_ode_sampled(
      [&](double x, const std::vector<Complex>& v, std::vector<Complex>& dv) {
        direct_rhs(mu, x, v, dv);
      },
      std::move(y), N, ode_);
  GridFn v(n, N);
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j < n; ++j) v.at(i, j) = samples[i][j];
  return v;
}

GridFn SpectralSolver::adjoint_eigenfunction(Complex nu, int N) const {
  const NullSpace ns = adjoint_boundary_null_space(nu);
  if (ns.sigma_min >= 1e-8)
    throw NotSimpleError(
        "adjoint_eigenfunction: boundary system has no null space");
  if (ns.sigma_next < 1e-4)
    throw NotSimpleError(
        "adjoint_eigenfunction: null space is not one-dimensional");
  const int n = spec_.n;
  std::vector<Complex> y(ns.direction.data(), ns.direction.data() + n);
  const auto samples = integrate_ode_sampled(
      [&](double x, const std::vector<Complex>& w, std::vector<Complex>& dw) {
        adjoint_rhs(nu, x, w, dw);
      },
      std::move(y), N, ode_);
  GridFn w(n, N);
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j < n; ++j) w.at(i, j) = samples[i][j];
  return w;
}

GridFn SpectralSolver::ode_derivative(const GridFn& v, Complex mu) const {
  const int n = spec_.n;
  GridFn dv(n, v.N);
  std::vector<Complex> col(n), dcol(n);
  for (int i = 0; i <= v.N; ++i) {
    const double x = v.x(i);
    for (int j = 0; j < n; ++j) col[j] = v.at(i, j);
    direct_rhs(mu, x, col, dcol);
    for (int j = 0; j < n; ++j) dv.at(i, j) = dcol[j];
  }
  return dv;
}

std::tuple<GridFn, GridFn, Complex> normalize_pair(
    GridFn v, GridFn w, const std::optional<Anchor>& anchor) {
  Complex scale;
  if (anchor) {
    scale = v.interp(anchor->x, anchor->component - 1);
    if (std::abs(scale) < 1e-12 * v.max_abs())
      throw NotSimpleError("normalize_pair: anchor component vanishes there");
  } else {
    int bi = 0, bj = 0;
    double best = -1;
    for (int i = 0; i <= v.N; ++i)
      for (int j = 0; j < v.n; ++j)
        if (std::abs(v.at(i, j)) > best) {
          best = std::abs(v.at(i, j));
          bi = i;
          bj = j;
        }
    scale = v.at(bi, bj);
  }
  for (Complex& c : v.data) c /= scale;

  const Complex pairing = GridFn::pairing(v, w);
  if (std::abs(pairing) <= 1e-8 * v.l2_norm() * w.l2_norm())
    throw NotSimpleError(
        "normalize_pair: eigenfunction/adjoint pairing is numerically zero "
        "(algebraic simplicity fails)");
  const Complex c = std::conj(2.0 / pairing);
  for (Complex& e : w.data) e *= c;
  return {std::move(v), std::move(w), pairing};
}

}  // namespace hyperhopf
