#include "hyperhopf/bifcoef.hpp"

#include <cmath>

namespace hyperhopf {

const char* to_string(Direction d) {
  switch (d) {
    case Direction::Supercritical: return "supercritical";
    case Direction::Subcritical: return "subcritical";
    case Direction::Degenerate: return "degenerate";
  }
  return "?";
}

double BifurcationResult::eps_of_offset(double offset) const {
  if (direction == Direction::Degenerate)
    throw NumericsError("eps_of_offset: degenerate bifurcation (beta ~ 0)");
  if (offset <= 0) throw NumericsError("eps_of_offset: offset must be > 0");
  // lambda - lambda0 = side*offset and lambda(eps) = lambda0 +
  // (beta/alpha) eps^2/2, so eps^2 = 2 alpha (lambda-lambda0)/beta
  return std::sqrt(2.0 * std::abs(alpha) * offset / std::abs(beta));
}

GridFn solve_harmonic_bvp(const SystemSpec& spec, double lambda0,
                          Complex shift,
                          const std::function<void(double, Complex*)>& forcing,
                          int N, double ode_rtol) {
  const int n = spec.n, m = spec.m;
  SpectralSolver solver(spec, lambda0, ode_rtol);

  OdeOptions ode;
  ode.rtol = ode_rtol;
  ode.atol = ode_rtol * 1e-3;

  // Particular solution with zero initial data plus the homogeneous
  // fundamental columns, integrated together: state = [g_p | Phi columns].
  std::vector<Complex> state(n * (n + 1), Complex{});
  for (int c = 0; c < n; ++c) state[(c + 1) * n + c] = 1.0;

  std::vector<Complex> fbuf(n);
  auto rhs = [&](double x, const std::vector<Complex>& y,
                 std::vector<Complex>& dy) {
    forcing(x, fbuf.data());
    for (int c = 0; c <= n; ++c) {
      const Complex* yc = y.data() + c * n;
      Complex* dc = dy.data() + c * n;
      for (int j = 0; j < n; ++j) {
        Complex coup = 0;
        for (int k = 0; k < n; ++k)
          coup += solver.coupling(j, k, x) * yc[k];
        Complex val = shift * yc[j] - coup;
        if (c == 0) val += fbuf[j];
        dc[j] = val / solver.speed(j, x);
      }
    }
  };

  const auto samples = integrate_ode_sampled(rhs, std::move(state), N, ode);

  // boundary correction: rows j<m at x=0, rows j>=m at x=1
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  Eigen::VectorXcd rhs_vec = Eigen::VectorXcd::Zero(n);
  auto column = [&](int i, int c, int j) {  // sample i, column c, component j
    return samples[i][c * n + j];
  };
  for (int j = 0; j < m; ++j) {
    // g_p(0) = 0, so the right-hand side is zero here
    M(j, j) = 1.0;
    for (int k = m; k < n; ++k) M(j, k) = -spec.reflection[j][k];
    Complex resid = column(0, 0, j);
    for (int k = m; k < n; ++k)
      resid -= spec.reflection[j][k] * column(0, 0, k);
    rhs_vec(j) = -resid;
  }
  for (int j = m; j < n; ++j) {
    for (int c = 0; c < n; ++c) {
      Complex entry = column(N, c + 1, j);
      for (int k = 0; k < m; ++k)
        entry -= spec.reflection[j][k] * column(N, c + 1, k);
      M(j, c) = entry;
    }
    Complex resid = column(N, 0, j);
    for (int k = 0; k < m; ++k)
      resid -= spec.reflection[j][k] * column(N, 0, k);
    rhs_vec(j) = -resid;
  }

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(M);
  if (lu.rank() < n)
    throw ResonanceError(
        "solve_harmonic_bvp: boundary system singular (the harmonic shift "
        "hits an eigenvalue)");
  const Eigen::VectorXcd c = lu.solve(rhs_vec);

  GridFn g(n, N);
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j < n; ++j) {
      Complex val = column(i, 0, j);
      for (int k = 0; k < n; ++k) val += c(k) * column(i, k + 1, j);
      g.at(i, j) = val;
    }
  return g;
}

namespace {

std::function<void(double, Complex*)> quadratic_forcing(
    const DerivTable& table, const GridFn& v, double lambda0, double factor,
    bool conj_second) {
  const int n = v.n;
  return [&table, &v, lambda0, factor, conj_second, n](double x, Complex* out) {
    const DerivTensors t = table.at(x, lambda0);
    std::vector<Complex> vv(n);
    for (int k = 0; k < n; ++k) vv[k] = v.interp(x, k);
    for (int j = 0; j < n; ++j) {
      Complex acc = 0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const Complex second = conj_second ? std::conj(vv[l]) : vv[l];
          acc += t.b2(j, k, l) * vv[k] * second;
        }
      out[j] = factor * acc;
    }
  };
}

}  // namespace

GridFn solve_y_bvp(const SystemSpec& spec, const EigenPair& pair,
                   double lambda0, double omega0, int N, double ode_rtol) {
  DerivTable table(spec);
  const auto forcing =
      quadratic_forcing(table, pair.v, lambda0, -0.25, false);
  return solve_harmonic_bvp(spec, lambda0, Complex(0.0, 2.0 * omega0), forcing,
                            N, ode_rtol);
}

GridFn solve_z_bvp(const SystemSpec& spec, const EigenPair& pair,
                   double lambda0, int N, double ode_rtol) {
  DerivTable table(spec);
  const auto forcing = quadratic_forcing(table, pair.v, lambda0, -0.5, true);
  return solve_harmonic_bvp(spec, lambda0, Complex(0.0, 0.0), forcing, N,
                            ode_rtol);
}

double beta_coefficient(const SystemSpec& spec, const EigenPair& pair,
                        const BifAux& aux, double lambda0) {
  const GridFn& v = pair.v;
  const GridFn& w = pair.w;
  const GridFn& y = aux.y;
  const GridFn& z = aux.z;
  const int n = v.n, N = v.N;
  DerivTable table(spec);

  std::vector<Complex> integrand(N + 1, Complex{});
  for (int i = 0; i <= N; ++i) {
    const DerivTensors t = table.at(v.x(i), lambda0);
    Complex acc = 0;
    for (int j = 0; j < n; ++j) {
      Complex quartic = 0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          for (int r = 0; r < n; ++r)
            quartic += t.b3(j, k, l, r) * v.at(i, k) * v.at(i, l) *
                       std::conj(v.at(i, r));
      Complex quad = 0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          quad += t.b2(j, k, l) *
                  (y.at(i, k) * std::conj(v.at(i, l)) + z.at(i, k) * v.at(i, l));
      acc += (quartic / 8.0 + quad) * std::conj(w.at(i, j));
    }
    integrand[i] = acc;
  }
  return -simpson(integrand, 1.0 / N).real();
}

BifurcationResult bifurcation_result(const SystemSpec& spec,
                                     const HopfReport& report,
                                     double ode_rtol) {
  if (!report.all_pass())
    throw HypothesisError(std::string("bifurcation_result: hypothesis ") +
                          report.first_failure() + " failed");

  BifurcationResult res;
  res.lambda0 = report.lambda0;
  res.omega0 = report.omega0;
  res.alpha = report.alpha;

  // grid refinement until beta settles
  SpectralSolver solver(spec, report.lambda0, ode_rtol);
  const Complex mu(0.0, report.omega0);
  int N = report.pair.v.N;
  double beta_prev = 0;
  bool have_prev = false;
  EigenPair pair = report.pair;
  for (int iter = 0;; ++iter) {
    BifAux aux;
    aux.y = solve_y_bvp(spec, pair, report.lambda0, report.omega0, N,
                        ode_rtol);
    aux.z = solve_z_bvp(spec, pair, report.lambda0, N, ode_rtol);
    const double beta = beta_coefficient(spec, pair, aux, report.lambda0);
    if (have_prev &&
        std::abs(beta - beta_prev) <= 1e-8 * std::max(1e-30, std::abs(beta))) {
      res.beta = beta;
      res.aux = std::move(aux);
      res.first_order_orbit = pair.v;
      break;
    }
    if (iter >= 3) {
      res.beta = beta;
      res.aux = std::move(aux);
      res.first_order_orbit = pair.v;
      break;
    }
    beta_prev = beta;
    have_prev = true;
    N *= 2;
    GridFn v = solver.eigenfunction(mu, N);
    GridFn w = solver.adjoint_eigenfunction(std::conj(mu), N);
    auto [vn, wn, pairing] = normalize_pair(std::move(v), std::move(w),
                                            spec.anchor);
    pair.v = std::move(vn);
    pair.w = std::move(wn);
    pair.pairing = pairing;
  }

  res.curvature = res.beta / res.alpha;
  if (res.beta > 1e-10)
    res.direction = Direction::Supercritical;
  else if (res.beta < -1e-10)
    res.direction = Direction::Subcritical;
  else
    res.direction = Direction::Degenerate;
  res.bifurcating_side =
      res.direction == Direction::Degenerate
          ? 0
          : (res.alpha * res.beta > 0 ? 1 : -1);
  res.orbit_scale = res.first_order_orbit.max_abs();
  return res;
}

}  // namespace hyperhopf
