#include "hyperhopf/hopf.hpp"

#include <algorithm>
#include <cmath>

namespace hyperhopf {

namespace {

// rightmost eigenvalue with positive imaginary part (crossing candidate)
const EigenPair* rightmost_upper(const std::vector<EigenPair>& eigs) {
  const EigenPair* best = nullptr;
  for (const EigenPair& e : eigs) {
    if (e.mu.imag() <= 0) continue;
    if (!best || e.mu.real() > best->mu.real()) best = &e;
  }
  return best;
}

}  // namespace

Complex track_eigenvalue(const SystemSpec& spec, double lambda_from,
                         Complex mu_from, double lambda_to, double ode_rtol) {
  Complex mu = mu_from;
  double lam = lambda_from;
  double step = lambda_to - lambda_from;
  int halvings = 0;
  while (lam != lambda_to) {
    if (std::abs(step) > 0.05) step = step > 0 ? 0.05 : -0.05;
    double next = lam + step;
    if ((lambda_to - lam) / step <= 1.0) next = lambda_to;
    SpectralSolver solver(spec, next, ode_rtol);
    const auto refined = solver.refine_zero(mu, 1e-9, 0.6);
    // guard against hopping to a different branch
    const double guard = std::max(10 * std::abs(next - lam), 1e-6);
    if (!refined || std::abs(*refined - mu) > guard) {
      if (++halvings > 40)
        throw NumericsError("track_eigenvalue: continuation failed");
      step *= 0.5;
      continue;
    }
    mu = *refined;
    lam = next;
    step *= 1.6;
  }
  return mu;
}

CrossingResult locate_crossing(const SystemSpec& spec,
                               const HopfOptions& opts) {
  SpectrumQuery q;
  q.region = opts.region;
  q.ode_rtol = opts.ode_rtol;

  q.lambda = opts.lambda_lo;
  SpectralSolver lo_solver(spec, opts.lambda_lo, opts.ode_rtol);
  const auto eigs_lo = lo_solver.find_eigenvalues(q);
  for (const EigenPair& e : eigs_lo)
    if (e.mu.real() >= 0)
      throw NoCrossingError(
          "locate_crossing: an eigenvalue already has nonnegative real part "
          "at the left end of the lambda range");
  const EigenPair* branch = rightmost_upper(eigs_lo);
  if (!branch)
    throw NoCrossingError(
        "locate_crossing: no eigenvalues in the region at the left end of "
        "the lambda range (empty spectrum, nothing can cross)");

  // track the rightmost branch to the right end; bisect its real part
  struct Known {
    double lambda;
    Complex mu;
  };
  std::vector<Known> known{{opts.lambda_lo, branch->mu}};
  auto mu_at = [&](double lam) -> Complex {
    const Known* nearest = &known.front();
    for (const Known& k : known)
      if (std::abs(k.lambda - lam) < std::abs(nearest->lambda - lam))
        nearest = &k;
    const Complex mu =
        track_eigenvalue(spec, nearest->lambda, nearest->mu, lam,
                         opts.ode_rtol);
    known.push_back({lam, mu});
    return mu;
  };

  double lo = opts.lambda_lo, hi = opts.lambda_hi;
  Complex mu_hi = mu_at(hi);
  if (mu_hi.real() <= 0)
    throw NoCrossingError(
        "locate_crossing: the tracked branch does not cross in the lambda "
        "range");
  Complex mu_mid = mu_hi;
  while (hi - lo > opts.bisect_tol) {
    const double mid = 0.5 * (lo + hi);
    mu_mid = mu_at(mid);
    if (mu_mid.real() < 0)
      lo = mid;
    else
      hi = mid;
  }
  CrossingResult res;
  res.lambda0 = 0.5 * (lo + hi);
  Complex mu0 = mu_at(res.lambda0);
  res.mu0 = Complex(mu0.real(), std::abs(mu0.imag()));
  res.omega0 = std::abs(mu0.imag());

  q.lambda = res.lambda0;
  SpectralSolver solver0(spec, res.lambda0, opts.ode_rtol);
  res.spectrum = solver0.find_eigenvalues(q);
  for (const EigenPair& e : res.spectrum)
    if (std::abs(e.mu.real()) < 1e-8)
      for (int c = 0; c < e.winding_multiplicity; ++c)
        res.on_axis.push_back(e.mu);
  return res;
}

bool check_geometric(const SystemSpec& spec, double lambda0, double omega0,
                     double ode_rtol) {
  SpectralSolver solver(spec, lambda0, ode_rtol);
  const auto ns = solver.boundary_null_space(Complex(0.0, omega0));
  return ns.dimension == 1;
}

std::pair<bool, Complex> check_algebraic(const GridFn& v, const GridFn& w) {
  const Complex pairing = GridFn::pairing(v, w);
  const bool ok =
      std::abs(pairing) > 1e-8 * v.l2_norm() * w.l2_norm();
  return {ok, pairing};
}

double transversality_alpha(const SystemSpec& spec, const EigenPair& pair,
                            double lambda0, double ode_rtol) {
  SpectralSolver solver(spec, lambda0, ode_rtol);
  const GridFn& v = pair.v;
  const GridFn& w = pair.w;
  const GridFn dv = solver.ode_derivative(v, pair.mu);
  DerivTable table(spec);

  const int n = v.n, N = v.N;
  std::vector<Complex> integrand(N + 1, Complex{});
  for (int i = 0; i <= N; ++i) {
    const DerivTensors t = table.at(v.x(i), lambda0);
    Complex acc = 0;
    for (int j = 0; j < n; ++j) {
      Complex term = t.dlam_a[j] * dv.at(i, j);
      for (int k = 0; k < n; ++k)
        term += t.dlam_bjk[j * n + k] * v.at(i, k);
      acc += term * std::conj(w.at(i, j));
    }
    integrand[i] = acc;
  }
  return 0.5 * simpson(integrand, 1.0 / N).real();
}

double eigenvalue_slope_fd(const SystemSpec& spec, Complex mu0, double lambda0,
                           double h, double ode_rtol) {
  const Complex plus =
      track_eigenvalue(spec, lambda0, mu0, lambda0 + h, ode_rtol);
  const Complex minus =
      track_eigenvalue(spec, lambda0, mu0, lambda0 - h, ode_rtol);
  return (plus.real() - minus.real()) / (2 * h);
}

NonresonanceResult check_nonresonance(const SystemSpec& spec, double lambda0,
                                      double omega0, int k_max,
                                      double ode_rtol) {
  SpectralSolver solver(spec, lambda0, ode_rtol);
  NonresonanceResult res;
  std::vector<int> ks{0};
  for (int k = 2; k <= k_max; ++k) {
    ks.push_back(k);
    ks.push_back(-k);
  }
  const double half = 0.45;
  for (int k : ks) {
    const Complex target(0.0, k * omega0);
    Rect box{target.real() - half, target.real() + half,
             target.imag() - half, target.imag() + half};
    SpectrumQuery q;
    q.lambda = lambda0;
    q.ode_rtol = ode_rtol;
    std::vector<EigenPair> eigs;
    // a box edge may graze an eigenvalue; shrink slightly and retry
    double shrink = 1.0;
    for (int attempt = 0;; ++attempt) {
      q.region = Rect{target.real() - half * shrink,
                      target.real() + half * shrink,
                      target.imag() - half * shrink,
                      target.imag() + half * shrink};
      try {
        eigs = solver.find_eigenvalues(q);
        break;
      } catch (const BoundaryTooCloseError&) {
        if (attempt >= 5) throw;
        shrink *= 0.83;
      }
    }
    double dist = half * shrink;  // nothing inside: clearance at least the box
    for (const EigenPair& e : eigs)
      dist = std::min(dist, std::abs(e.mu - target));
    if (dist < res.nearest_distance) {
      res.nearest_distance = dist;
      res.worst_k = k;
    }
    if (!eigs.empty() && dist < 1e-6) res.ok = false;
  }
  return res;
}

const char* HopfReport::first_failure() const {
  if (!geo_simple) return "(1.11) geometric simplicity";
  if (!alg_simple) return "(1.12) algebraic simplicity";
  if (!transversal) return "(1.14) transversality";
  if (!nonresonant) return "(1.15) nonresonance";
  if (!dissipative) return "(1.18) dissipativity R0*R1<1";
  return nullptr;
}

HopfReport full_report(const SystemSpec& spec, const HopfOptions& opts) {
  validate_or_throw(spec);
  const CrossingResult crossing = locate_crossing(spec, opts);

  HopfReport report;
  report.lambda0 = crossing.lambda0;
  report.omega0 = crossing.omega0;
  report.spectrum = crossing.spectrum;
  report.k_max = opts.k_max;

  SpectralSolver solver(spec, crossing.lambda0, opts.ode_rtol);
  const Complex mu(0.0, crossing.omega0);
  {
    const auto ns = solver.boundary_null_space(mu);
    report.geo_simple =
        ns.dimension == 1 && crossing.on_axis.size() <= 2;
    report.geo_sigma_min = ns.sigma_min;
    report.geo_sigma_next = ns.sigma_next;
  }

  if (report.geo_simple) {
    GridFn v = solver.eigenfunction(mu, opts.grid_n);
    GridFn w = solver.adjoint_eigenfunction(std::conj(mu), opts.grid_n);
    std::tie(report.alg_simple, report.pairing) = check_algebraic(v, w);
    if (report.alg_simple) {
      auto [vn, wn, pairing] =
          normalize_pair(std::move(v), std::move(w), spec.anchor);
      report.pair.mu = mu;
      report.pair.v = std::move(vn);
      report.pair.w = std::move(wn);
      report.pair.pairing = pairing;

      report.alpha = transversality_alpha(spec, report.pair, crossing.lambda0,
                                          opts.ode_rtol);
      report.alpha_fd =
          eigenvalue_slope_fd(spec, mu, crossing.lambda0, 1e-4, opts.ode_rtol);
      report.transversal = std::abs(report.alpha) > 1e-10;
    }
  }

  const auto nonres = check_nonresonance(spec, crossing.lambda0,
                                         crossing.omega0, opts.k_max,
                                         opts.ode_rtol);
  report.nonresonant = nonres.ok;
  report.nearest_resonance = nonres.nearest_distance;

  CharContext ctx(spec, crossing.lambda0);
  const auto diss = ctx.dissipativity();
  report.dissipative = diss.product_ok;
  report.R0 = diss.R0;
  report.R1 = diss.R1;
  return report;
}

}  // namespace hyperhopf
