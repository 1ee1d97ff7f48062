#pragma once

#include "hyperhopf/spectral.hpp"

namespace hyperhopf {

struct HopfOptions {
  double lambda_lo = 0.0;
  double lambda_hi = 2.0;
  Rect region{-3.0, 1.0, -12.0, 12.0};
  int k_max = 20;
  int grid_n = 512;
  double ode_rtol = 1e-10;
  double bisect_tol = 1e-12;  // on lambda
};

class NoCrossingError : public Error {
 public:
  using Error::Error;
};

struct CrossingResult {
  double lambda0 = 0;
  double omega0 = 0;
  Complex mu0;                      // the crossing eigenvalue (Im > 0)
  std::vector<EigenPair> spectrum;  // full spectrum in the region at lambda0
  std::vector<Complex> on_axis;     // eigenvalues with |Re| < 1e-8 at lambda0;
                                    // more than the conjugate pair means
                                    // simultaneous crossings (fails (1.11))
};

/// Bisection in lambda on the real part of the rightmost eigenvalue branch,
/// tracked by Newton continuation between lambda samples. Requires every
/// eigenvalue in the region at lambda_lo to have a negative real part.
CrossingResult locate_crossing(const SystemSpec& spec, const HopfOptions& opts);

/// Newton-track the eigenvalue branch through mu_from from lambda_from to
/// lambda_to; steps are capped and guarded against branch jumps.
Complex track_eigenvalue(const SystemSpec& spec, double lambda_from,
                         Complex mu_from, double lambda_to, double ode_rtol);

/// True iff the boundary null space at mu = i*omega0 is one-dimensional.
bool check_geometric(const SystemSpec& spec, double lambda0, double omega0,
                     double ode_rtol = 1e-10);

/// Pairing-based algebraic simplicity; the pairing is the raw (pre-
/// normalization) value.
std::pair<bool, Complex> check_algebraic(const GridFn& v, const GridFn& w);

/// alpha = (1/2) Re sum_j int_0^1 (d_lambda a_j v_j' +
///         sum_k d_lambda d_{u_k} b_j v_k) conj(w_j) dx
/// with v' taken from the eigenvalue ODE. `pair` must be normalized.
double transversality_alpha(const SystemSpec& spec, const EigenPair& pair,
                            double lambda0, double ode_rtol = 1e-10);

/// Finite-difference crossing-speed oracle: Re mu(lambda0 +/- h) slope.
double eigenvalue_slope_fd(const SystemSpec& spec, Complex mu0, double lambda0,
                           double h = 1e-4, double ode_rtol = 1e-10);

struct NonresonanceResult {
  bool ok = true;
  double nearest_distance = std::numeric_limits<double>::infinity();
  int worst_k = 0;
};

/// Checks that i*k*omega0 is not an eigenvalue for k = 0, +/-2, ..., +/-k_max
/// by local winding searches around each candidate point.
NonresonanceResult check_nonresonance(const SystemSpec& spec, double lambda0,
                                      double omega0, int k_max,
                                      double ode_rtol = 1e-10);

struct HopfReport {
  double lambda0 = 0;
  double omega0 = 0;
  bool geo_simple = false;
  double geo_sigma_min = 0, geo_sigma_next = 0;
  bool alg_simple = false;
  Complex pairing{};
  double alpha = 0;
  double alpha_fd = 0;
  bool transversal = false;
  bool nonresonant = false;
  int k_max = 0;
  double nearest_resonance = 0;
  bool dissipative = false;
  double R0 = 0, R1 = 0;
  EigenPair pair;                 // normalized (anchor + pairing = 2)
  std::vector<EigenPair> spectrum;  // at lambda0

  bool all_pass() const {
    return geo_simple && alg_simple && transversal && nonresonant &&
           dissipative;
  }
  const char* first_failure() const;  // hypothesis tag or nullptr
};

/// Locate the crossing and run every hypothesis check.
HopfReport full_report(const SystemSpec& spec, const HopfOptions& opts);

}  // namespace hyperhopf
