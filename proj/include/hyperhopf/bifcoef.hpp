#pragma once

#include "hyperhopf/hopf.hpp"

namespace hyperhopf {

class ResonanceError : public Error {
 public:
  using Error::Error;
};

struct BifAux {
  GridFn y;  // second-harmonic response (complex)
  GridFn z;  // mean response (real up to round-off)
};

enum class Direction { Supercritical, Subcritical, Degenerate };

const char* to_string(Direction d);

struct BifurcationResult {
  double lambda0 = 0;
  double omega0 = 0;
  double alpha = 0;
  double beta = 0;
  double curvature = 0;  // lambda''(0) = beta/alpha
  Direction direction = Direction::Degenerate;
  int bifurcating_side = 0;  // sign(alpha*beta): orbits for
                             // lambda0 + side*|offset|
  GridFn first_order_orbit;  // v0; orbit ~ eps*(Re v0 cos - Im v0 sin)
  double orbit_scale = 0;    // max_{x,j} |v0_j(x)|
  BifAux aux;

  /// Amplitude law eps(lambda0 + side*offset) = sqrt(2*alpha*offset/beta).
  double eps_of_offset(double offset) const;
  /// Predicted steady probe amplitude at the first-order level.
  double predicted_amplitude(double offset) const {
    return eps_of_offset(offset) * orbit_scale;
  }
};

/// Solve the linear nonhomogeneous two-point problem
///   a_j(x,lambda0) g_j' - shift*g_j + sum_k b_jk(x,lambda0) g_k = forcing_j
/// with the reflection boundary conditions, by shooting: a particular
/// solution plus fundamental columns fitted through the boundary system.
/// Throws ResonanceError when the boundary system is singular (shift/i is an
/// eigenvalue).
GridFn solve_harmonic_bvp(const SystemSpec& spec, double lambda0,
                          Complex shift,
                          const std::function<void(double, Complex*)>& forcing,
                          int N, double ode_rtol = 1e-10);

/// Second-harmonic problem with shift 2*i*omega0 and forcing
///   -(1/4) sum_{k,l} b_jkl v_k v_l.
GridFn solve_y_bvp(const SystemSpec& spec, const EigenPair& pair,
                   double lambda0, double omega0, int N,
                   double ode_rtol = 1e-10);

/// Mean problem with zero shift and forcing -(1/2) sum_{k,l} b_jkl v_k
/// conj(v_l); the solution is real up to round-off.
GridFn solve_z_bvp(const SystemSpec& spec, const EigenPair& pair,
                   double lambda0, int N, double ode_rtol = 1e-10);

/// beta = -Re int_0^1 ( (1/8) sum b_jklr v_k v_l conj(v_r) conj(w_j)
///                      + sum b_jkl (y_k conj(v_l) + z_k v_l) conj(w_j) ) dx
/// with tensors evaluated at (x, lambda0, u=0). `pair` must be normalized.
double beta_coefficient(const SystemSpec& spec, const EigenPair& pair,
                        const BifAux& aux, double lambda0);

/// Assemble alpha, beta, curvature, direction and the first-order orbit from
/// a passing hypothesis report. Doubles the grid until beta settles to 1e-8
/// relative.
BifurcationResult bifurcation_result(const SystemSpec& spec,
                                     const HopfReport& report,
                                     double ode_rtol = 1e-10);

}  // namespace hyperhopf
