#pragma once

#include <Eigen/Dense>
#include <optional>

#include "hyperhopf/charfield.hpp"
#include "hyperhopf/model.hpp"

namespace hyperhopf {

/// N+1 uniform samples on [0,1] of an n-vector of complex values.
struct GridFn {
  int n = 0;
  int N = 0;
  std::vector<Complex> data;  // sample-major: data[i*n + j]

  GridFn() = default;
  GridFn(int n_, int N_) : n(n_), N(N_), data((N_ + 1) * n_, Complex{}) {}

  Complex& at(int i, int j) { return data[i * n + j]; }
  Complex at(int i, int j) const { return data[i * n + j]; }
  double x(int i) const { return static_cast<double>(i) / N; }

  /// Cubic interpolation of component j at arbitrary x in [0,1].
  Complex interp(double x, int j) const;

  double max_abs() const;
  double l2_norm() const;  // Simpson of |.|^2, square-rooted
  /// sum_j int_0^1 f_j conj(g_j) dx by composite Simpson.
  static Complex pairing(const GridFn& f, const GridFn& g);
};

struct EigenPair {
  Complex mu;
  GridFn v;  // eigenfunction of the direct problem
  GridFn w;  // adjoint eigenfunction at nu = conj(mu)
  int winding_multiplicity = 1;
  Complex pairing{};  // value before normalization
};

struct Rect {
  double re_lo = 0, re_hi = 0, im_lo = 0, im_hi = 0;
  double width() const { return re_hi - re_lo; }
  double height() const { return im_hi - im_lo; }
  Complex center() const {
    return {0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi)};
  }
  bool contains(Complex z, double slack = 0.0) const {
    return z.real() >= re_lo - slack && z.real() <= re_hi + slack &&
           z.imag() >= im_lo - slack && z.imag() <= im_hi + slack;
  }
};

struct SpectrumQuery {
  double lambda = 0;
  Rect region;
  int max_count = 128;
  double newton_tol = 1e-9;  // on the rescaled determinant; sits above the
                             // ODE-integration noise floor
  double ode_rtol = 1e-10;
};

class BoundaryTooCloseError : public Error {
 public:
  using Error::Error;
};
class NotSimpleError : public Error {
 public:
  using Error::Error;
};

/// Shooting machinery for the boundary eigenvalue problem
///   a_j v_j' + sum_k d_{u_k} b_j(x,lambda,0) v_k = mu v_j
/// with reflection boundary conditions, and its adjoint
///   -(a_j w_j)' + sum_k d_{u_j} b_k(x,lambda,0) w_k = nu w_j.
/// All evaluation paths are pure; one instance per parameter value.
class SpectralSolver {
 public:
  SpectralSolver(const SystemSpec& spec, double lambda,
                 double ode_rtol = 1e-10);

  const SystemSpec& spec() const { return spec_; }
  double lambda() const { return lambda_; }

  /// Fundamental solution matrix at x=1 (columns: solutions with identity
  /// initial data at x=0); entries are holomorphic in mu.
  Eigen::MatrixXcd fundamental_matrix(Complex mu) const;

  /// Boundary-condition matrix applied to the fundamental columns: the
  /// m "left" rows and n-m "right" rows; singular exactly at eigenvalues.
  Eigen::MatrixXcd boundary_matrix(Complex mu) const;
  Eigen::MatrixXcd adjoint_boundary_matrix(Complex nu) const;

  /// det(boundary_matrix) times exp(-mu*K) with the real constant
  /// K = sum_j int_0^1 d eta / a_j; holomorphic, zero exactly at eigenvalues.
  Complex char_determinant(Complex mu) const;
  Complex determinant_derivative(Complex mu) const;  // central difference

  struct Winding {
    int count = 0;          // zeros (with multiplicity) inside
    double integral = 0;    // (1/2pi) contour integral of d arg
    double min_abs = 0;     // min |det| seen on the boundary
  };
  /// Argument-principle count over the rectangle boundary with adaptive
  /// phase tracking; throws BoundaryTooCloseError when |det| dips under
  /// the clearance on the contour.
  Winding winding_number(const Rect& rect) const;

  /// Newton refinement of a determinant zero; returns the refined value or
  /// nothing when the iteration leaves the trust region / stalls.
  std::optional<Complex> refine_zero(Complex seed, double tol,
                                     double trust_radius) const;

  /// All eigenvalues in the query rectangle by recursive subdivision;
  /// eigenfunction slots are left empty. Deterministic order (Re, Im).
  std::vector<EigenPair> find_eigenvalues(const SpectrumQuery& query) const;

  struct NullSpace {
    int dimension = 0;
    double sigma_min = 0;
    double sigma_next = 0;           // second-smallest singular value
    Eigen::VectorXcd direction;      // right-singular vector for sigma_min
  };
  NullSpace boundary_null_space(Complex mu) const;
  NullSpace adjoint_boundary_null_space(Complex nu) const;

  /// Eigenfunction (resp. adjoint eigenfunction) sampled on N+1 points.
  /// Throws NotSimpleError unless the boundary null space is 1-dimensional.
  GridFn eigenfunction(Complex mu, int N) const;
  GridFn adjoint_eigenfunction(Complex nu, int N) const;

  /// Derivative of a sampled solution of the direct ODE, from the ODE itself.
  GridFn ode_derivative(const GridFn& v, Complex mu) const;

  double speed(int j, double x) const;
  double coupling(int j, int k, double x) const;     // d_{u_k} b_j
  double speed_dx(int j, double x) const;            // d_x a_j

 private:
  void direct_rhs(Complex mu, double x, const std::vector<Complex>& v,
                  std::vector<Complex>& dv) const;
  void adjoint_rhs(Complex nu, double x, const std::vector<Complex>& w,
                   std::vector<Complex>& dw) const;
  void find_in_rect(const Rect& rect, const SpectrumQuery& query, int depth,
                    std::vector<std::pair<Complex, int>>& out) const;
  void find_in_rect_counted(const Rect& rect, const Winding& w,
                            const SpectrumQuery& query, int depth,
                            std::vector<std::pair<Complex, int>>& out) const;

  SystemSpec spec_;
  double lambda_;
  OdeOptions ode_;
  double rescale_k_ = 0;  // K in the determinant prefactor
  std::vector<expr::CompiledExpr> a_;      // slots: x
  std::vector<expr::CompiledExpr> da_dx_;  // slots: x
  std::vector<expr::CompiledExpr> bjk_;    // slots: x (u=0, lambda folded)
};

/// Rescale v so the anchor component equals 1 (or the max-modulus sample when
/// no anchor is designated), then rescale w so <v, w> = 2. Returns the
/// pairing value before normalization; throws NotSimpleError when the pairing
/// is numerically zero (algebraic simplicity failure).
std::tuple<GridFn, GridFn, Complex> normalize_pair(
    GridFn v, GridFn w, const std::optional<Anchor>& anchor);

}  // namespace hyperhopf
