#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hyperhopf/expr.hpp"

namespace hyperhopf {

/// Component/point at which the eigenfunction is pinned to 1 before the
/// adjoint normalization. Component index is 1-based as in the equations.
struct Anchor {
  int component = 1;
  double x = 0.0;
};

/// Problem datum for
///   d_t u_j + a_j(x,lambda) d_x u_j + b_j(x,lambda,u) = 0  on (0,1),
/// with reflection boundary conditions
///   u_j(0) = sum_{k>m} r_jk u_k(0)   (j <= m),
///   u_j(1) = sum_{k<=m} r_jk u_k(1)  (j > m).
/// `speeds` are expressions in (x, lambda), `rhs` in (x, lambda, u1..un);
/// named parameters are substituted at evaluation time.
struct SystemSpec {
  int n = 0;
  int m = 0;
  std::vector<expr::ExprAst> speeds;            // a_j
  std::vector<expr::ExprAst> rhs;               // b_j
  std::vector<std::vector<double>> reflection;  // n x n, r_jk
  std::map<std::string, double> params;
  std::optional<Anchor> anchor;

  std::vector<std::string> speed_variables() const;  // x, lambda, params
  std::vector<std::string> rhs_variables() const;    // + u1..un
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Shape and reflection-block structure checks; throws ConfigError.
/// Entries r_jk outside the two permitted blocks must be exactly zero.
void check_structure(const SystemSpec& spec);

struct ValidationIssue {
  std::string hypothesis;  // "(1.5)", "(1.6)", "(1.7)" or "sign"
  std::string message;
  int j = 0;  // 1-based component
  int k = 0;
  double x = 0;
  double lambda = 0;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;
};

/// Pointwise hypothesis checks on a uniform x-grid:
///   a_j(x,0) != 0, a_j(x,0) != a_k(x,0) for j != k, b_j(x,lambda,0) = 0 for
///   sampled lambda, and a constant sign of a_j(.,0).
ValidationReport validate(const SystemSpec& spec, int grid_points = 256);

class HypothesisError : public Error {
 public:
  using Error::Error;
};

void validate_or_throw(const SystemSpec& spec, int grid_points = 256);

/// Two-speed reflection system with a cubic nonlinearity:
///   n=2, m=1, a1=-1, a2=+1, b1 = lambda*u1 - u2 + gamma*u1^3, b2 = 0,
///   r12 = 0, r21 = 1, eigenfunction anchored at v_2(0) = 1.
SystemSpec builtin_example(double gamma);

/// Coefficient derivative tensors at (x, lambda, u=0).
/// bjkl/bjklr are exactly symmetric in the u-indices by construction.
struct DerivTensors {
  int n = 0;
  std::vector<double> bjk;       // [j*n + k]
  std::vector<double> bjkl;      // [(j*n + k)*n + l]
  std::vector<double> bjklr;     // [((j*n + k)*n + l)*n + r]
  std::vector<double> dlam_a;    // [j]
  std::vector<double> dlam_bjk;  // [j*n + k]

  double b2(int j, int k, int l) const { return bjkl[(j * n + k) * n + l]; }
  double b3(int j, int k, int l, int r) const {
    return bjklr[((j * n + k) * n + l) * n + r];
  }
};

/// Caches the symbolic derivatives of a spec's coefficients and evaluates
/// them at arbitrary (x, lambda). Immutable after construction.
class DerivTable {
 public:
  explicit DerivTable(const SystemSpec& spec);
  DerivTensors at(double x, double lambda) const;
  int n() const { return n_; }

 private:
  int n_;
  std::vector<expr::CompiledExpr> bjk_;        // n*n
  std::vector<expr::CompiledExpr> bjkl_;       // ordered k<=l, mirrored on eval
  std::vector<expr::CompiledExpr> bjklr_;      // ordered k<=l<=r
  std::vector<expr::CompiledExpr> dlam_a_;     // n
  std::vector<expr::CompiledExpr> dlam_bjk_;   // n*n
  std::vector<int> pair_index_;                // (k,l) ordered -> storage
  std::vector<int> triple_index_;
};

DerivTensors deriv_tensors(const SystemSpec& spec, double x,
                           double lambda = 0.0);

}  // namespace hyperhopf
