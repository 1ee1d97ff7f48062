#include "hyperhopf/model.hpp"

#include <cmath>
#include <sstream>

namespace hyperhopf {

using expr::Bindings;
using expr::ExprAst;

std::vector<std::string> SystemSpec::speed_variables() const {
  std::vector<std::string> v = {"x", "lambda"};
  for (auto& [name, _] : params) v.push_back(name);
  return v;
}

std::vector<std::string> SystemSpec::rhs_variables() const {
  std::vector<std::string> v = speed_variables();
  for (int j = 1; j <= n; ++j) v.push_back("u" + std::to_string(j));
  return v;
}

void check_structure(const SystemSpec& spec) {
  if (spec.n < 1) throw ConfigError("system: n must be positive");
  if (spec.n > 64) throw ConfigError("system: n larger than supported (64)");
  if (spec.m < 1 || spec.m > spec.n)
    throw ConfigError("system: m must satisfy 1 <= m <= n");
  if (static_cast<int>(spec.speeds.size()) != spec.n)
    throw ConfigError("system: expected n speed expressions");
  if (static_cast<int>(spec.rhs.size()) != spec.n)
    throw ConfigError("system: expected n rhs expressions");
  if (static_cast<int>(spec.reflection.size()) != spec.n)
    throw ConfigError("system: reflection matrix must be n x n");
  for (int j = 0; j < spec.n; ++j) {
    if (static_cast<int>(spec.reflection[j].size()) != spec.n)
      throw ConfigError("system: reflection matrix must be n x n");
    for (int k = 0; k < spec.n; ++k) {
      const bool upper_block = j < spec.m && k >= spec.m;
      const bool lower_block = j >= spec.m && k < spec.m;
      if (!upper_block && !lower_block && spec.reflection[j][k] != 0.0) {
        std::ostringstream os;
        os << "system: reflection[" << j + 1 << "][" << k + 1
           << "] must be exactly zero (only the blocks j<=m,k>m and "
              "j>m,k<=m may be nonzero)";
        throw ConfigError(os.str());
      }
    }
  }
  if (spec.anchor) {
    if (spec.anchor->component < 1 || spec.anchor->component > spec.n)
      throw ConfigError("system: anchor component out of range");
    if (spec.anchor->x < 0 || spec.anchor->x > 1)
      throw ConfigError("system: anchor position must lie in [0,1]");
  }
}

ValidationReport validate(const SystemSpec& spec, int grid_points) {
  check_structure(spec);
  if (grid_points < 16)
    throw ConfigError("validate: grid_points must be >= 16");

  ValidationReport report;
  auto fail = [&](ValidationIssue issue) {
    report.ok = false;
    report.issues.push_back(std::move(issue));
  };

  Bindings env;
  for (auto& [name, value] : spec.params) env.set(name, value);
  env.set("lambda", 0.0);
  for (int j = 1; j <= spec.n; ++j) env.set("u" + std::to_string(j), 0.0);

  const double tol = 1e-12;
  std::vector<double> sign(spec.n, 0.0);
  for (int i = 0; i <= grid_points && report.ok; ++i) {
    const double x = static_cast<double>(i) / grid_points;
    env.set("x", x);
    env.set("lambda", 0.0);
    std::vector<double> a(spec.n);
    for (int j = 0; j < spec.n; ++j) a[j] = spec.speeds[j].evaluate(env);

    for (int j = 0; j < spec.n; ++j) {
      if (std::abs(a[j]) <= tol) {
        fail({"(1.5)", "a_" + std::to_string(j + 1) + "(x,0) vanishes", j + 1,
              0, x, 0});
        break;
      }
      if (sign[j] == 0.0) sign[j] = a[j] > 0 ? 1.0 : -1.0;
      if (a[j] * sign[j] < 0) {
        fail({"sign", "a_" + std::to_string(j + 1) + "(.,0) changes sign",
              j + 1, 0, x, 0});
        break;
      }
    }
    if (!report.ok) break;
    for (int j = 0; j < spec.n && report.ok; ++j)
      for (int k = j + 1; k < spec.n; ++k)
        if (std::abs(a[j] - a[k]) <= tol) {
          fail({"(1.6)",
                "a_" + std::to_string(j + 1) + "(x,0) = a_" +
                    std::to_string(k + 1) + "(x,0)",
                j + 1, k + 1, x, 0});
          break;
        }
    if (!report.ok) break;

    // b_j(x, lambda, 0) = 0 for sampled lambda
    static constexpr double kLambdaSamples[] = {0.0, 0.5, -0.5, 1.0, -1.0};
    for (double lam : kLambdaSamples) {
      env.set("lambda", lam);
      for (int j = 0; j < spec.n; ++j) {
        const double b0 = spec.rhs[j].evaluate(env);
        if (std::abs(b0) > tol) {
          fail({"(1.7)",
                "b_" + std::to_string(j + 1) + "(x,lambda,0) = " +
                    std::to_string(b0) + " != 0",
                j + 1, 0, x, lam});
          break;
        }
      }
      if (!report.ok) break;
    }
  }
  return report;
}

void validate_or_throw(const SystemSpec& spec, int grid_points) {
  const ValidationReport r = validate(spec, grid_points);
  if (!r.ok) {
    const ValidationIssue& issue = r.issues.front();
    std::ostringstream os;
    os << "hypothesis " << issue.hypothesis << " violated: " << issue.message
       << " at x=" << issue.x;
    if (issue.hypothesis == "(1.7)") os << ", lambda=" << issue.lambda;
    throw HypothesisError(os.str());
  }
}

SystemSpec builtin_example(double gamma) {
  SystemSpec spec;
  spec.n = 2;
  spec.m = 1;
  spec.params["gamma"] = gamma;
  const auto sv = spec.speed_variables();
  const auto rv = spec.rhs_variables();
  spec.speeds = {expr::parse("-1", sv), expr::parse("1", sv)};
  spec.rhs = {expr::parse("lambda*u1 - u2 + gamma*u1^3", rv),
              expr::parse("0", rv)};
  spec.reflection = {{0.0, 0.0}, {1.0, 0.0}};
  spec.anchor = Anchor{2, 0.0};
  check_structure(spec);
  return spec;
}

// ---------------------------------------------------------------------------

namespace {
// slots shared by all compiled derivative expressions: x, lambda, u1..un
std::vector<std::string> tensor_slots(int n) {
  std::vector<std::string> s = {"x", "lambda"};
  for (int j = 1; j <= n; ++j) s.push_back("u" + std::to_string(j));
  return s;
}
}  // namespace

DerivTable::DerivTable(const SystemSpec& spec) : n_(spec.n) {
  const int n = n_;
  Bindings fold;
  for (auto& [name, value] : spec.params) fold.set(name, value);
  const auto slots = tensor_slots(n);

  auto u_name = [](int k) { return "u" + std::to_string(k + 1); };

  pair_index_.assign(n * n, -1);
  triple_index_.assign(n * n * n, -1);

  for (int j = 0; j < n; ++j) {
    std::vector<ExprAst> d1(n);
    for (int k = 0; k < n; ++k) {
      d1[k] = spec.rhs[j].differentiate(u_name(k));
      bjk_.emplace_back(d1[k], slots, fold);
      dlam_bjk_.emplace_back(d1[k].differentiate("lambda"), slots, fold);
    }
    // only ordered index tuples are differentiated; symmetry is exact
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l) {
        ExprAst d2 = d1[k].differentiate(u_name(l));
        bjkl_.emplace_back(d2, slots, fold);
        for (int r = l; r < n; ++r)
          bjklr_.emplace_back(d2.differentiate(u_name(r)), slots, fold);
      }
    dlam_a_.emplace_back(spec.speeds[j].differentiate("lambda"), slots, fold);
  }
  // ordered-tuple offsets within one j block
  int pos = 0, tpos = 0;
  for (int k = 0; k < n; ++k)
    for (int l = k; l < n; ++l) {
      pair_index_[k * n + l] = pos++;
      for (int r = l; r < n; ++r) triple_index_[(k * n + l) * n + r] = tpos++;
    }
}

DerivTensors DerivTable::at(double x, double lambda) const {
  const int n = n_;
  DerivTensors t;
  t.n = n;
  t.bjk.assign(n * n, 0.0);
  t.bjkl.assign(n * n * n, 0.0);
  t.bjklr.assign(n * n * n * n, 0.0);
  t.dlam_a.assign(n, 0.0);
  t.dlam_bjk.assign(n * n, 0.0);

  std::vector<double> slots(2 + n, 0.0);
  slots[0] = x;
  slots[1] = lambda;

  const int pairs_per_j = n * (n + 1) / 2;
  const int triples_per_j = n * (n + 1) * (n + 2) / 6;

  for (int j = 0; j < n; ++j) {
    t.dlam_a[j] = dlam_a_[j](slots.data());
    for (int k = 0; k < n; ++k) {
      t.bjk[j * n + k] = bjk_[j * n + k](slots.data());
      t.dlam_bjk[j * n + k] = dlam_bjk_[j * n + k](slots.data());
    }
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l) {
        const double v =
            bjkl_[j * pairs_per_j + pair_index_[k * n + l]](slots.data());
        t.bjkl[(j * n + k) * n + l] = v;
        t.bjkl[(j * n + l) * n + k] = v;
        for (int r = l; r < n; ++r) {
          const double w = bjklr_[j * triples_per_j +
                                  triple_index_[(k * n + l) * n + r]](
              slots.data());
          const int idx[3] = {k, l, r};
          for (int p0 = 0; p0 < 3; ++p0)
            for (int p1 = 0; p1 < 3; ++p1)
              for (int p2 = 0; p2 < 3; ++p2) {
                if (p0 == p1 || p0 == p2 || p1 == p2) continue;
                t.bjklr[((j * n + idx[p0]) * n + idx[p1]) * n + idx[p2]] = w;
              }
        }
      }
  }
  return t;
}

DerivTensors deriv_tensors(const SystemSpec& spec, double x, double lambda) {
  return DerivTable(spec).at(x, lambda);
}

}  // namespace hyperhopf
