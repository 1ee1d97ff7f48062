#pragma once

#include <functional>
#include <variant>

#include "hyperhopf/bifcoef.hpp"
#include "hyperhopf/charfield.hpp"

namespace hyperhopf {

class BlowUpError : public Error {
 public:
  BlowUpError(double time, const std::string& what)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Orbit-seeded initial data: eps * Re v0(x).
struct SeedOrbit {
  double epsilon = 0;
  GridFn v0;
  double omega0 = 0;
};

struct SimConfig {
  SystemSpec spec;
  double lambda = 0;
  double dx = 1.0 / 400;
  double cfl = 0.9;
  double dt = 0;     // 0: derived as cfl*dx/max|a|
  double t_end = 0;
  std::variant<std::vector<expr::ExprAst>, SeedOrbit> initial;
  std::vector<double> probes;
  double measure_window = 0;  // 0: trailing 25% of t_end
  /// Optional additive source g_j(x, t) for manufactured-solution tests.
  std::function<double(int j, double x, double t)> source;
};

struct Measurement {
  double amplitude = 0;  // half peak-to-peak over the trailing window
  double frequency = 0;  // rad/time, from mean zero-crossing spacing
  double rate = 0;       // log-linear envelope slope
  double drift = 0;      // relative amplitude change across the window
  bool converged = false;
};

struct TimeSeries {
  double dt = 0;
  int n = 0;
  std::vector<double> probe_x;                 // actual (grid-snapped) probes
  std::vector<std::vector<double>> samples;    // [probe*n + j][step]
  std::vector<Measurement> measurements;       // [probe*n + j]
  size_t sample_count() const {
    return samples.empty() ? 0 : samples[0].size();
  }
};

/// Semi-Lagrangian scheme along exact characteristics with cubic spatial
/// interpolation and trapezoidal source quadrature. Marches the time
/// orientation in which the reflection conditions close the inflow traces
/// (the sign layout of the speeds decides it); linear modes then evolve as
/// exp(-orientation * mu * t).
class Simulator {
 public:
  explicit Simulator(SimConfig cfg);

  int orientation() const { return sigma_; }
  double dt() const { return dt_; }
  double time() const { return time_; }
  int cells() const { return cells_; }
  const std::vector<double>& state() const { return u_; }
  double value(int node, int j) const { return u_[node * n_ + j]; }

  void step();
  TimeSeries run();

 private:
  void resolve_boundary(int j, int node, std::vector<double>& unew,
                        const std::vector<double>& upred) const;

  SimConfig cfg_;
  CharContext ctx_;
  int n_, m_;
  int sigma_ = 1;
  int cells_ = 0;
  double dx_ = 0, dt_ = 0;
  double time_ = 0;
  long step_index_ = 0;
  std::vector<double> u_;  // node-major state

  struct NodePlan {
    bool crossing = false;
    // interior foot
    double foot = 0;
    int stencil_base = 0;
    double w[4] = {0, 0, 0, 0};
    double cfac = 1;     // decay over the traced segment
    // boundary crossing
    int boundary_node = 0;  // 0 or cells_
    double tb = 0;          // crossing time as a fraction of dt
  };
  std::vector<NodePlan> plan_;  // [node*n + j]
  std::vector<int> pass_c_order_;
  mutable std::vector<double> scratch_u_;
};

Measurement measure_signal(const std::vector<double>& signal, double dt,
                           double window);

struct AmplitudeLawRow {
  double offset = 0;
  double measured_amplitude = 0;
  double predicted_amplitude = 0;
  double measured_frequency = 0;
  double drift = 0;
  bool converged = false;
};

struct AmplitudeLawTable {
  std::vector<AmplitudeLawRow> rows;
  double fitted_exponent = 0;
};

struct SweepOptions {
  double dx = 1.0 / 400;
  double cfl = 0.9;
  double t_end = 0;  // 0: derived from the offset and omega0
  int jobs = 1;
};

/// For each offset, run an orbit-seeded simulation on the bifurcating side
/// and compare the steady amplitude and frequency with the first-order
/// prediction.
AmplitudeLawTable measure_amplitude_law(const SystemSpec& spec,
                                        const BifurcationResult& result,
                                        const std::vector<double>& offsets,
                                        const SweepOptions& opts = {});

}  // namespace hyperhopf
