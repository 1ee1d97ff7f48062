#include "hyperhopf/mocsim.hpp"

#include <algorithm>
#include <cmath>
#include <future>

namespace hyperhopf {

namespace {

int orientation_of(const SystemSpec& spec, const CharContext& ctx) {
  // The reflection conditions assign u_j(0) for j<=m and u_j(1) for j>m.
  // Those are inflow traces exactly when the first block moves rightward in
  // simulation time, i.e. orientation*a_j > 0 for j<=m and < 0 for j>m.
  const double a0 = ctx.speed(0, 0.5);
  const int sigma = a0 > 0 ? 1 : -1;
  for (int j = 0; j < spec.n; ++j) {
    const double a = ctx.speed(j, 0.5);
    const bool first_block = j < spec.m;
    const bool ok = first_block ? sigma * a > 0 : sigma * a < 0;
    if (!ok)
      throw ConfigError(
          "simulation: speeds must have one sign on components 1..m and the "
          "opposite sign on m+1..n, otherwise the reflection conditions do "
          "not close the inflow boundary traces");
  }
  return sigma;
}

}  // namespace

Simulator::Simulator(SimConfig cfg)
    : cfg_(std::move(cfg)), ctx_(cfg_.spec, cfg_.lambda) {
  const SystemSpec& spec = cfg_.spec;
  n_ = spec.n;
  m_ = spec.m;

  const double inv_dx = 1.0 / cfg_.dx;
  cells_ = static_cast<int>(std::lround(inv_dx));
  if (cells_ < 8 || std::abs(inv_dx - cells_) > 1e-9 * cells_)
    throw ConfigError("simulation: dx must divide 1 exactly (dx = 1/M)");
  dx_ = 1.0 / cells_;

  sigma_ = orientation_of(spec, ctx_);

  double amax = 0;
  for (int j = 0; j < n_; ++j)
    for (int i = 0; i <= cells_; ++i)
      amax = std::max(amax, std::abs(ctx_.speed(j, i * dx_)));
  const double dt_cfl = cfg_.cfl * dx_ / amax;
  if (cfg_.dt == 0) {
    dt_ = dt_cfl;
  } else {
    if (cfg_.dt > dt_cfl * (1 + 1e-12))
      throw ConfigError("simulation: dt violates the CFL bound cfl*dx/max|a|");
    dt_ = cfg_.dt;
  }
  if (cfg_.t_end <= 0) throw ConfigError("simulation: t_end must be positive");

  // initial state
  u_.assign((cells_ + 1) * n_, 0.0);
  if (auto* exprs = std::get_if<std::vector<expr::ExprAst>>(&cfg_.initial)) {
    if (static_cast<int>(exprs->size()) != n_)
      throw ConfigError("simulation: need one initial expression per component");
    expr::Bindings env;
    for (auto& [k, v] : spec.params) env.set(k, v);
    env.set("lambda", cfg_.lambda);
    for (int i = 0; i <= cells_; ++i) {
      env.set("x", i * dx_);
      for (int j = 0; j < n_; ++j)
        u_[i * n_ + j] = (*exprs)[j].evaluate(env);
    }
  } else {
    const SeedOrbit& seed = std::get<SeedOrbit>(cfg_.initial);
    for (int i = 0; i <= cells_; ++i)
      for (int j = 0; j < n_; ++j)
        u_[i * n_ + j] =
            seed.epsilon * seed.v0.interp(i * dx_, j).real();
  }

  // per-(node, component) characteristic plan; time-independent
  plan_.assign((cells_ + 1) * n_, NodePlan{});
  for (int j = 0; j < n_; ++j) {
    const double a_lo = ctx_.inv_speed_antiderivative(j, 0.0);
    const double a_hi = ctx_.inv_speed_antiderivative(j, 1.0);
    const bool increasing = a_hi > a_lo;
    const int inflow_node = sigma_ * ctx_.speed(j, 0.5) > 0 ? 0 : cells_;
    for (int i = 0; i <= cells_; ++i) {
      NodePlan& p = plan_[i * n_ + j];
      const double x = i * dx_;
      const double target =
          ctx_.inv_speed_antiderivative(j, x) - sigma_ * dt_;
      const bool inside = increasing ? (target >= a_lo && target <= a_hi)
                                     : (target <= a_lo && target >= a_hi);
      if (inside) {
        p.crossing = false;
        p.foot = ctx_.invert_inv_speed(j, target);
        p.cfac = ctx_.decay_factor(j, p.foot, x);
        p.stencil_base = cubic_stencil(cells_ + 1, 0.0, dx_, p.foot, p.w);
      } else {
        p.crossing = true;
        p.boundary_node = inflow_node;
        const double xb = inflow_node == 0 ? 0.0 : 1.0;
        // crossing time fraction: s_c = s + dt + sigma*(A(xb) - A(x))
        p.tb = 1.0 + sigma_ *
                         (ctx_.inv_speed_antiderivative(j, xb) -
                          ctx_.inv_speed_antiderivative(j, x)) /
                         dt_;
        p.tb = std::clamp(p.tb, 0.0, 1.0);
        p.cfac = ctx_.decay_factor(j, xb, x);
      }
    }
  }
  // pass C processes inflow-boundary nodes before interior crossing nodes
  pass_c_order_.clear();
  for (int j = 0; j < n_; ++j) {
    const int inflow_node = sigma_ * ctx_.speed(j, 0.5) > 0 ? 0 : cells_;
    pass_c_order_.push_back(inflow_node * n_ + j);
  }
  for (int i = 0; i <= cells_; ++i)
    for (int j = 0; j < n_; ++j) {
      const NodePlan& p = plan_[i * n_ + j];
      if (p.crossing && i != p.boundary_node)
        pass_c_order_.push_back(i * n_ + j);
    }
  scratch_u_.assign(n_, 0.0);
}

void Simulator::step() {
  const int nodes = cells_ + 1;
  const double s_now = time_;
  const double s_new = time_ + dt_;
  std::vector<double> upred(u_.size());
  std::vector<double> unew(u_.size());
  std::vector<double> ffoot(u_.size(), 0.0);

  auto source_term = [&](int j, double x, double t) {
    return cfg_.source ? cfg_.source(j, x, t) : 0.0;
  };

  // pass A: predictor (first order), interior feet
  std::vector<double> ufoot(n_);
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < n_; ++j) {
      const NodePlan& p = plan_[i * n_ + j];
      if (!p.crossing) {
        for (int k = 0; k < n_; ++k) {
          double acc = 0;
          for (int s = 0; s < 4; ++s)
            acc += p.w[s] * u_[(p.stencil_base + s) * n_ + k];
          ufoot[k] = acc;
        }
        const double f =
            sigma_ * ctx_.remainder(j, p.foot, ufoot.data()) +
            source_term(j, p.foot, s_now);
        ffoot[i * n_ + j] = f;
        upred[i * n_ + j] =
            p.cfac * (ufoot[j] + dt_ * f);
      } else {
        // reflection of the old state as the predictor value
        const int ib = p.boundary_node;
        double ub = 0;
        if (j < m_) {
          for (int k = m_; k < n_; ++k)
            ub += cfg_.spec.reflection[j][k] * u_[ib * n_ + k];
        } else {
          for (int k = 0; k < m_; ++k)
            ub += cfg_.spec.reflection[j][k] * u_[ib * n_ + k];
        }
        upred[i * n_ + j] = p.cfac * ub;
      }
    }
  }

  // pass B: trapezoidal corrector for interior feet
  for (int i = 0; i < nodes; ++i) {
    const double x = i * dx_;
    for (int j = 0; j < n_; ++j) {
      const NodePlan& p = plan_[i * n_ + j];
      if (p.crossing) continue;
      double foot_val = 0;
      for (int s = 0; s < 4; ++s)
        foot_val += p.w[s] * u_[(p.stencil_base + s) * n_ + j];
      const double fnode =
          sigma_ * ctx_.remainder(j, x, upred.data() + i * n_) +
          source_term(j, x, s_new);
      unew[i * n_ + j] =
          p.cfac * foot_val +
          0.5 * dt_ * (p.cfac * ffoot[i * n_ + j] + fnode);
    }
  }

  // pass C: boundary-crossing nodes (inflow-boundary nodes first)
  for (int idx : pass_c_order_)
    resolve_boundary(idx % n_, idx / n_, unew, upred);

  for (double v : unew)
    if (!std::isfinite(v))
      throw BlowUpError(s_new, "simulation blew up (non-finite state) at t=" +
                                   std::to_string(s_new));
  u_ = std::move(unew);
  time_ = s_new;
  ++step_index_;
}

void Simulator::resolve_boundary(int j, int node, std::vector<double>& unew,
                                 const std::vector<double>& upred) const {
  const NodePlan& p = plan_[node * n_ + j];
  const int ib = p.boundary_node;
  const double xb = ib == 0 ? 0.0 : 1.0;
  const double x = node * dx_;

  // inflow trace from the reflection condition at the crossing time,
  // with linear interpolation of the outflow traces in time
  auto boundary_component = [&](int k, double tb) {
    return (1.0 - tb) * u_[ib * n_ + k] + tb * unew[ib * n_ + k];
  };
  double ub = 0;
  if (j < m_) {
    for (int k = m_; k < n_; ++k)
      ub += cfg_.spec.reflection[j][k] * boundary_component(k, p.tb);
  } else {
    for (int k = 0; k < m_; ++k)
      ub += cfg_.spec.reflection[j][k] * boundary_component(k, p.tb);
  }

  if (node == ib) {
    // the boundary node itself: the reflection condition holds exactly
    unew[node * n_ + j] = ub;
    return;
  }

  // transport from (xb, s + tb*dt) to (x, s + dt)
  const double seg = (1.0 - p.tb) * dt_;
  for (int k = 0; k < n_; ++k) scratch_u_[k] = boundary_component(k, p.tb);
  scratch_u_[j] = ub;
  const double s_now = time_;
  const double fb =
      sigma_ * ctx_.remainder(j, xb, scratch_u_.data()) +
      (cfg_.source ? cfg_.source(j, xb, s_now + p.tb * dt_) : 0.0);
  const double fnode =
      sigma_ * ctx_.remainder(j, x, upred.data() + node * n_) +
      (cfg_.source ? cfg_.source(j, x, s_now + dt_) : 0.0);
  unew[node * n_ + j] = p.cfac * ub + 0.5 * seg * (p.cfac * fb + fnode);
}

TimeSeries Simulator::run() {
  TimeSeries ts;
  ts.dt = dt_;
  ts.n = n_;
  std::vector<int> probe_nodes;
  for (double px : cfg_.probes) {
    const int node =
        std::clamp(static_cast<int>(std::lround(px / dx_)), 0, cells_);
    probe_nodes.push_back(node);
    ts.probe_x.push_back(node * dx_);
  }
  const long nsteps = static_cast<long>(std::floor(cfg_.t_end / dt_));
  ts.samples.assign(probe_nodes.size() * n_, {});
  for (auto& s : ts.samples) s.reserve(nsteps + 1);

  auto record = [&]() {
    for (size_t pi = 0; pi < probe_nodes.size(); ++pi)
      for (int j = 0; j < n_; ++j)
        ts.samples[pi * n_ + j].push_back(value(probe_nodes[pi], j));
  };
  record();
  for (long k = 0; k < nsteps; ++k) {
    step();
    record();
  }

  const double window =
      cfg_.measure_window > 0 ? cfg_.measure_window : 0.25 * cfg_.t_end;
  for (auto& signal : ts.samples)
    ts.measurements.push_back(measure_signal(signal, dt_, window));
  return ts;
}

// ---------------------------------------------------------------------------
// measurements

Measurement measure_signal(const std::vector<double>& signal, double dt,
                           double window) {
  Measurement m;
  const size_t count = signal.size();
  if (count < 8) return m;
  const double t_end = (count - 1) * dt;
  const double t_start = std::max(0.0, t_end - window);
  const size_t i0 = static_cast<size_t>(std::ceil(t_start / dt));
  if (count - i0 < 8) return m;

  double lo = signal[i0], hi = signal[i0], mean = 0;
  for (size_t i = i0; i < count; ++i) {
    lo = std::min(lo, signal[i]);
    hi = std::max(hi, signal[i]);
    mean += signal[i];
  }
  mean /= static_cast<double>(count - i0);
  m.amplitude = 0.5 * (hi - lo);

  // zero crossings of the detrended signal, linearly interpolated
  std::vector<double> crossings;
  for (size_t i = i0 + 1; i < count; ++i) {
    const double a = signal[i - 1] - mean, b = signal[i] - mean;
    if (a == 0.0 || a * b >= 0) continue;
    const double frac = a / (a - b);
    crossings.push_back(((i - 1) + frac) * dt);
  }
  if (crossings.size() >= 4) {
    const double span = crossings.back() - crossings.front();
    const double spacing = span / (crossings.size() - 1);
    m.frequency = M_PI / spacing;  // two crossings per period
  }

  // envelope peaks of |detrended|, log-linear fit
  std::vector<double> pt, pv;
  for (size_t i = i0 + 1; i + 1 < count; ++i) {
    const double prev = std::abs(signal[i - 1] - mean);
    const double cur = std::abs(signal[i] - mean);
    const double next = std::abs(signal[i + 1] - mean);
    if (cur > prev && cur >= next && cur > 1e-14) {
      pt.push_back(i * dt);
      pv.push_back(std::log(cur));
    }
  }
  if (pt.size() >= 3) m.rate = fit_line(pt, pv).slope;

  // drift: amplitude of the first half of the window vs the second half
  const size_t mid = i0 + (count - i0) / 2;
  auto half_amp = [&](size_t a, size_t b) {
    double l = signal[a], h = signal[a];
    for (size_t i = a; i < b; ++i) {
      l = std::min(l, signal[i]);
      h = std::max(h, signal[i]);
    }
    return 0.5 * (h - l);
  };
  const double a1 = half_amp(i0, mid), a2 = half_amp(mid, count);
  m.drift = std::abs(a2 - a1) / std::max(0.5 * (a1 + a2), 1e-300);
  m.converged = m.drift <= 0.10;
  return m;
}

AmplitudeLawTable measure_amplitude_law(const SystemSpec& spec,
                                        const BifurcationResult& result,
                                        const std::vector<double>& offsets,
                                        const SweepOptions& opts) {
  if (offsets.empty())
    throw ConfigError("measure_amplitude_law: no offsets given");
  if (result.bifurcating_side == 0)
    throw NumericsError("measure_amplitude_law: degenerate bifurcation");

  // probe where the first-order orbit is largest
  const GridFn& v0 = result.first_order_orbit;
  int best_i = 0, best_j = 0;
  double best = -1;
  for (int i = 0; i <= v0.N; ++i)
    for (int j = 0; j < v0.n; ++j)
      if (std::abs(v0.at(i, j)) > best) {
        best = std::abs(v0.at(i, j));
        best_i = i;
        best_j = j;
      }
  const double probe_x = v0.x(best_i);
  const double period = 2 * M_PI / result.omega0;

  auto run_offset = [&](double offset) {
    SimConfig cfg;
    cfg.spec = spec;
    cfg.lambda = result.lambda0 + result.bifurcating_side * offset;
    cfg.dx = opts.dx;
    cfg.cfl = opts.cfl;
    const double settle = 6.0 / (2.0 * std::abs(result.alpha) * offset);
    cfg.t_end =
        opts.t_end > 0 ? opts.t_end : settle + 55.0 * period;
    cfg.measure_window = 50.0 * period;
    SeedOrbit seed;
    seed.epsilon = result.eps_of_offset(offset);
    seed.v0 = v0;
    seed.omega0 = result.omega0;
    cfg.initial = seed;
    cfg.probes = {probe_x};
    Simulator sim(std::move(cfg));
    TimeSeries ts = sim.run();
    AmplitudeLawRow row;
    row.offset = offset;
    const Measurement& m = ts.measurements[best_j];
    row.measured_amplitude = m.amplitude;
    row.measured_frequency = m.frequency;
    row.drift = m.drift;
    row.converged = m.converged;
    row.predicted_amplitude = result.predicted_amplitude(offset);
    return row;
  };

  AmplitudeLawTable table;
  table.rows.resize(offsets.size());
  const int jobs = std::max(1, opts.jobs);
  std::vector<std::future<AmplitudeLawRow>> futures;
  size_t next = 0;
  while (next < offsets.size() || !futures.empty()) {
    while (static_cast<int>(futures.size()) < jobs && next < offsets.size()) {
      futures.push_back(
          std::async(std::launch::async, run_offset, offsets[next]));
      ++next;
    }
    AmplitudeLawRow row = futures.front().get();
    futures.erase(futures.begin());
    for (size_t i = 0; i < offsets.size(); ++i)
      if (offsets[i] == row.offset) table.rows[i] = row;
  }

  std::vector<double> lx, ly;
  for (const AmplitudeLawRow& r : table.rows)
    if (r.converged && r.measured_amplitude > 0) {
      lx.push_back(std::log(r.offset));
      ly.push_back(std::log(r.measured_amplitude));
    }
  if (lx.size() >= 2) table.fitted_exponent = fit_line(lx, ly).slope;
  return table;
}

}  // namespace hyperhopf
