// Command-line front end: analyze a system for Hopf bifurcation, run the
// time-domain simulator, or sweep the amplitude law over parameter offsets.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hyperhopf/config.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace hyperhopf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitHypothesis = 3;
constexpr int kExitNumerical = 4;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct AnalysisArtifacts {
  HopfReport report;
  bool bifurcation_valid = false;
  BifurcationResult bifurcation;
};

AnalysisArtifacts run_analysis(const ConfigDocument& cfg) {
  AnalysisArtifacts art;
  art.report = full_report(cfg.system, cfg.analysis);
  if (art.report.all_pass()) {
    art.bifurcation = bifurcation_result(cfg.system, art.report,
                                         cfg.analysis.ode_rtol);
    art.bifurcation_valid = true;
  }
  return art;
}

ordered_json report_to_json(const AnalysisArtifacts& art) {
  const HopfReport& r = art.report;
  ordered_json j;
  j["lambda0"] = r.lambda0;
  j["omega0"] = r.omega0;
  j["hypotheses"] = {
      {"geometric_simplicity",
       {{"pass", r.geo_simple},
        {"sigma_min", r.geo_sigma_min},
        {"sigma_next", r.geo_sigma_next}}},
      {"algebraic_simplicity",
       {{"pass", r.alg_simple},
        {"pairing_re", r.pairing.real()},
        {"pairing_im", r.pairing.imag()}}},
      {"transversality",
       {{"pass", r.transversal},
        {"alpha", r.alpha},
        {"alpha_fd_check", r.alpha_fd}}},
      {"nonresonance",
       {{"pass", r.nonresonant},
        {"k_max", r.k_max},
        {"nearest_distance", r.nearest_resonance}}},
      {"dissipativity",
       {{"pass", r.dissipative}, {"R0", r.R0}, {"R1", r.R1}}}};
  j["verdict"] = r.all_pass();
  if (art.bifurcation_valid) {
    const BifurcationResult& b = art.bifurcation;
    j["bifurcation"] = {
        {"alpha", b.alpha},
        {"beta", b.beta},
        {"curvature", b.curvature},
        {"direction", to_string(b.direction)},
        {"bifurcating_side", b.bifurcating_side},
        {"orbit_scale", b.orbit_scale},
        {"amplitude_law",
         "eps(lambda) = sqrt(2*alpha*(lambda-lambda0)/beta)"},
        {"convention",
         "alpha is the eigenvalue crossing speed in problem time; beta uses "
         "the same normalization (the ratio beta/alpha is "
         "normalization-free)"}};
  }
  return j;
}

void write_spectrum_csv(const fs::path& path, const HopfReport& r) {
  std::ofstream out(path);
  out << "re_mu,im_mu,winding\n";
  for (const EigenPair& e : r.spectrum)
    out << fmt(e.mu.real()) << "," << fmt(e.mu.imag()) << ","
        << e.winding_multiplicity << "\n";
}

void write_eigenfunction_csv(const fs::path& path, const HopfReport& r) {
  std::ofstream out(path);
  out << "x,component,func,re,im\n";
  auto dump = [&](const GridFn& g, const char* name) {
    for (int i = 0; i <= g.N; ++i)
      for (int j = 0; j < g.n; ++j)
        out << fmt(g.x(i)) << "," << j + 1 << "," << name << ","
            << fmt(g.at(i, j).real()) << "," << fmt(g.at(i, j).imag())
            << "\n";
  };
  dump(r.pair.v, "v");
  dump(r.pair.w, "w");
}

void write_timeseries_csv(const fs::path& path, const TimeSeries& ts) {
  std::ofstream out(path);
  out << "t,probe_x,component,value\n";
  for (size_t k = 0; k < ts.sample_count(); ++k)
    for (size_t p = 0; p < ts.probe_x.size(); ++p)
      for (int j = 0; j < ts.n; ++j)
        out << fmt(k * ts.dt) << "," << fmt(ts.probe_x[p]) << "," << j + 1
            << "," << fmt(ts.samples[p * ts.n + j][k]) << "\n";
}

void write_measure_txt(const fs::path& path, const TimeSeries& ts) {
  std::ofstream out(path);
  for (size_t p = 0; p < ts.probe_x.size(); ++p)
    for (int j = 0; j < ts.n; ++j) {
      const Measurement& m = ts.measurements[p * ts.n + j];
      const std::string tag =
          "probe" + std::to_string(p + 1) + "_u" + std::to_string(j + 1);
      out << tag << "_amplitude=" << fmt(m.amplitude) << "\n";
      out << tag << "_frequency=" << fmt(m.frequency) << "\n";
      out << tag << "_rate=" << fmt(m.rate) << "\n";
      out << tag << "_drift=" << fmt(m.drift) << "\n";
      out << tag << "_converged=" << (m.converged ? 1 : 0) << "\n";
    }
}

void print_human_report(const AnalysisArtifacts& art, std::ostream& os) {
  const HopfReport& r = art.report;
  auto pf = [](bool b) { return b ? "PASS" : "FAIL"; };
  os << "Hopf analysis\n";
  os << "  lambda0 = " << fmt(r.lambda0) << "\n";
  os << "  omega0  = " << fmt(r.omega0) << "\n";
  os << "  (1.11) geometric simplicity : " << pf(r.geo_simple)
     << "  (sigma_min=" << fmt(r.geo_sigma_min)
     << ", next=" << fmt(r.geo_sigma_next) << ")\n";
  os << "  (1.12) algebraic simplicity : " << pf(r.alg_simple)
     << "  (|pairing|=" << fmt(std::abs(r.pairing)) << ")\n";
  os << "  (1.14) transversality       : " << pf(r.transversal)
     << "  (alpha=" << fmt(r.alpha) << ", fd check=" << fmt(r.alpha_fd)
     << ")\n";
  os << "  (1.15) nonresonance k<=" << r.k_max << "    : "
     << pf(r.nonresonant) << "  (nearest=" << fmt(r.nearest_resonance)
     << ")\n";
  os << "  (1.18) dissipativity        : " << pf(r.dissipative)
     << "  (R0=" << fmt(r.R0) << ", R1=" << fmt(r.R1) << ")\n";
  if (art.bifurcation_valid) {
    const BifurcationResult& b = art.bifurcation;
    os << "  alpha     = " << fmt(b.alpha) << "\n";
    os << "  beta      = " << fmt(b.beta) << "\n";
    os << "  curvature = " << fmt(b.curvature)
       << "   (second derivative of lambda along the branch)\n";
    os << "  direction = " << to_string(b.direction) << " (orbits for lambda "
       << (b.bifurcating_side > 0 ? ">" : "<") << " lambda0)\n";
    os << "  amplitude law: eps = sqrt(2*alpha*(lambda-lambda0)/beta), "
          "amplitude ~ eps * "
       << fmt(b.orbit_scale) << "\n";
  }
}

int cmd_analyze(const ConfigDocument& cfg, const fs::path& out_dir, bool quiet,
                bool json_only) {
  const AnalysisArtifacts art = run_analysis(cfg);
  fs::create_directories(out_dir);
  const ordered_json j = report_to_json(art);
  {
    std::ofstream out(out_dir / "report.json");
    out << j.dump(2) << "\n";
  }
  write_spectrum_csv(out_dir / "spectrum.csv", art.report);
  if (art.report.geo_simple && art.report.alg_simple)
    write_eigenfunction_csv(out_dir / "eigenfunction.csv", art.report);
  if (json_only) {
    std::cout << j.dump(2) << "\n";
  } else if (!quiet) {
    print_human_report(art, std::cout);
  }
  if (!art.report.all_pass()) {
    std::cerr << "hypothesis failed: " << art.report.first_failure() << "\n";
    return kExitHypothesis;
  }
  return kExitOk;
}

int cmd_simulate(const ConfigDocument& cfg, const fs::path& out_dir,
                 bool quiet) {
  if (!cfg.simulation.present)
    throw ConfigError("config: \"simulation\" section is required");
  const auto& s = cfg.simulation;

  SimConfig sim;
  sim.spec = cfg.system;
  sim.lambda = s.lambda;
  sim.dx = s.dx;
  sim.cfl = s.cfl;
  sim.dt = s.dt;
  sim.t_end = s.t_end;
  sim.measure_window = s.measure_window;
  sim.probes = s.probes;
  if (s.seed_orbit) {
    const AnalysisArtifacts art = run_analysis(cfg);
    if (!art.bifurcation_valid)
      throw HypothesisError(
          "simulate: seed_orbit needs a passing hypothesis report");
    SeedOrbit seed;
    seed.v0 = art.bifurcation.first_order_orbit;
    seed.omega0 = art.bifurcation.omega0;
    seed.epsilon = s.seed_epsilon;
    if (seed.epsilon == 0) {
      const double offset = s.lambda - art.bifurcation.lambda0;
      seed.epsilon = art.bifurcation.eps_of_offset(
          std::abs(offset) > 0 ? std::abs(offset) : 1e-2);
    }
    sim.initial = seed;
  } else {
    std::vector<expr::ExprAst> init;
    if (static_cast<int>(s.initial_exprs.size()) != cfg.system.n)
      throw ConfigError(
          "config: \"simulation.initial\" needs one expression per component");
    std::vector<std::string> vars = cfg.system.speed_variables();
    for (const std::string& src : s.initial_exprs)
      init.push_back(expr::parse(src, vars));
    sim.initial = std::move(init);
  }

  Simulator simulator(std::move(sim));
  const TimeSeries ts = simulator.run();
  fs::create_directories(out_dir);
  write_timeseries_csv(out_dir / "timeseries.csv", ts);
  write_measure_txt(out_dir / "measure.txt", ts);
  if (!quiet) {
    std::cout << "simulated " << ts.sample_count() << " samples, dt="
              << fmt(ts.dt) << ", orientation="
              << simulator.orientation() << "\n";
    std::cout << "wrote " << (out_dir / "timeseries.csv").string() << " and "
              << (out_dir / "measure.txt").string() << "\n";
  }
  return kExitOk;
}

int cmd_sweep(const ConfigDocument& cfg, std::vector<double> offsets,
              const fs::path& out_dir, bool quiet, int jobs) {
  if (offsets.empty() && cfg.sweep.present) offsets = cfg.sweep.offsets;
  if (offsets.empty())
    throw ConfigError("sweep: no offsets given (flag --offsets or config)");

  const AnalysisArtifacts art = run_analysis(cfg);
  if (!art.bifurcation_valid)
    throw HypothesisError("sweep: hypothesis checks failed; nothing to sweep");

  SweepOptions opts;
  opts.dx = cfg.sweep.present ? cfg.sweep.dx : 1.0 / 400;
  opts.t_end = cfg.sweep.present ? cfg.sweep.t_end : 0.0;
  opts.jobs = jobs > 0 ? jobs : (cfg.sweep.present ? cfg.sweep.jobs : 1);
  const AmplitudeLawTable table =
      measure_amplitude_law(cfg.system, art.bifurcation, offsets, opts);

  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "amplitude_law.csv");
    out << "offset,measured_A,predicted_A,measured_freq,drift,converged,"
           "fitted_exponent\n";
    for (const AmplitudeLawRow& r : table.rows)
      out << fmt(r.offset) << "," << fmt(r.measured_amplitude) << ","
          << fmt(r.predicted_amplitude) << "," << fmt(r.measured_frequency)
          << "," << fmt(r.drift) << "," << (r.converged ? 1 : 0) << ","
          << fmt(table.fitted_exponent) << "\n";
  }
  if (!quiet) {
    std::cout << "amplitude-law sweep: fitted exponent = "
              << fmt(table.fitted_exponent) << "\n";
    std::cout << "wrote " << (out_dir / "amplitude_law.csv").string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Hopf bifurcation toolkit for 1D semilinear hyperbolic systems with "
      "reflection boundary conditions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  bool quiet = false;
  bool json_only = false;
  int jobs = 0;
  std::vector<double> offsets;

  app.add_option("--out", out_dir, "Output directory (default ./out)");
  app.add_flag("--quiet", quiet, "Suppress the stdout report");
  app.add_flag("--json", json_only, "Print the machine report only");
  app.add_option("--jobs", jobs, "Concurrent sweep points");

  CLI::App* analyze = app.add_subcommand(
      "analyze", "Hypothesis checks, alpha/beta, bifurcation direction");
  analyze->add_option("config", config_path, "JSON config")->required();

  CLI::App* simulate =
      app.add_subcommand("simulate", "Time-domain simulation with probes");
  simulate->add_option("config", config_path, "JSON config")->required();

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Amplitude-law sweep over parameter offsets");
  sweep->add_option("config", config_path, "JSON config")->required();
  sweep->add_option("--offsets", offsets,
                    "Offsets from lambda0 on the bifurcating side")
      ->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    const ConfigDocument cfg = load_config(config_path);
    if (analyze->parsed()) return cmd_analyze(cfg, out_dir, quiet, json_only);
    if (simulate->parsed()) return cmd_simulate(cfg, out_dir, quiet);
    if (sweep->parsed()) return cmd_sweep(cfg, offsets, out_dir, quiet, jobs);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const HypothesisError& e) {
    std::cerr << e.what() << "\n";
    return kExitHypothesis;
  } catch (const NoCrossingError& e) {
    std::cerr << e.what() << "\n";
    return kExitHypothesis;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
