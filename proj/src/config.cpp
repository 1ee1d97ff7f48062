#include "hyperhopf/config.hpp"

#include <fstream>

#include "json.hpp"

namespace hyperhopf {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* key : allowed)
      if (it.key() == key) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError("config: unknown key \"" + where + it.key() + "\"");
  }
}

double require_number(const json& obj, const std::string& where,
                      const char* key) {
  if (!obj.contains(key) || !obj[key].is_number())
    throw ConfigError("config: \"" + where + key + "\" must be a number");
  return obj[key].get<double>();
}

SystemSpec parse_system(const json& sys) {
  reject_unknown(sys, "system.",
                 {"n", "m", "speeds", "rhs", "reflection", "params", "anchor"});
  SystemSpec spec;
  spec.n = static_cast<int>(require_number(sys, "system.", "n"));
  spec.m = static_cast<int>(require_number(sys, "system.", "m"));
  if (sys.contains("params")) {
    if (!sys["params"].is_object())
      throw ConfigError("config: \"system.params\" must be an object");
    for (auto it = sys["params"].begin(); it != sys["params"].end(); ++it) {
      if (!it.value().is_number())
        throw ConfigError("config: parameter \"" + it.key() +
                          "\" must be a number");
      spec.params[it.key()] = it.value().get<double>();
    }
  }
  auto parse_exprs = [&](const char* key, const std::vector<std::string>& vars,
                         std::vector<expr::ExprAst>& out) {
    if (!sys.contains(key) || !sys[key].is_array() ||
        static_cast<int>(sys[key].size()) != spec.n)
      throw ConfigError(std::string("config: \"system.") + key +
                        "\" must be an array of n expression strings");
    for (const auto& e : sys[key]) {
      if (!e.is_string())
        throw ConfigError(std::string("config: \"system.") + key +
                          "\" entries must be strings");
      try {
        out.push_back(expr::parse(e.get<std::string>(), vars));
      } catch (const Error& err) {
        throw ConfigError(std::string("config: in \"system.") + key +
                          "\" entry \"" + e.get<std::string>() +
                          "\": " + err.what());
      }
    }
  };
  parse_exprs("speeds", spec.speed_variables(), spec.speeds);
  parse_exprs("rhs", spec.rhs_variables(), spec.rhs);

  if (!sys.contains("reflection") || !sys["reflection"].is_array())
    throw ConfigError("config: \"system.reflection\" must be an n x n array");
  for (const auto& row : sys["reflection"]) {
    if (!row.is_array())
      throw ConfigError("config: \"system.reflection\" must be an n x n array");
    std::vector<double> r;
    for (const auto& v : row) r.push_back(v.get<double>());
    spec.reflection.push_back(std::move(r));
  }
  if (sys.contains("anchor")) {
    const json& a = sys["anchor"];
    reject_unknown(a, "system.anchor.", {"component", "x"});
    Anchor anchor;
    anchor.component =
        static_cast<int>(require_number(a, "system.anchor.", "component"));
    anchor.x = require_number(a, "system.anchor.", "x");
    spec.anchor = anchor;
  }
  check_structure(spec);
  return spec;
}

}  // namespace

ConfigDocument parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  reject_unknown(doc, "", {"system", "builtin", "analysis", "simulation",
                           "sweep"});

  ConfigDocument cfg;
  if (doc.contains("system") == doc.contains("builtin"))
    throw ConfigError(
        "config: exactly one of \"system\" or \"builtin\" is required");
  if (doc.contains("builtin")) {
    const json& b = doc["builtin"];
    reject_unknown(b, "builtin.", {"name", "gamma"});
    if (!b.contains("name") || b["name"] != "example_sec6")
      throw ConfigError(
          "config: the only builtin system is \"example_sec6\"");
    cfg.system = builtin_example(require_number(b, "builtin.", "gamma"));
  } else {
    cfg.system = parse_system(doc["system"]);
  }

  if (doc.contains("analysis")) {
    const json& a = doc["analysis"];
    reject_unknown(a, "analysis.", {"lambda_range", "region", "k_max",
                                    "grid_n", "ode_rtol"});
    if (a.contains("lambda_range")) {
      const json& r = a["lambda_range"];
      if (!r.is_array() || r.size() != 2)
        throw ConfigError("config: \"analysis.lambda_range\" must be [lo, hi]");
      cfg.analysis.lambda_lo = r[0].get<double>();
      cfg.analysis.lambda_hi = r[1].get<double>();
    }
    if (a.contains("region")) {
      const json& r = a["region"];
      reject_unknown(r, "analysis.region.", {"re", "im"});
      if (!r.contains("re") || !r.contains("im") || r["re"].size() != 2 ||
          r["im"].size() != 2)
        throw ConfigError(
            "config: \"analysis.region\" needs \"re\": [lo,hi] and "
            "\"im\": [lo,hi]");
      cfg.analysis.region =
          Rect{r["re"][0].get<double>(), r["re"][1].get<double>(),
               r["im"][0].get<double>(), r["im"][1].get<double>()};
    }
    if (a.contains("k_max"))
      cfg.analysis.k_max = static_cast<int>(require_number(a, "analysis.", "k_max"));
    if (a.contains("grid_n"))
      cfg.analysis.grid_n =
          static_cast<int>(require_number(a, "analysis.", "grid_n"));
    if (a.contains("ode_rtol"))
      cfg.analysis.ode_rtol = require_number(a, "analysis.", "ode_rtol");
    if (cfg.analysis.grid_n < 64 || cfg.analysis.grid_n % 2 != 0)
      throw ConfigError("config: \"analysis.grid_n\" must be even and >= 64");
  }

  if (doc.contains("simulation")) {
    const json& s = doc["simulation"];
    reject_unknown(s, "simulation.",
                   {"lambda", "dx", "cfl", "dt", "t_end", "initial", "probes",
                    "measure_window"});
    auto& sim = cfg.simulation;
    sim.present = true;
    sim.lambda = require_number(s, "simulation.", "lambda");
    if (s.contains("dx")) sim.dx = require_number(s, "simulation.", "dx");
    if (s.contains("cfl")) sim.cfl = require_number(s, "simulation.", "cfl");
    if (s.contains("dt")) sim.dt = require_number(s, "simulation.", "dt");
    sim.t_end = require_number(s, "simulation.", "t_end");
    if (s.contains("measure_window"))
      sim.measure_window = require_number(s, "simulation.", "measure_window");
    if (!s.contains("initial"))
      throw ConfigError("config: \"simulation.initial\" is required");
    const json& init = s["initial"];
    if (init.is_array()) {
      for (const auto& e : init) {
        if (!e.is_string())
          throw ConfigError(
              "config: \"simulation.initial\" entries must be strings");
        sim.initial_exprs.push_back(e.get<std::string>());
      }
    } else if (init.is_object()) {
      reject_unknown(init, "simulation.initial.", {"seed_orbit"});
      if (!init.contains("seed_orbit"))
        throw ConfigError(
            "config: \"simulation.initial\" must be an expression array or "
            "{\"seed_orbit\": {...}}");
      const json& seed = init["seed_orbit"];
      reject_unknown(seed, "simulation.initial.seed_orbit.", {"epsilon"});
      sim.seed_orbit = true;
      if (seed.contains("epsilon"))
        sim.seed_epsilon =
            require_number(seed, "simulation.initial.seed_orbit.", "epsilon");
    } else {
      throw ConfigError(
          "config: \"simulation.initial\" must be an expression array or "
          "{\"seed_orbit\": {...}}");
    }
    if (s.contains("probes")) {
      for (const auto& p : s["probes"]) sim.probes.push_back(p.get<double>());
    }
    if (sim.probes.empty()) sim.probes = {0.0, 0.5, 1.0};
  }

  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    reject_unknown(s, "sweep.", {"offsets", "dx", "t_end", "jobs"});
    cfg.sweep.present = true;
    if (s.contains("offsets"))
      for (const auto& o : s["offsets"])
        cfg.sweep.offsets.push_back(o.get<double>());
    if (s.contains("dx")) cfg.sweep.dx = require_number(s, "sweep.", "dx");
    if (s.contains("t_end"))
      cfg.sweep.t_end = require_number(s, "sweep.", "t_end");
    if (s.contains("jobs"))
      cfg.sweep.jobs = static_cast<int>(require_number(s, "sweep.", "jobs"));
  }
  return cfg;
}

ConfigDocument load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_config(text);
}

}  // namespace hyperhopf
