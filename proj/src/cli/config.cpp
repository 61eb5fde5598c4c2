#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "stringstab/cli.hpp"
#include "stringstab/errors.hpp"

namespace stringstab::cli {

using nlohmann::json;

namespace {

const json* section(const json& doc, const char* name, std::initializer_list<const char*> known) {
  if (!doc.contains(name)) return nullptr;
  const json& s = doc.at(name);
  if (!s.is_object()) throw ConfigError(std::string(name) + " must be an object");
  for (const auto& item : s.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) throw ConfigError("unknown key " + std::string(name) + "." + item.key());
  }
  return &s;
}

template <typename T>
void read(const json* s, const char* section_name, const char* key, T& target) {
  if (s == nullptr || !s->contains(key)) return;
  try {
    target = s->at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(section_name) + "." + key + " has the wrong type");
  }
}

void read_optional(const json* s, const char* section_name, const char* key, std::optional<double>& target) {
  if (s == nullptr || !s->contains(key)) return;
  const json& v = s->at(key);
  if (v.is_null()) {
    target.reset();
    return;
  }
  if (!v.is_number()) throw ConfigError(std::string(section_name) + "." + key + " must be a number or null");
  target = v.get<double>();
}

DisturbanceSpec disturbance_from_json(const json& d, std::size_t index) {
  const std::string where = "simulation.disturbances[" + std::to_string(index) + "]";
  if (!d.is_object()) throw ConfigError(where + " must be an object");
  DisturbanceSpec spec;
  for (const auto& item : d.items()) {
    const std::string& key = item.key();
    try {
      if (key == "vehicle") {
        spec.vehicle = item.value().get<std::size_t>();
      } else if (key == "waveform") {
        spec.waveform = waveform_from_string(item.value().get<std::string>());
      } else if (key == "amplitude") {
        spec.amplitude = item.value().get<double>();
      } else if (key == "start") {
        spec.start = item.value().get<double>();
      } else if (key == "duration") {
        spec.duration = item.value().get<double>();
      } else if (key == "omega") {
        spec.omega = item.value().get<double>();
      } else if (key == "omega_end") {
        spec.omega_end = item.value().get<double>();
      } else {
        throw ConfigError("unknown key " + where + "." + key);
      }
    } catch (const json::exception&) {
      throw ConfigError(where + "." + key + " has the wrong type");
    } catch (const InvalidArgumentError& e) {
      throw ConfigError(where + "." + key + ": " + e.what());
    }
  }
  return spec;
}

json disturbance_to_json(const DisturbanceSpec& d) {
  return json{{"vehicle", d.vehicle},     {"waveform", to_string(d.waveform)},
              {"amplitude", d.amplitude}, {"start", d.start},
              {"duration", d.duration},   {"omega", d.omega},
              {"omega_end", d.omega_end}};
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

RunConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : doc.items()) {
    const std::string& k = item.key();
    if (k != "gains" && k != "chain" && k != "frequency" && k != "simulation" && k != "tune" && k != "output") {
      throw ConfigError("unknown top-level key " + k);
    }
  }
  RunConfig cfg;

  const json* gains = section(doc, "gains", {"a1", "b1", "a2", "b2"});
  read(gains, "gains", "a1", cfg.a1);
  read(gains, "gains", "b1", cfg.b1);
  read(gains, "gains", "a2", cfg.a2);
  read(gains, "gains", "b2", cfg.b2);

  const json* chain = section(doc, "chain", {"n", "n_list", "k"});
  read(chain, "chain", "n", cfg.n);
  read(chain, "chain", "n_list", cfg.n_list);
  read(chain, "chain", "k", cfg.k);

  const json* freq = section(doc, "frequency", {"omega_min", "omega_max", "points", "refine_iters"});
  read(freq, "frequency", "omega_min", cfg.omega_min);
  read(freq, "frequency", "omega_max", cfg.omega_max);
  read(freq, "frequency", "points", cfg.points);
  read(freq, "frequency", "refine_iters", cfg.refine_iters);

  const json* sim = section(doc, "simulation", {"dt", "t_end", "record_every", "disturbances"});
  read_optional(sim, "simulation", "dt", cfg.dt);
  read_optional(sim, "simulation", "t_end", cfg.t_end);
  read(sim, "simulation", "record_every", cfg.record_every);
  if (sim != nullptr && sim->contains("disturbances")) {
    const json& list = sim->at("disturbances");
    require(list.is_array(), "simulation.disturbances must be an array");
    cfg.disturbances.clear();
    for (std::size_t i = 0; i < list.size(); ++i) cfg.disturbances.push_back(disturbance_from_json(list[i], i));
  }

  const json* tune = section(doc, "tune", {"base_a", "base_b", "kappa", "alpha_min", "alpha_max"});
  read(tune, "tune", "base_a", cfg.base_a);
  read(tune, "tune", "base_b", cfg.base_b);
  read(tune, "tune", "kappa", cfg.kappa);
  read(tune, "tune", "alpha_min", cfg.alpha_min);
  read(tune, "tune", "alpha_max", cfg.alpha_max);

  const json* output = section(doc, "output", {"dir", "format"});
  read(output, "output", "dir", cfg.out_dir);
  if (output != nullptr && output->contains("format")) {
    std::string fmt;
    read(output, "output", "format", fmt);
    if (fmt == "csv") {
      cfg.format = OutputFormat::Csv;
    } else if (fmt == "json") {
      cfg.format = OutputFormat::Json;
    } else {
      throw ConfigError("output.format must be csv or json");
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

json config_to_json(const RunConfig& cfg) {
  json disturbances = json::array();
  for (const auto& d : cfg.disturbances) disturbances.push_back(disturbance_to_json(d));
  return json{
      {"gains", {{"a1", cfg.a1}, {"b1", cfg.b1}, {"a2", cfg.a2}, {"b2", cfg.b2}}},
      {"chain", {{"n", cfg.n}, {"n_list", cfg.n_list}, {"k", cfg.k}}},
      {"frequency",
       {{"omega_min", cfg.omega_min},
        {"omega_max", cfg.omega_max},
        {"points", cfg.points},
        {"refine_iters", cfg.refine_iters}}},
      {"simulation",
       {{"dt", cfg.dt ? json(*cfg.dt) : json(nullptr)},
        {"t_end", cfg.t_end ? json(*cfg.t_end) : json(nullptr)},
        {"record_every", cfg.record_every},
        {"disturbances", disturbances}}},
      {"tune",
       {{"base_a", cfg.base_a},
        {"base_b", cfg.base_b},
        {"kappa", cfg.kappa},
        {"alpha_min", cfg.alpha_min},
        {"alpha_max", cfg.alpha_max}}},
      {"output", {{"dir", cfg.out_dir}, {"format", cfg.format == OutputFormat::Csv ? "csv" : "json"}}},
  };
}

void validate(const RunConfig& cfg) {
  require(positive(cfg.a1), "gains.a1 must be > 0 (positivity)");
  require(positive(cfg.b1), "gains.b1 must be > 0 (positivity)");
  require(positive(cfg.a2), "gains.a2 must be > 0 (positivity)");
  require(positive(cfg.b2), "gains.b2 must be > 0 (positivity)");

  require(cfg.n >= 1, "chain.n must be >= 1");
  for (std::size_t v : cfg.n_list) require(v >= 1, "chain.n_list entries must be >= 1");
  require(cfg.k >= 1 && cfg.k <= cfg.n, "chain.k must lie in 1..chain.n");

  require(positive(cfg.omega_min), "frequency.omega_min must be > 0");
  require(std::isfinite(cfg.omega_max) && cfg.omega_max > cfg.omega_min,
          "frequency.omega_max must exceed frequency.omega_min");
  require(cfg.points >= 2, "frequency.points must be >= 2");
  require(cfg.refine_iters >= 0, "frequency.refine_iters must be >= 0");

  const ControllerGains g = gains_of(cfg);
  if (cfg.dt) {
    require(positive(*cfg.dt), "simulation.dt must be > 0");
    const double guard = step_guard_value(g, *cfg.dt);
    if (guard > kStepGuard) {
      std::ostringstream msg;
      msg << "simulation.dt violates the step-size guard: dt * sqrt(max(a1,a2) + max(b1,b2)^2) = " << guard
          << " > " << kStepGuard << " (use dt <= " << default_step(g) << ")";
      throw ConfigError(msg.str());
    }
  }
  if (cfg.t_end) {
    const double dt = cfg.dt.value_or(default_step(g));
    require(std::isfinite(*cfg.t_end) && *cfg.t_end >= 10.0 * dt, "simulation.t_end must be >= 10 * dt");
  }
  require(cfg.record_every >= 1, "simulation.record_every must be >= 1");
  const ChainSize size(cfg.n);
  for (std::size_t i = 0; i < cfg.disturbances.size(); ++i) {
    try {
      cfg.disturbances[i].validate(size);
    } catch (const InvalidArgumentError& e) {
      throw ConfigError("simulation.disturbances[" + std::to_string(i) + "]: " + e.what());
    }
  }

  require(positive(cfg.base_a), "tune.base_a must be > 0");
  require(positive(cfg.base_b), "tune.base_b must be > 0");
  require(positive(cfg.kappa), "tune.kappa must be > 0");
  require(std::isfinite(cfg.alpha_min) && cfg.alpha_min >= 1.0, "tune.alpha_min must be >= 1");
  require(std::isfinite(cfg.alpha_max) && cfg.alpha_max >= cfg.alpha_min, "tune.alpha_max must be >= tune.alpha_min");
  require(!cfg.out_dir.empty(), "output.dir must not be empty");
}

ControllerGains gains_of(const RunConfig& cfg) {
  return ControllerGains::from_coefficients(cfg.a1, cfg.b1, cfg.a2, cfg.b2);
}

FrequencyGrid grid_of(const RunConfig& cfg) { return FrequencyGrid(cfg.omega_min, cfg.omega_max, cfg.points); }

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace stringstab::cli
