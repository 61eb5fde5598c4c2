#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>

#include <CLI11.hpp>

#include "stringstab/chain.hpp"
#include "stringstab/cli.hpp"
#include "stringstab/errors.hpp"

namespace stringstab::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json norm_json(const NormEstimate& n) {
  return json{{"value", n.value}, {"argmax_omega", n.argmax_omega}, {"refined", n.refined}};
}

json gains_json(const ControllerGains& g) {
  return json{{"a1", g.a1()}, {"b1", g.b1()}, {"a2", g.a2()}, {"b2", g.b2()}};
}

// Writes through a temporary file so a failed run never leaves a partial output.
void write_atomically(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  const fs::path tmp = path.string() + ".partial";
  try {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    body(out);
    out.close();
    if (!out) throw Error("failed writing " + tmp.string());
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

void write_json(const fs::path& path, const json& doc) {
  write_atomically(path, [&doc](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

void emit_report(const RunConfig& cfg, const json& report, const char* file, std::ostream& out, bool write_file) {
  out << report.dump(2) << '\n';
  if (write_file) write_json(fs::path(cfg.out_dir) / file, report);
}

}  // namespace

int cmd_check_lemmas(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/, bool write_file) {
  const ControllerGains g = gains_of(cfg);
  const FrequencyGrid grid = grid_of(cfg);
  const LemmaReport r = check_lemma1(g, grid, cfg.refine_iters);

  json report{{"gains", gains_json(g)},
              {"c1_norm", norm_json(r.c1_norm)},
              {"c2_norm", norm_json(r.c2_norm)},
              {"c1c2_norm", norm_json(r.c1c2_norm)},
              {"both_le_one", r.both_le_one},
              {"product_le_one", r.product_le_one},
              {"c1_lt_one", r.c1_norm.value < 1.0},
              {"asymmetric_stiffness", g.a1() != g.a2()},
              {"tolerance", kUnitTolerance}};
  if (cfg.n >= 2) {
    const DenominatorMinima d = check_denominator_conditions(g, ChainSize(cfg.n), grid);
    report["denominator_minima"] = json{{"n", cfg.n},
                                        {"min_abs_m", d.min_abs_m},
                                        {"min_abs_z_plus_m", d.min_abs_z_plus_m},
                                        {"min_abs_boundary_det", d.min_abs_boundary_det}};
  }
  emit_report(cfg, report, "lemmas.json", out, write_file);
  return kSuccess;
}

int cmd_tune(const RunConfig& cfg, std::ostream& out, std::ostream& err, bool write_file) {
  const AffineTerm base(cfg.base_a, cfg.base_b);
  const auto result = tune_alpha(base, cfg.kappa, AlphaRange{cfg.alpha_min, cfg.alpha_max}, grid_of(cfg));
  json report{{"kappa", cfg.kappa},
              {"base", {{"a", cfg.base_a}, {"b", cfg.base_b}}},
              {"alpha_range", {cfg.alpha_min, cfg.alpha_max}},
              {"margin", kTuneMargin},
              {"found", result.has_value()}};
  if (result) {
    report["alpha"] = result->alpha;
    report["gains"] = gains_json(result->gains);
    report["c1_norm"] = norm_json(result->c1_norm);
  }
  emit_report(cfg, report, "tune.json", out, write_file);
  if (!result) {
    err << "no alpha in [" << format_number(cfg.alpha_min) << ", " << format_number(cfg.alpha_max)
        << "] gives ||C1||_inf < " << format_number(1.0 - kTuneMargin) << '\n';
    return kNotFound;
  }
  return kSuccess;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const ControllerGains g = gains_of(cfg);
  const ChainSize n(cfg.n);
  SimConfig sim;
  sim.n = n;
  sim.gains = g;
  sim.dt = cfg.dt.value_or(default_step(g));
  sim.disturbances = cfg.disturbances;
  sim.t_end = cfg.t_end.value_or(default_horizon(g, n, sim.disturbances, sim.dt));
  sim.record_every = cfg.record_every;

  const SimResult r = integrate(sim);
  for (const auto& w : r.warnings) err << "warning: " << w << '\n';

  const fs::path dir(cfg.out_dir);
  const fs::path errors_path = dir / (cfg.format == OutputFormat::Csv ? "errors.csv" : "errors.json");
  const fs::path summary_path = dir / "summary.json";
  try {
    if (cfg.format == OutputFormat::Csv) {
      write_atomically(errors_path, [&r](std::ostream& os) {
        os << 't';
        for (Eigen::Index k = 0; k < r.e.rows(); ++k) os << ",e_" << (k + 1);
        os << '\n';
        for (std::size_t i = 0; i < r.t.size(); ++i) {
          os << format_number(r.t[i]);
          for (Eigen::Index k = 0; k < r.e.rows(); ++k) os << ',' << format_number(r.e(k, static_cast<Eigen::Index>(i)));
          os << '\n';
        }
      });
    } else {
      json e = json::array();
      for (Eigen::Index k = 0; k < r.e.rows(); ++k) {
        std::vector<double> row(r.e.row(k).begin(), r.e.row(k).end());
        e.push_back(row);
      }
      write_json(errors_path, json{{"t", r.t}, {"e", e}});
    }
    std::vector<double> per_vehicle(r.per_vehicle_l2.begin(), r.per_vehicle_l2.end());
    const json summary{{"n", cfg.n},
                       {"gains", gains_json(g)},
                       {"dt", sim.dt},
                       {"t_end", sim.t_end},
                       {"per_vehicle_l2", per_vehicle},
                       {"total_norm", r.total_norm},
                       {"d_norm", r.d_norm},
                       {"spectral_abscissa", spectral_abscissa(g, n)},
                       {"warnings", r.warnings}};
    write_json(summary_path, summary);
    out << summary.dump(2) << '\n';
  } catch (...) {
    std::error_code ec;
    fs::remove(errors_path, ec);
    fs::remove(summary_path, ec);
    throw;
  }
  return kSuccess;
}

int cmd_sweep_n(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
  const ControllerGains g = gains_of(cfg);
  std::vector<std::size_t> n_list = cfg.n_list;
  if (n_list.empty()) {
    n_list.resize(cfg.n);
    std::iota(n_list.begin(), n_list.end(), std::size_t{1});
  }
  if (cfg.disturbances.size() != 1 || cfg.disturbances.front().vehicle != 0) {
    throw ConfigError("sweep-n needs exactly one disturbance, on vehicle 0");
  }
  for (std::size_t v : n_list) cfg.disturbances.front().validate(ChainSize(v));

  const auto rows = sweep_N(g, cfg.disturbances.front(), n_list, cfg.dt, cfg.t_end);
  const fs::path path = fs::path(cfg.out_dir) / (cfg.format == OutputFormat::Csv ? "sweep.csv" : "sweep.json");
  if (cfg.format == OutputFormat::Csv) {
    write_atomically(path, [&rows](std::ostream& os) {
      os << "N,l2l2_norm\n";
      for (const auto& row : rows) os << row.n << ',' << format_number(row.total_norm) << '\n';
    });
  } else {
    json list = json::array();
    for (const auto& row : rows) list.push_back(json{{"N", row.n}, {"l2l2_norm", row.total_norm}});
    write_json(path, list);
  }
  out << path.string() << '\n';
  return kSuccess;
}

int cmd_freq_response(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
  if (cfg.n < 2) throw ConfigError("freq-response needs chain.n >= 2");
  const ControllerGains g = gains_of(cfg);
  const ChainSize n(cfg.n);
  const FrequencyGrid grid = grid_of(cfg);
  const auto k = static_cast<Eigen::Index>(cfg.k - 1);

  std::vector<double> omegas = grid.omegas();
  std::vector<Complex> values;
  values.reserve(omegas.size());
  for (double w : omegas) values.push_back(closedform_chain_response(g, n, Complex(0.0, w), 1.0).H(k));

  const fs::path path = fs::path(cfg.out_dir) / (cfg.format == OutputFormat::Csv ? "bode.csv" : "bode.json");
  if (cfg.format == OutputFormat::Csv) {
    write_atomically(path, [&](std::ostream& os) {
      os << "omega,abs_Hk,arg_Hk\n";
      for (std::size_t i = 0; i < omegas.size(); ++i) {
        os << format_number(omegas[i]) << ',' << format_number(std::abs(values[i])) << ','
           << format_number(std::arg(values[i])) << '\n';
      }
    });
  } else {
    json rows = json::array();
    for (std::size_t i = 0; i < omegas.size(); ++i) {
      rows.push_back(json{{"omega", omegas[i]}, {"abs_Hk", std::abs(values[i])}, {"arg_Hk", std::arg(values[i])}});
    }
    write_json(path, rows);
  }
  out << path.string() << '\n';
  return kSuccess;
}

namespace {

struct Overrides {
  std::string config_path;
  std::optional<double> a1, b1, a2, b2, dt, t_end, kappa, base_a, base_b, alpha_min, alpha_max;
  std::optional<double> omega_min, omega_max;
  std::optional<std::size_t> n, k, points;
  std::vector<std::size_t> n_list;
  std::optional<std::string> out_dir, format;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "JSON run configuration");
    cmd.add_option("--a1", a1, "predecessor stiffness");
    cmd.add_option("--b1", b1, "predecessor damping");
    cmd.add_option("--a2", a2, "follower stiffness");
    cmd.add_option("--b2", b2, "follower damping");
    cmd.add_option("--n", n, "number of followers N");
    cmd.add_option("--dt", dt, "integration step [s]");
    cmd.add_option("--t-end", t_end, "simulation horizon [s]");
    cmd.add_option("--out", out_dir, "output directory");
    cmd.add_option("--format", format, "csv or json");
    cmd.add_option("--omega-min", omega_min, "lowest grid frequency [rad/s]");
    cmd.add_option("--omega-max", omega_max, "highest grid frequency [rad/s]");
    cmd.add_option("--points", points, "frequency grid points");
  }

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    auto set = [](auto& target, const auto& value) {
      if (value) target = *value;
    };
    set(cfg.a1, a1);
    set(cfg.b1, b1);
    set(cfg.a2, a2);
    set(cfg.b2, b2);
    set(cfg.n, n);
    set(cfg.k, k);
    set(cfg.points, points);
    set(cfg.omega_min, omega_min);
    set(cfg.omega_max, omega_max);
    set(cfg.kappa, kappa);
    set(cfg.base_a, base_a);
    set(cfg.base_b, base_b);
    set(cfg.alpha_min, alpha_min);
    set(cfg.alpha_max, alpha_max);
    set(cfg.out_dir, out_dir);
    if (dt) cfg.dt = dt;
    if (t_end) cfg.t_end = t_end;
    if (!n_list.empty()) cfg.n_list = n_list;
    if (format) {
      if (*format == "csv") {
        cfg.format = OutputFormat::Csv;
      } else if (*format == "json") {
        cfg.format = OutputFormat::Json;
      } else {
        throw ConfigError("--format must be csv or json");
      }
    }
    return cfg;
  }
};

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"String stability analysis of asymmetric bidirectional platoons", "stringstab"};
  app.require_subcommand(1);

  Overrides lemmas, tune, simulate, sweep, freq;
  CLI::App* c_lemmas = app.add_subcommand("check-lemmas", "H-infinity norms of C1, C2, C1*C2 and chain non-degeneracy");
  lemmas.add_to(*c_lemmas);
  CLI::App* c_tune = app.add_subcommand("tune", "search the follower/predecessor gain ratio alpha");
  tune.add_to(*c_tune);
  c_tune->add_option("--kappa", tune.kappa, "overall gain scale");
  c_tune->add_option("--base-a", tune.base_a, "base stiffness");
  c_tune->add_option("--base-b", tune.base_b, "base damping");
  c_tune->add_option("--alpha-min", tune.alpha_min, "lower end of the alpha range");
  c_tune->add_option("--alpha-max", tune.alpha_max, "upper end of the alpha range");
  CLI::App* c_sim = app.add_subcommand("simulate", "time-domain simulation, writes errors.csv and summary.json");
  simulate.add_to(*c_sim);
  CLI::App* c_sweep = app.add_subcommand("sweep-n", "(L2,l2) error norm versus chain length, writes sweep.csv");
  sweep.add_to(*c_sweep);
  c_sweep->add_option("--n-list", sweep.n_list, "chain lengths (default 1..n)")->delimiter(',');
  CLI::App* c_freq = app.add_subcommand("freq-response", "|H_k(jw)| and arg H_k(jw), writes bode.csv");
  freq.add_to(*c_freq);
  c_freq->add_option("--k", freq.k, "vehicle index 1..N");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidConfig;
  }

  try {
    if (c_lemmas->parsed()) {
      RunConfig cfg = lemmas.resolve();
      validate(cfg);
      return cmd_check_lemmas(cfg, out, err, lemmas.out_dir.has_value());
    }
    if (c_tune->parsed()) {
      RunConfig cfg = tune.resolve();
      validate(cfg);
      return cmd_tune(cfg, out, err, tune.out_dir.has_value());
    }
    if (c_sim->parsed()) {
      RunConfig cfg = simulate.resolve();
      validate(cfg);
      return cmd_simulate(cfg, out, err);
    }
    if (c_sweep->parsed()) {
      RunConfig cfg = sweep.resolve();
      validate(cfg);
      return cmd_sweep_n(cfg, out, err);
    }
    if (c_freq->parsed()) {
      RunConfig cfg = freq.resolve();
      validate(cfg);
      return cmd_freq_response(cfg, out, err);
    }
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const InvalidArgumentError& e) {
    err << "invalid config: " << e.what() << '\n';
    return kInvalidConfig;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const DegeneratePointError& e) {
    err << "degenerate point: " << e.what() << '\n';
    return kDegenerate;
  } catch (const EvaluationError& e) {
    err << "degenerate point: " << e.what() << '\n';
    return kDegenerate;
  }
  return kInvalidConfig;
}

}  // namespace stringstab::cli
