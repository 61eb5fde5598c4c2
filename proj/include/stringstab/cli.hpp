#ifndef STRINGSTAB_CLI_HPP
#define STRINGSTAB_CLI_HPP

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stringstab/freq_analysis.hpp"
#include "stringstab/sim.hpp"

namespace stringstab::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInvalidConfig = 2,
  kNotFound = 3,
  kDiverged = 4,
  kDegenerate = 5,
};

enum class OutputFormat { Csv, Json };

/// Everything a command needs. Defaults reproduce the reference experiment:
/// a1=1, b1=1, a2=10, b2=100, twelve followers, unit pulse on the leader.
struct RunConfig {
  double a1 = 1.0;
  double b1 = 1.0;
  double a2 = 10.0;
  double b2 = 100.0;

  std::size_t n = 12;
  std::vector<std::size_t> n_list;  // sweep-n; empty means 1..n
  std::size_t k = 1;                // freq-response vehicle index

  double omega_min = 1e-4;
  double omega_max = 1e4;
  std::size_t points = 2000;
  int refine_iters = kDefaultRefineIters;

  std::optional<double> dt;
  std::optional<double> t_end;
  std::size_t record_every = 1;
  std::vector<DisturbanceSpec> disturbances{DisturbanceSpec::leader_pulse()};

  double base_a = 1.0;
  double base_b = 1.0;
  double kappa = 2.0;
  double alpha_min = 1.5;
  double alpha_max = 1000.0;

  std::string out_dir = ".";
  OutputFormat format = OutputFormat::Csv;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Thrown by parsing/validation; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads the keys gains, chain, frequency, simulation, tune, output. Keys
/// absent from the document keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);

/// Checks every field against the library invariants.
void validate(const RunConfig& cfg);

ControllerGains gains_of(const RunConfig& cfg);
FrequencyGrid grid_of(const RunConfig& cfg);

/// Decimal with 17 significant digits.
std::string format_number(double v);

int cmd_check_lemmas(const RunConfig& cfg, std::ostream& out, std::ostream& err, bool write_file);
int cmd_tune(const RunConfig& cfg, std::ostream& out, std::ostream& err, bool write_file);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_sweep_n(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_freq_response(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Full command line entry point; returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace stringstab::cli

#endif  // STRINGSTAB_CLI_HPP
