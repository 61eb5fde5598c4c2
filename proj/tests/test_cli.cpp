#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stringstab/chain.hpp"
#include "stringstab/cli.hpp"

namespace fs = std::filesystem;
using namespace stringstab;
using namespace stringstab::cli;
using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "stringstab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::istringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) cells.push_back(cell);
  return cells;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("stringstab_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string dir() const { return dir_.string(); }
  fs::path path(const std::string& name) const { return dir_ / name; }

  std::string write_config(const json& doc) const {
    const fs::path p = dir_ / "config.json";
    std::ofstream(p) << doc.dump();
    return p.string();
  }

 private:
  fs::path dir_;
};

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const RunConfig defaults;
  EXPECT_EQ(config_from_json(config_to_json(defaults)), defaults);
  EXPECT_EQ(config_from_json(json::object()), defaults);
  EXPECT_NO_THROW(validate(defaults));
}

TEST(Config, RandomRoundTrip) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  std::uniform_int_distribution<int> small(1, 40);
  for (int i = 0; i < 50; ++i) {
    RunConfig cfg;
    cfg.a1 = u(rng);
    cfg.b1 = u(rng);
    cfg.a2 = u(rng);
    cfg.b2 = u(rng);
    cfg.n = small(rng);
    cfg.k = 1 + small(rng) % cfg.n;
    cfg.n_list = {static_cast<std::size_t>(small(rng)), static_cast<std::size_t>(small(rng))};
    cfg.points = 2 + small(rng);
    if (i % 2) cfg.dt = std::exp2(-small(rng));
    if (i % 3) cfg.t_end = u(rng) * 10.0;
    cfg.record_every = small(rng);
    DisturbanceSpec d{.vehicle = static_cast<std::size_t>(small(rng) % cfg.n),
                      .waveform = static_cast<Waveform>(i % 4),
                      .amplitude = u(rng),
                      .start = u(rng),
                      .duration = u(rng),
                      .omega = u(rng),
                      .omega_end = u(rng)};
    cfg.disturbances = {d, DisturbanceSpec::leader_pulse()};
    cfg.kappa = u(rng);
    cfg.alpha_min = 1.0 + u(rng);
    cfg.alpha_max = cfg.alpha_min * 2.0;
    cfg.out_dir = "out" + std::to_string(i);
    cfg.format = i % 2 ? OutputFormat::Json : OutputFormat::Csv;
    const json doc = config_to_json(cfg);
    EXPECT_EQ(config_from_json(json::parse(doc.dump())), cfg) << doc.dump();
  }
}

TEST(Config, UnknownKeysAreNamed) {
  auto message = [](const json& doc) {
    try {
      config_from_json(doc);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message({{"gainz", json::object()}}).find("gainz"), std::string::npos);
  EXPECT_NE(message({{"gains", {{"a3", 1.0}}}}).find("gains.a3"), std::string::npos);
  EXPECT_NE(message({{"simulation", {{"disturbances", {{{"amp", 1.0}}}}}}}).find("disturbances[0].amp"),
            std::string::npos);
  EXPECT_NE(message({{"chain", {{"n", "twelve"}}}}).find("chain.n"), std::string::npos);
  EXPECT_NE(message({{"output", {{"format", "xml"}}}}).find("output.format"), std::string::npos);
}

TEST(Config, ValidationNamesField) {
  auto message = [](RunConfig cfg) {
    try {
      validate(cfg);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  RunConfig cfg;
  cfg.a1 = -1.0;
  EXPECT_NE(message(cfg).find("gains.a1"), std::string::npos);
  cfg = RunConfig{};
  cfg.b2 = 0.0;
  EXPECT_NE(message(cfg).find("gains.b2"), std::string::npos);
  cfg = RunConfig{};
  cfg.n = 0;
  EXPECT_NE(message(cfg).find("chain.n"), std::string::npos);
  cfg = RunConfig{};
  cfg.omega_max = cfg.omega_min;
  EXPECT_NE(message(cfg).find("frequency.omega_max"), std::string::npos);
  cfg = RunConfig{};
  cfg.dt = 0.01;
  EXPECT_NE(message(cfg).find("simulation.dt"), std::string::npos);
  cfg = RunConfig{};
  cfg.kappa = 0.0;
  EXPECT_NE(message(cfg).find("tune.kappa"), std::string::npos);
  cfg = RunConfig{};
  cfg.alpha_min = 0.5;
  EXPECT_NE(message(cfg).find("tune.alpha_min"), std::string::npos);
  cfg = RunConfig{};
  cfg.disturbances[0].vehicle = 13;
  EXPECT_NE(message(cfg).find("simulation.disturbances[0]"), std::string::npos);
}

TEST(FormatNumber, SeventeenSignificantDigits) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(2.0), "2");
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::exp(u(rng)) * (i % 2 ? -1.0 : 1.0);
    EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
  }
}

TEST_F(CliTest, CheckLemmasReport) {
  const Outcome r = run_cli({"check-lemmas", "--out", dir()});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const json report = json::parse(r.out);
  EXPECT_NEAR(report["c1_norm"]["value"].get<double>(), 0.1, 1e-9);
  EXPECT_GT(report["c2_norm"]["value"].get<double>(), 1.0);
  EXPECT_FALSE(report["both_le_one"].get<bool>());
  EXPECT_TRUE(report["product_le_one"].get<bool>());
  EXPECT_EQ(json::parse(slurp(path("lemmas.json"))), report);
}

TEST_F(CliTest, TuneFoundAndNotFound) {
  const Outcome found = run_cli({"tune", "--out", dir()});
  ASSERT_EQ(found.code, kSuccess) << found.err;
  const json doc = json::parse(slurp(path("tune.json")));
  EXPECT_TRUE(doc["found"].get<bool>());
  EXPECT_LT(doc["c1_norm"]["value"].get<double>(), 1.0 - 1e-3);
  EXPECT_EQ(doc["alpha"].get<double>(), 1.5);

  const Outcome missing = run_cli({"tune", "--alpha-min", "1", "--alpha-max", "1"});
  EXPECT_EQ(missing.code, kNotFound);
}

TEST_F(CliTest, SimulateCsvContract) {
  const Outcome r = run_cli({"simulate", "--n", "3", "--t-end", "4", "--out", dir()});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const auto lines = lines_of(slurp(path("errors.csv")));
  ASSERT_EQ(lines.front(), "t,e_1,e_2,e_3");
  EXPECT_EQ(lines.size(), 1u + 4 * 1024 + 1);
  for (std::size_t i = 1; i < lines.size(); i += 97) {
    const auto cells = split(lines[i]);
    ASSERT_EQ(cells.size(), 4u);
    for (const auto& c : cells) EXPECT_TRUE(std::isfinite(std::strtod(c.c_str(), nullptr)));
  }
  EXPECT_EQ(split(lines.back())[0], "4");
  const json summary = json::parse(slurp(path("summary.json")));
  EXPECT_EQ(summary["n"].get<int>(), 3);
  EXPECT_EQ(summary["dt"].get<double>(), std::exp2(-10));
  EXPECT_EQ(summary["per_vehicle_l2"].size(), 3u);
  EXPECT_LT(summary["spectral_abscissa"].get<double>(), 0.0);
  EXPECT_FALSE(fs::exists(path("errors.csv.partial")));
}

TEST_F(CliTest, SimulateIsDeterministic) {
  ASSERT_EQ(run_cli({"simulate", "--n", "4", "--t-end", "6", "--out", dir()}).code, kSuccess);
  const std::string first = slurp(path("errors.csv"));
  const std::string summary = slurp(path("summary.json"));
  ASSERT_EQ(run_cli({"simulate", "--n", "4", "--t-end", "6", "--out", dir()}).code, kSuccess);
  EXPECT_EQ(slurp(path("errors.csv")), first);
  EXPECT_EQ(slurp(path("summary.json")), summary);
}

TEST_F(CliTest, SimulateJsonFormat) {
  ASSERT_EQ(run_cli({"simulate", "--n", "2", "--t-end", "2", "--format", "json", "--out", dir()}).code, kSuccess);
  const json doc = json::parse(slurp(path("errors.json")));
  EXPECT_EQ(doc["e"].size(), 2u);
  EXPECT_EQ(doc["t"].size(), doc["e"][0].size());
}

TEST_F(CliTest, SweepCsvContract) {
  const Outcome single = run_cli({"sweep-n", "--n-list", "4", "--out", dir()});
  ASSERT_EQ(single.code, kSuccess) << single.err;
  auto lines = lines_of(slurp(path("sweep.csv")));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "N,l2l2_norm");
  EXPECT_EQ(split(lines[1])[0], "4");

  ASSERT_EQ(run_cli({"sweep-n", "--n-list", "3,1,2", "--out", dir()}).code, kSuccess);
  lines = lines_of(slurp(path("sweep.csv")));
  ASSERT_EQ(lines.size(), 4u);
  double prev = 0.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split(lines[i]);
    EXPECT_EQ(cells[0], std::to_string(i));
    const double v = std::strtod(cells[1].c_str(), nullptr);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST_F(CliTest, FreqResponseCsvContract) {
  const Outcome r = run_cli({"freq-response", "--n", "5", "--k", "3", "--points", "50", "--out", dir()});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const auto lines = lines_of(slurp(path("bode.csv")));
  ASSERT_EQ(lines.size(), 51u);
  EXPECT_EQ(lines[0], "omega,abs_Hk,arg_Hk");
  const auto cells = split(lines[20]);
  const double w = std::strtod(cells[0].c_str(), nullptr);
  const Complex h =
      closedform_chain_response(ControllerGains::from_coefficients(1, 1, 10, 100), ChainSize(5), Complex(0, w), 1.0)
          .H(2);
  EXPECT_EQ(std::strtod(cells[1].c_str(), nullptr), std::abs(h));
  EXPECT_EQ(std::strtod(cells[2].c_str(), nullptr), std::arg(h));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    EXPECT_TRUE(std::isfinite(std::strtod(split(lines[i])[1].c_str(), nullptr)));
  }
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  const std::string cfg = write_config({{"gains", {{"a1", 2.0}}}, {"chain", {{"n", 2}}}});
  const Outcome r = run_cli({"simulate", "--config", cfg, "--n", "3", "--t-end", "1", "--out", dir()});
  ASSERT_EQ(r.code, kSuccess) << r.err;
  const json summary = json::parse(slurp(path("summary.json")));
  EXPECT_EQ(summary["gains"]["a1"].get<double>(), 2.0);
  EXPECT_EQ(summary["n"].get<int>(), 3);
}

TEST_F(CliTest, InvalidInputsExitTwo) {
  EXPECT_EQ(run_cli({"check-lemmas", "--a1", "-1"}).code, kInvalidConfig);
  EXPECT_EQ(run_cli({"check-lemmas", "--bogus"}).code, kInvalidConfig);
  EXPECT_EQ(run_cli({}).code, kInvalidConfig);
  EXPECT_EQ(run_cli({"simulate", "--format", "xml", "--out", dir()}).code, kInvalidConfig);
  EXPECT_EQ(run_cli({"freq-response", "--n", "4", "--k", "0", "--out", dir()}).code, kInvalidConfig);
  EXPECT_EQ(run_cli({"freq-response", "--n", "1", "--out", dir()}).code, kInvalidConfig);
  EXPECT_EQ(run_cli({"tune", "--kappa", "0"}).code, kInvalidConfig);
  EXPECT_EQ(run_cli({"simulate", "--config", path("missing.json").string()}).code, kInvalidConfig);
  const Outcome guard = run_cli({"simulate", "--dt", "0.01", "--out", dir()});
  EXPECT_EQ(guard.code, kInvalidConfig);
  EXPECT_NE(guard.err.find("simulation.dt"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("errors.csv")));
}

TEST_F(CliTest, DivergenceExitsFourWithoutOutputs) {
  const std::string cfg = write_config(
      {{"chain", {{"n", 3}}},
       {"simulation", {{"t_end", 3.0}, {"disturbances", {{{"vehicle", 0}, {"amplitude", 1e308}}}}}}});
  const Outcome r = run_cli({"simulate", "--config", cfg, "--out", dir()});
  EXPECT_EQ(r.code, kDiverged);
  EXPECT_FALSE(fs::exists(path("errors.csv")));
  EXPECT_FALSE(fs::exists(path("errors.csv.partial")));
  EXPECT_FALSE(fs::exists(path("summary.json")));
}

TEST_F(CliTest, DegeneratePointExitsFive) {
  const Outcome r = run_cli({"freq-response", "--a1", "1", "--b1", "1", "--a2", "1", "--b2", "1", "--omega-min",
                             "1e-12", "--out", dir()});
  EXPECT_EQ(r.code, kDegenerate);
  EXPECT_FALSE(fs::exists(path("bode.csv")));
}
