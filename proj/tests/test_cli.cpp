#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("casimir_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  CliRun run(const std::string& args) const {
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = std::string(CASIMIR_CLI) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::vector<std::vector<double>> read_csv(const std::string& file, std::string* header = nullptr) {
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# schema_version=1");
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json read_json(const std::string& file) {
  std::ifstream in(file);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST_F(Cli, BandGridAndThermalOrdering) {
  ASSERT_EQ(run("band --out " + path("band.csv")).code, 0);
  std::string header;
  const auto hot = read_csv(path("band.csv"), &header);
  EXPECT_EQ(header, "a_nm,fprime_uN_per_m,err_uN_per_m,band_lower,band_upper");
  ASSERT_EQ(hot.size(), 35u);
  for (const auto& r : hot) EXPECT_GT(r[4], r[3]) << r[0];
  EXPECT_DOUBLE_EQ(hot.front()[0], 250.0);
  EXPECT_DOUBLE_EQ(hot.back()[0], 590.0);

  ASSERT_EQ(run("gradient --zero-t --out " + path("cold.csv")).code, 0);
  const auto cold = read_csv(path("cold.csv"));
  ASSERT_EQ(cold.size(), hot.size());
  for (std::size_t i = 0; i < hot.size(); ++i) EXPECT_GE(hot[i][1], cold[i][1]) << hot[i][0];

  const auto side = read_json(path("band.csv.json"));
  EXPECT_EQ(side["schema_version"], 1);
  EXPECT_EQ(side["system"]["temperature_K"], 294.0);
  EXPECT_EQ(side["results"].size(), 35u);
  EXPECT_FALSE(side.contains("threads"));
}

TEST_F(Cli, MalformedMaterialFile) {
  {
    std::ofstream f(path("bad.csv"));
    f << "energy_ev,im_eps\n1.0,0.5\nabc,1.0\n";
  }
  const auto r = run("gradient --a-start-nm 300 --a-stop-nm 300 --metal-table " + path("bad.csv") + " --out " +
                     path("g.csv"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("material load"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("g.csv")));
}

TEST_F(Cli, ConfigErrors) {
  EXPECT_EQ(run("gradient --a-step-nm 0").code, 2);
  EXPECT_EQ(run("gradient --a-start-nm 400 --a-stop-nm 300").code, 2);
  EXPECT_EQ(run("gradient --no-such-flag").code, 2);
  EXPECT_EQ(run("gradient --metal-table " + path("missing.csv")).code, 2);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, ConfigFilePrecedence) {
  {
    std::ofstream f(path("run.cfg"));
    f << "mu-ev=0.2\ndelta-ev=0.05\na-start-nm=300\na-stop-nm=300\n";
  }
  ASSERT_EQ(run("gradient --config " + path("run.cfg") + " --out " + path("a.csv")).code, 0);
  ASSERT_EQ(run("gradient --config " + path("run.cfg") + " --mu-ev 0.25 --out " + path("b.csv")).code, 0);
  const auto a = read_json(path("a.csv.json"));
  const auto b = read_json(path("b.csv.json"));
  EXPECT_EQ(a["system"]["graphene"]["mu_eV"], 0.2);
  EXPECT_EQ(b["system"]["graphene"]["mu_eV"], 0.25);
  EXPECT_EQ(b["system"]["graphene"]["delta_eV"], 0.05);
  EXPECT_EQ(a["separations_m"].size(), 1u);
}

TEST_F(Cli, DeterministicAcrossThreadCounts) {
  const std::string grid = "--a-start-nm 250 --a-stop-nm 350 --a-step-nm 50 --band";
  ASSERT_EQ(run("gradient " + grid + " --threads 1 --out " + path("one.csv")).code, 0);
  ASSERT_EQ(run("gradient " + grid + " --threads 3 --out " + path("three.csv")).code, 0);
  EXPECT_EQ(slurp(path("one.csv")), slurp(path("three.csv")));
  EXPECT_EQ(slurp(path("one.csv.json")), slurp(path("three.csv.json")));
}

TEST_F(Cli, CalibrateBundledDataset) {
  const std::string data = std::string(CASIMIR_DATA_DIR) + "/calibration_sample.json";
  ASSERT_EQ(run("calibrate --data " + data + " --out " + path("cal.json")).code, 0);
  const auto r = read_json(path("cal.json"));
  const auto truth = r["truth"];
  EXPECT_NEAR(r["z0_m"].get<double>(), truth["z0_m"].get<double>(), 0.6e-9);
  EXPECT_NEAR(r["z0_m"].get<double>(), truth["z0_m"].get<double>(), 3.0 * r["z0_sigma_m"].get<double>());
  EXPECT_NEAR(r["c_factor_s_per_kg"].get<double>(), truth["c_factor_s_per_kg"].get<double>(),
              3.0 * r["c_factor_sigma_s_per_kg"].get<double>());
  EXPECT_NEAR(r["v0_V"].get<double>(), truth["v0_V"].get<double>(), 1e-3);
  EXPECT_TRUE(r["rejected_curves"].empty());
  EXPECT_TRUE(fs::exists(path("cal_v0.csv")));
  EXPECT_TRUE(fs::exists(path("cal_drift.txt")));
  const auto g = read_csv(path("cal_gradient.csv"));
  EXPECT_FALSE(g.empty());

  ASSERT_EQ(run("calibrate --data " + data + " --out " + path("again.json")).code, 0);
  EXPECT_EQ(slurp(path("cal_v0.csv")), slurp(path("again_v0.csv")));
  EXPECT_EQ(slurp(path("cal_gradient.csv")), slurp(path("again_gradient.csv")));
}

TEST_F(Cli, CalibrateReportsCorruptCurve) {
  auto data = read_json(std::string(CASIMIR_DATA_DIR) + "/calibration_sample.json");
  data["curves"][5]["delta_omega_rad_per_s"].erase(3);
  {
    std::ofstream f(path("corrupt.json"));
    f << data.dump();
  }
  const auto r = run("calibrate --data " + path("corrupt.json") + " --out " + path("cal.json"));
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("curve 5"), std::string::npos) << r.err;
  const auto out = read_json(path("cal.json"));
  ASSERT_EQ(out["rejected_curves"].size(), 1u);
  EXPECT_EQ(out["rejected_curves"][0]["index"], 5);
  EXPECT_GT(out["c_factor_s_per_kg"].get<double>(), 0.0);
}

TEST_F(Cli, SynthesizeIsSeeded) {
  const std::string args = "synthesize --a-start-nm 250 --a-stop-nm 300 --a-step-nm 5 --seed 3 --out ";
  ASSERT_EQ(run(args + path("a.json")).code, 0);
  ASSERT_EQ(run(args + path("b.json")).code, 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  const auto d = read_json(path("a.json"));
  EXPECT_EQ(d["curves"].size(), 21u);
  EXPECT_EQ(d["curves"][0]["z_piezo_m"].size(), 11u);
}

TEST_F(Cli, TensorAndPermittivityDumps) {
  ASSERT_EQ(run("pi --points 3 --out " + path("pi.csv")).code, 0);
  std::string header;
  const auto pi = read_csv(path("pi.csv"), &header);
  EXPECT_EQ(header, "xi_rad_per_s,k_perp_per_m,pi00_J_s,pi_J_s_per_m2");
  EXPECT_EQ(pi.size(), 12u);
  for (const auto& r : pi) {
    EXPECT_GT(r[2], 0.0);
    EXPECT_GE(r[3], 0.0);
  }
  ASSERT_EQ(run("epsilon --points 5 --out " + path("eps.csv")).code, 0);
  const auto eps = read_csv(path("eps.csv"));
  ASSERT_EQ(eps.size(), 5u);
  for (std::size_t i = 1; i < eps.size(); ++i) EXPECT_LT(eps[i][1], eps[i - 1][1]);

  ASSERT_EQ(run("epsilon --points 5 --metal-table " + std::string(CASIMIR_DATA_DIR) +
                "/gold_sample.csv --substrate-table " + std::string(CASIMIR_DATA_DIR) +
                "/silica_sample.csv --out " + path("tab.csv"))
                .code,
            0);
  const auto tab = read_csv(path("tab.csv"));
  for (std::size_t i = 0; i < tab.size(); ++i) {
    EXPECT_NEAR(tab[i][1] / eps[i][1], 1.0, 1e-3);
    EXPECT_NEAR(tab[i][2] / eps[i][2], 1.0, 1e-3);
  }
}

TEST_F(Cli, DecomposeColumns) {
  ASSERT_EQ(run("decompose --a-start-nm 400 --a-stop-nm 400 --out " + path("d.csv")).code, 0);
  std::string header;
  const auto d = read_csv(path("d.csv"), &header);
  EXPECT_EQ(header, "a_nm,thermal_fraction,implicit_fraction,explicit_fraction");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NEAR(d[0][2] + d[0][3], 1.0, 1e-12);
  EXPECT_GT(d[0][1], 0.0);
  EXPECT_EQ(run("decompose --zero-t").code, 2);
}
