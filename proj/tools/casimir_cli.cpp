// casimir: batch front end for the force-gradient engine and the
// electrostatic calibration pipeline.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "casimir/calibration.hpp"
#include "casimir/lifshitz.hpp"
#include "casimir/parallel.hpp"
#include "casimir/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace casimir;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kConvergence = 4 };

/// Failure tagged with the pipeline stage it came from.
struct StageError {
  std::string stage;
  int code;
  std::string message;
};

struct Options {
  fs::path out;
  double temperature = 294.0;
  double mu_ev = 0.24;
  double delta_ev = 0.1;
  double a_start_nm = 250.0;
  double a_stop_nm = 590.0;
  double a_step_nm = 10.0;
  double radius_um = 60.35;
  double roughness_sphere_nm = 0.9;
  double roughness_plate_nm = 1.5;
  std::string metal_table;
  std::string substrate_table;
  std::uint64_t seed = 0;
  unsigned threads = default_thread_count();
  bool band = false;
  bool zero_t = false;

  // calibrate / synthesize
  std::string data;
  double drift_rate = 0.0;
  double systematic = 0.0;
  double sigma = 55.3e-3;

  // epsilon / pi
  double xi_min = 1e13;
  double xi_max = 1e17;
  double k_min = 1e5;
  double k_max = 1e9;
  int points = 41;

  // sample-table
  std::string material = "gold";
};

constexpr double kNm = 1e-9;
constexpr double kMicroNewtonPerMeter = 1e-6;

std::vector<double> separation_grid(const Options& o) {
  if (!(o.a_step_nm > 0.0)) throw ConfigError("--a-step-nm must be > 0");
  if (!(o.a_start_nm > 0.0)) throw ConfigError("--a-start-nm must be > 0");
  if (!(o.a_stop_nm >= o.a_start_nm)) throw ConfigError("--a-stop-nm must be >= --a-start-nm");
  const auto n = static_cast<std::size_t>(std::floor((o.a_stop_nm - o.a_start_nm) / o.a_step_nm + 1e-9)) + 1;
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = (o.a_start_nm + o.a_step_nm * static_cast<double>(i)) * kNm;
  return a;
}

Material load_material(const std::string& path, const std::string& label, std::optional<DrudeParams> low) {
  std::ifstream in(path);
  if (!in) throw StageError{"material load", kData, fmt::format("cannot open {}", path)};
  try {
    auto table = load_optical_table(in, label);
    return Material(TabulatedModel{std::move(table), low, 3.0}, label);
  } catch (const Error& e) {
    throw StageError{"material load", kData, fmt::format("{}: {}", path, e.what())};
  }
}

SystemSpec build_system(const Options& o) {
  SystemSpec s;
  s.temperature = o.zero_t ? 0.0 : o.temperature;
  s.geometry.sphere_radius = o.radius_um * 1e-6;
  s.geometry.roughness_sphere = o.roughness_sphere_nm * kNm;
  s.geometry.roughness_plate = o.roughness_plate_nm * kNm;
  s.graphene = GrapheneParams{o.mu_ev, o.delta_ev, kDefaultFermiVelocityRatio};
  if (!o.metal_table.empty()) s.metal = load_material(o.metal_table, "metal", std::get<DrudeModel>(sample_gold()).params);
  if (!o.substrate_table.empty()) s.substrate = load_material(o.substrate_table, "substrate", std::nullopt);
  s.graphene->validate();
  return s;
}

json settings_json(const EngineSettings& s) {
  return {{"k_relative_tolerance", s.k_relative_tolerance},
          {"matsubara_relative_tolerance", s.matsubara_relative_tolerance},
          {"matsubara_consecutive", s.matsubara_consecutive},
          {"xi_relative_tolerance", s.xi_relative_tolerance},
          {"y_cutoff", s.y_cutoff},
          {"l_max_safety", s.l_max_safety},
          {"tensor_relative_tolerance", s.tensor.relative_tolerance},
          {"tensor_fermi_cutoff", s.tensor.fermi_cutoff}};
}

json system_json(const SystemSpec& s) {
  json j;
  j["temperature_K"] = s.temperature;
  j["sphere_radius_m"] = s.geometry.sphere_radius;
  j["roughness_sphere_m"] = s.geometry.roughness_sphere;
  j["roughness_plate_m"] = s.geometry.roughness_plate;
  j["metal"] = to_json(s.metal.model());
  j["substrate"] = to_json(s.substrate.model());
  if (s.graphene) {
    j["graphene"] = {{"mu_eV", s.graphene->mu},
                     {"delta_eV", s.graphene->delta},
                     {"vf_over_c", s.graphene->vf_ratio}};
  }
  return j;
}

json provenance(const std::string& command, const Options& o) {
  json j;
  j["schema_version"] = kCsvSchemaVersion;
  j["program"] = "casimir";
  j["version"] = kVersion;
  j["command"] = command;
  j["seed"] = o.seed;
  return j;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StageError{"output", kConfig, fmt::format("cannot write {}", path.string())};
  out << "# schema_version=" << kCsvSchemaVersion << "\n";
  return out;
}

void write_sidecar(const fs::path& out, const json& j) {
  std::ofstream f(out.string() + ".json", std::ios::binary);
  if (!f) throw StageError{"output", kConfig, fmt::format("cannot write {}.json", out.string())};
  f << j.dump(2) << "\n";
}

std::string num(double v) { return fmt::format("{:.12g}", v); }

// --- gradient / band ------------------------------------------------------

struct GradientRow {
  GradientResult central;
  std::optional<TheoryBand> band;
};

int run_gradient(const Options& o, bool force_band) {
  const bool band = force_band || o.band;
  const auto grid = separation_grid(o);
  const SystemSpec base = build_system(o);
  const EngineSettings settings;
  const BandEdges edges;
  std::vector<GradientRow> rows;
  try {
    rows = parallel_map<GradientRow>(grid.size(), o.threads, [&](std::size_t i) {
      SystemSpec s = base;
      s.geometry.separation = grid[i];
      GradientRow r;
      r.central = force_gradient(s, settings);
      if (band) r.band = theory_band(s, grid[i], edges, settings);
      return r;
    });
  } catch (const ConvergenceError& e) {
    throw StageError{"convergence", kConvergence, e.what()};
  }

  const fs::path out = o.out.empty() ? fs::path(band ? "band.csv" : "gradient.csv") : o.out;
  auto csv = open_output(out);
  csv << "a_nm,fprime_uN_per_m,err_uN_per_m";
  if (band) csv << ",band_lower,band_upper";
  csv << "\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& r = rows[i];
    csv << num(grid[i] / kNm) << "," << num(r.central.value / kMicroNewtonPerMeter) << ","
        << num(r.central.estimated_numerical_error / kMicroNewtonPerMeter);
    if (r.band) {
      csv << "," << num(r.band->lower / kMicroNewtonPerMeter) << ","
          << num(r.band->upper / kMicroNewtonPerMeter);
    }
    csv << "\n";
  }

  json side = provenance(band && force_band ? "band" : "gradient", o);
  side["system"] = system_json(base);
  side["engine"] = settings_json(settings);
  side["separations_m"] = grid;
  side["band"] = band;
  if (band) {
    side["band_edges"] = {{"upper", {{"mu_eV", edges.upper.mu}, {"delta_eV", edges.upper.delta}}},
                          {"lower", {{"mu_eV", edges.lower.mu}, {"delta_eV", edges.lower.delta}}},
                          {"padding", edges.padding},
                          {"lower_pfa_factor", "1 - a/R"},
                          {"roughness", "1 + 10 (ds^2 + dg^2) / a^2"}};
  }
  json results = json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    json r = {{"a_m", grid[i]},
              {"fprime_N_per_m", rows[i].central.value},
              {"error_N_per_m", rows[i].central.estimated_numerical_error},
              {"matsubara_terms", rows[i].central.matsubara_terms_used}};
    if (rows[i].band) {
      r["band_lower_N_per_m"] = rows[i].band->lower;
      r["band_upper_N_per_m"] = rows[i].band->upper;
    }
    results.push_back(r);
  }
  side["results"] = results;
  write_sidecar(out, side);
  return kOk;
}

// --- decompose ------------------------------------------------------------

int run_decompose(const Options& o) {
  if (o.zero_t || !(o.temperature > 0.0)) throw ConfigError("decompose needs a temperature > 0");
  const auto grid = separation_grid(o);
  const SystemSpec base = build_system(o);
  const EngineSettings settings;
  std::vector<MatsubaraDecomposition> rows;
  try {
    rows = parallel_map<MatsubaraDecomposition>(grid.size(), o.threads, [&](std::size_t i) {
      return matsubara_decomposition(base, grid[i], settings);
    });
  } catch (const ConvergenceError& e) {
    throw StageError{"convergence", kConvergence, e.what()};
  }
  const fs::path out = o.out.empty() ? fs::path("decompose.csv") : o.out;
  auto csv = open_output(out);
  csv << "a_nm,thermal_fraction,implicit_fraction,explicit_fraction\n";
  json results = json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& d = rows[i];
    csv << num(grid[i] / kNm) << "," << num(d.thermal_fraction) << "," << num(d.implicit_fraction) << ","
        << num(d.explicit_fraction) << "\n";
    results.push_back({{"a_m", grid[i]},
                       {"fprime_T_N_per_m", d.gradient_t},
                       {"fprime_zero_N_per_m", d.gradient_zero},
                       {"fprime_hybrid_N_per_m", d.gradient_hybrid},
                       {"thermal_fraction", d.thermal_fraction},
                       {"implicit_fraction", d.implicit_fraction},
                       {"explicit_fraction", d.explicit_fraction}});
  }
  json side = provenance("decompose", o);
  side["system"] = system_json(base);
  side["engine"] = settings_json(settings);
  side["separations_m"] = grid;
  side["results"] = results;
  write_sidecar(out, side);
  return kOk;
}

// --- calibrate ------------------------------------------------------------

fs::path sibling(const fs::path& out, const std::string& suffix) {
  fs::path p = out;
  p.replace_extension();
  return p.string() + suffix;
}

int run_calibrate(const Options& o) {
  if (o.data.empty()) throw ConfigError("calibrate needs --data");
  ShiftDataset data;
  try {
    std::ifstream in(o.data);
    if (!in) throw DataError(fmt::format("cannot open {}", o.data));
    data = dataset_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw StageError{"dataset load", kData, fmt::format("{}: {}", o.data, e.what())};
  } catch (const DataError& e) {
    throw StageError{"dataset load", kData, e.what()};
  }

  CalibrationOptions opt;
  opt.drift_rate = o.drift_rate;
  CalibrationResult result;
  std::vector<MeasuredGradient> gradients;
  try {
    result = calibrate(data, opt);
    gradients = casimir_gradients(data, result, o.systematic, opt);
  } catch (const DataError& e) {
    throw StageError{"calibration fit", kData, e.what()};
  } catch (const ConvergenceError& e) {
    throw StageError{"calibration fit", kConvergence, e.what()};
  }

  const fs::path out = o.out.empty() ? fs::path("calibration.json") : o.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());

  json j = to_json(result);
  j["provenance"] = provenance("calibrate", o);
  j["provenance"]["dataset"] = fs::path(o.data).filename().string();
  j["provenance"]["drift_rate_rad_per_s_per_sample"] = o.drift_rate;
  j["provenance"]["systematic_N_per_m"] = o.systematic;
  j["provenance"]["curves"] = data.curves.size();
  if (data.truth) {
    j["truth"] = {{"v0_V", data.truth->v0}, {"z0_m", data.truth->z0}, {"c_factor_s_per_kg", data.truth->c_factor}};
  }
  {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw StageError{"output", kConfig, fmt::format("cannot write {}", out.string())};
    f << j.dump(2) << "\n";
  }

  {
    auto csv = open_output(sibling(out, "_v0.csv"));
    csv << "z_piezo_nm,a_nm,v0_V,v0_sigma_V,curvature_rad_per_s_V2,curvature_sigma\n";
    for (const auto& s : result.per_separation) {
      csv << num(s.z_piezo / kNm) << "," << num(s.separation / kNm) << "," << num(s.parabola.v0) << ","
          << num(s.parabola.v0_sigma) << "," << num(s.parabola.curvature) << ","
          << num(s.parabola.curvature_sigma) << "\n";
    }
  }
  {
    auto csv = open_output(sibling(out, "_gradient.csv"));
    csv << "a_nm,fprime_uN_per_m,err_uN_per_m,channels\n";
    for (const auto& g : gradients) {
      csv << num(g.separation / kNm) << "," << num(g.gradient / kMicroNewtonPerMeter) << ","
          << num(g.total_error / kMicroNewtonPerMeter) << "," << g.channels << "\n";
    }
  }
  {
    std::ofstream f(sibling(out, "_drift.txt"), std::ios::binary);
    const auto& d = result.drift;
    f << fmt::format("v0(a) = d + theta a\n");
    f << fmt::format("d = {:.6g} +- {:.2g} V\n", d.intercept, d.intercept_sigma);
    f << fmt::format("theta = {:.6g} +- {:.2g} V/nm\n", d.slope * kNm, d.slope_sigma * kNm);
    f << fmt::format("scatter = {:.3g} V over {:.1f} nm\n", d.scatter, d.range / kNm);
    f << fmt::format("flat = {}\n", d.flat ? "yes" : "no");
  }

  fmt::print("V0 = {:.6g} +- {:.2g} V\n", result.v0, result.v0_sigma);
  fmt::print("z0 = {:.6g} +- {:.2g} nm\n", result.z0 / kNm, result.z0_sigma / kNm);
  fmt::print("C  = {:.6g} +- {:.2g} s/kg\n", result.c_factor, result.c_factor_sigma);
  if (!result.rejected.empty()) {
    for (const auto& c : result.rejected) {
      fmt::print(stderr, "error [calibration]: curve {} rejected: {}\n", c.index, c.reason);
    }
    return kData;
  }
  return kOk;
}

// --- synthesize -----------------------------------------------------------

int run_synthesize(const Options& o) {
  const CalibrationTruth truth;
  const double radius = o.radius_um * 1e-6;
  const double lo = o.a_start_nm * kNm;
  const double hi = o.a_stop_nm * kNm;
  if (!(o.a_step_nm > 0.0) || !(hi > lo)) throw ConfigError("synthesize needs a_stop > a_start and step > 0");

  // Engine on a 10 nm mesh, cubic spline of log F' in between.
  SystemSpec base = build_system(o);
  const double mesh = 10.0 * kNm;
  const auto nodes = static_cast<std::size_t>(std::ceil((hi - lo) / mesh)) + 1;
  std::vector<double> log_f;
  try {
    log_f = parallel_map<double>(nodes, o.threads, [&](std::size_t i) {
      SystemSpec s = base;
      s.geometry.separation = lo + mesh * static_cast<double>(i);
      return std::log(force_gradient(s).value);
    });
  } catch (const ConvergenceError& e) {
    throw StageError{"convergence", kConvergence, e.what()};
  }
  boost::math::interpolators::cardinal_cubic_b_spline<double> spline(log_f.begin(), log_f.end(), lo, mesh);
  auto model = [&](double a) { return std::exp(spline(a)); };

  const auto grid = piezo_grid(truth.z0, lo, hi, o.a_step_nm * kNm);
  auto data = synthesize_dataset(truth, model, standard_voltage_plan(truth.v0), {o.sigma, o.seed, o.drift_rate},
                                 grid, radius);
  const fs::path out = o.out.empty() ? fs::path("dataset.json") : o.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  json j = to_json(data);
  j["provenance"] = provenance("synthesize", o);
  j["provenance"]["system"] = system_json(base);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw StageError{"output", kConfig, fmt::format("cannot write {}", out.string())};
  f << j.dump() << "\n";
  return kOk;
}

// --- epsilon / pi / sample-table ------------------------------------------

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0 && hi > lo) || n < 2) throw ConfigError("log grid needs 0 < min < max and >= 2 points");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return v;
}

int run_epsilon(const Options& o) {
  const SystemSpec s = build_system(o);
  const auto xi = log_grid(o.xi_min, o.xi_max, o.points);
  std::vector<std::pair<double, double>> rows;
  try {
    rows = parallel_map<std::pair<double, double>>(xi.size(), o.threads, [&](std::size_t i) {
      return std::pair{s.metal.at(xi[i]).value(), s.substrate.at(xi[i]).value()};
    });
  } catch (const ConvergenceError& e) {
    throw StageError{"convergence", kConvergence, e.what()};
  }
  const fs::path out = o.out.empty() ? fs::path("epsilon.csv") : o.out;
  auto csv = open_output(out);
  csv << "xi_rad_per_s,eps_metal,eps_substrate\n";
  for (std::size_t i = 0; i < xi.size(); ++i) {
    csv << num(xi[i]) << "," << num(rows[i].first) << "," << num(rows[i].second) << "\n";
  }
  json side = provenance("epsilon", o);
  side["metal"] = to_json(s.metal.model());
  side["substrate"] = to_json(s.substrate.model());
  side["xi_rad_per_s"] = xi;
  write_sidecar(out, side);
  return kOk;
}

int run_pi(const Options& o) {
  const SystemSpec s = build_system(o);
  auto xi = log_grid(o.xi_min, o.xi_max, o.points);
  xi.insert(xi.begin(), 0.0);
  const auto k = log_grid(o.k_min, o.k_max, o.points);
  const double t = s.temperature;
  std::vector<PolarizationComponents> cells;
  try {
    cells = parallel_map<PolarizationComponents>(xi.size() * k.size(), o.threads, [&](std::size_t n) {
      const SpectralPoint p{xi[n / k.size()], k[n % k.size()]};
      return t > 0.0 ? pi_full(p, *s.graphene, t) : pi_full_T0(p, *s.graphene);
    });
  } catch (const ConvergenceError& e) {
    throw StageError{"convergence", kConvergence, e.what()};
  }
  const fs::path out = o.out.empty() ? fs::path("pi.csv") : o.out;
  auto csv = open_output(out);
  csv << "xi_rad_per_s,k_perp_per_m,pi00_J_s,pi_J_s_per_m2\n";
  for (std::size_t n = 0; n < cells.size(); ++n) {
    csv << num(xi[n / k.size()]) << "," << num(k[n % k.size()]) << "," << num(cells[n].pi00) << ","
        << num(cells[n].pi) << "\n";
  }
  json side = provenance("pi", o);
  side["temperature_K"] = t;
  side["graphene"] = system_json(s)["graphene"];
  write_sidecar(out, side);
  return kOk;
}

int run_sample_table(const Options& o) {
  std::function<double(double)> absorption;
  if (o.material == "gold") {
    const DrudeParams p = std::get<DrudeModel>(sample_gold()).params;
    absorption = [p](double w) { return drude_absorption(p, w); };
  } else if (o.material == "silica") {
    const auto osc = std::get<LorentzModel>(sample_silica()).oscillators;
    absorption = [osc](double w) { return lorentz_absorption(osc, w); };
  } else {
    throw ConfigError(fmt::format("unknown sample material '{}' (gold, silica)", o.material));
  }
  std::vector<OpticalPoint> pts;
  for (double w : log_grid(1e-3, 1e4, 2801)) pts.push_back({w, absorption(w)});
  const OpticalTable table(std::move(pts), o.material + " sample absorption");
  const fs::path out = o.out.empty() ? fs::path(o.material + "_sample.csv") : o.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream f(out, std::ios::binary);
  if (!f) throw StageError{"output", kConfig, fmt::format("cannot write {}", out.string())};
  write_optical_table(f, table);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Casimir force gradient between a metal sphere and a graphene-coated plate"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "flat key=value file; command-line flags take precedence");
  app.require_subcommand(1);

  Options o;
  std::string out;
  app.add_option("--out", out, "primary output file");
  app.add_option("--temperature", o.temperature, "temperature, K")->capture_default_str();
  app.add_option("--mu-ev", o.mu_ev, "graphene chemical potential, eV")->capture_default_str();
  app.add_option("--delta-ev", o.delta_ev, "graphene gap, eV")->capture_default_str();
  app.add_option("--a-start-nm", o.a_start_nm)->capture_default_str();
  app.add_option("--a-stop-nm", o.a_stop_nm)->capture_default_str();
  app.add_option("--a-step-nm", o.a_step_nm)->capture_default_str();
  app.add_option("--radius-um", o.radius_um, "sphere radius, um")->capture_default_str();
  app.add_option("--roughness-sphere-nm", o.roughness_sphere_nm)->capture_default_str();
  app.add_option("--roughness-plate-nm", o.roughness_plate_nm)->capture_default_str();
  app.add_option("--metal-table", o.metal_table, "Im eps table for the sphere metal")->check(CLI::ExistingFile);
  app.add_option("--substrate-table", o.substrate_table, "Im eps table for the substrate")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed)->capture_default_str();
  app.add_option("--threads", o.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_flag("--band", o.band, "add theory band columns");
  app.add_flag("--zero-t", o.zero_t, "evaluate at T = 0");
  app.add_option("--data", o.data, "calibration dataset (JSON)")->check(CLI::ExistingFile);
  app.add_option("--drift-rate", o.drift_rate, "linear drift, rad/s per sample")->capture_default_str();
  app.add_option("--systematic", o.systematic, "systematic error added to gradients, N/m")->capture_default_str();
  app.add_option("--sigma", o.sigma, "synthesis noise, rad/s")->capture_default_str();
  app.add_option("--xi-min", o.xi_min)->capture_default_str();
  app.add_option("--xi-max", o.xi_max)->capture_default_str();
  app.add_option("--k-min", o.k_min)->capture_default_str();
  app.add_option("--k-max", o.k_max)->capture_default_str();
  app.add_option("--points", o.points)->capture_default_str();
  app.add_option("--material", o.material, "gold or silica")->capture_default_str();

  auto sub = [&](const char* name, const char* help) { return app.add_subcommand(name, help)->fallthrough(); };
  auto* gradient = sub("gradient", "force gradient over a separation grid");
  auto* band = sub("band", "force gradient with theory band columns");
  auto* decompose = sub("decompose", "thermal fraction and its implicit/explicit split");
  auto* calibrate_cmd = sub("calibrate", "electrostatic calibration of a frequency-shift dataset");
  auto* synthesize = sub("synthesize", "synthetic frequency-shift dataset");
  auto* epsilon = sub("epsilon", "eps(i xi) of the metal and substrate");
  auto* pi = sub("pi", "graphene polarization tensor grid");
  auto* sample = sub("sample-table", "write a sample absorption table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fmt::print(stderr, "error [parse]: {}\n", e.what());
    return kConfig;
  }
  o.out = out;

  try {
    if (gradient->parsed()) return run_gradient(o, false);
    if (band->parsed()) return run_gradient(o, true);
    if (decompose->parsed()) return run_decompose(o);
    if (calibrate_cmd->parsed()) return run_calibrate(o);
    if (synthesize->parsed()) return run_synthesize(o);
    if (epsilon->parsed()) return run_epsilon(o);
    if (pi->parsed()) return run_pi(o);
    if (sample->parsed()) return run_sample_table(o);
  } catch (const StageError& e) {
    fmt::print(stderr, "error [{}]: {}\n", e.stage, e.message);
    return e.code;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error [config]: {}\n", e.what());
    return kConfig;
  } catch (const DataError& e) {
    fmt::print(stderr, "error [data]: {}\n", e.what());
    return kData;
  } catch (const ConvergenceError& e) {
    fmt::print(stderr, "error [convergence]: {}\n", e.what());
    return kConvergence;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error [internal]: {}\n", e.what());
    return 1;
  }
  return kConfig;
}
