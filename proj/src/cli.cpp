#include "vbsim/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "vbsim/csv_io.hpp"
#include "vbsim/error.hpp"
#include "vbsim/odmr_engine.hpp"
#include "vbsim/parallel.hpp"
#include "vbsim/units.hpp"

namespace vbsim::cli {

namespace {

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
    throw InputError(fmt::format("{}: '{}' is not a finite number", what, text));
  return v;
}

std::vector<std::string> split_colon(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  return parts;
}

std::optional<std::filesystem::path> find_config_path(const std::vector<std::string>& argv) {
  for (std::size_t i = 1; i < argv.size(); ++i) {
    const std::string& a = argv[i];
    if (a == "--config" && i + 1 < argv.size()) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  if (const char* env = std::getenv("VBSIM_CONFIG"); env != nullptr && *env != '\0')
    return std::filesystem::path(env);
  return std::nullopt;
}

// Writes via `body` to the file at `path`, or to `fallback` when path is empty.
template <typename Body>
void emit(const std::string& path, std::ostream& fallback, Body&& body) {
  if (path.empty()) {
    body(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InputError(fmt::format("cannot open '{}' for writing", path));
  body(file);
  if (!file) throw InputError(fmt::format("failed writing '{}'", path));
}

template <typename Reader>
auto read_file(const std::string& path, Reader&& reader) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw InputError(fmt::format("cannot open '{}'", path));
  return reader(file);
}

void print_kv(std::ostream& out, const char* key, double value) {
  fmt::print(out, "{}={}\n", key, csv::format_number(value));
}

struct EnvFlags {
  std::string positions = "ball";
};

void add_environment_options(CLI::App& sub, RunConfig& cfg, EnvFlags& flags) {
  sub.add_option("--radius", cfg.env.radius_nm, "Simulation sphere radius (nm)")
      ->capture_default_str();
  sub.add_option("--eps-r", cfg.env.eps_r, "Relative permittivity")->capture_default_str();
  sub.add_option("--exclusion", cfg.env.exclusion_nm, "Exclusion radius around the defect (nm)")
      ->capture_default_str();
  sub.add_option("--lattice-a", cfg.env.lattice.a_nm, "In-plane lattice constant (nm)")
      ->capture_default_str();
  sub.add_option("--interlayer", cfg.env.lattice.interlayer_nm, "Interlayer spacing (nm)")
      ->capture_default_str();
  sub.add_option("--positions", flags.positions,
                 "Charge position law: ball (uniform in sphere) or gaussian (standard normal, nm)")
      ->check(CLI::IsMember({"ball", "gaussian"}))
      ->capture_default_str();
  sub.add_option("--linewidth", cfg.linewidth_mhz, "Lorentzian half width at half maximum (MHz)")
      ->capture_default_str();
}

void finish_environment(RunConfig& cfg, const EnvFlags& flags) {
  cfg.env.law = flags.positions == "gaussian" ? PositionLaw::gaussian_nm : PositionLaw::uniform_ball;
}

}  // namespace

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = {
      "d0_preset",    "radius_nm", "eps_r",   "exclusion_nm",  "lattice_a_nm",  "interlayer_nm",
      "n_configs",    "linewidth_mhz", "rho_min", "rho_max", "contrast_min", "contrast_max",
      "threads"};
  return keys;
}

void apply_config(const KeyValueMap& kv, RunConfig& cfg) {
  for (const auto& [key, value] : kv) {
    const bool is_constant =
        std::find(kConstantKeys.begin(), kConstantKeys.end(), key) != kConstantKeys.end();
    const auto& run_keys = run_config_keys();
    if (!is_constant && std::find(run_keys.begin(), run_keys.end(), key) == run_keys.end())
      throw InputError(fmt::format("config: unknown key '{}'", key));
  }
  if (auto it = kv.find("d0_preset"); it != kv.end())
    cfg.constants.d0_mhz = CouplingConstants::d0_for(parse_d0_preset(it->second));
  cfg.constants = apply_constants(kv, cfg.constants);

  auto num = [&](const char* key, auto& slot) {
    if (auto it = kv.find(key); it != kv.end()) {
      const double v = parse_number(it->second, key);
      using T = std::remove_reference_t<decltype(slot)>;
      if constexpr (std::is_integral_v<T>) {
        if (v < 0 || v != std::floor(v))
          throw InputError(fmt::format("config key '{}' must be a non-negative integer", key));
      }
      slot = static_cast<T>(v);
    }
  };
  num("radius_nm", cfg.env.radius_nm);
  num("eps_r", cfg.env.eps_r);
  num("exclusion_nm", cfg.env.exclusion_nm);
  num("lattice_a_nm", cfg.env.lattice.a_nm);
  num("interlayer_nm", cfg.env.lattice.interlayer_nm);
  num("n_configs", cfg.n_configs);
  num("linewidth_mhz", cfg.linewidth_mhz);
  num("rho_min", cfg.rho_min);
  num("rho_max", cfg.rho_max);
  num("contrast_min", cfg.contrast_min);
  num("contrast_max", cfg.contrast_max);
  num("threads", cfg.threads);
}

std::vector<double> parse_linspace(const std::string& spec) {
  const auto parts = split_colon(spec);
  if (parts.size() != 3) throw InputError(fmt::format("expected lo:hi:n, got '{}'", spec));
  const double lo = parse_number(parts[0], "range start");
  const double hi = parse_number(parts[1], "range end");
  const double n_raw = parse_number(parts[2], "range count");
  if (n_raw < 1 || n_raw != std::floor(n_raw))
    throw InputError(fmt::format("range count must be a positive integer, got '{}'", parts[2]));
  const auto n = static_cast<std::size_t>(n_raw);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

std::pair<double, double> parse_range(const std::string& spec) {
  const auto parts = split_colon(spec);
  if (parts.size() != 2) throw InputError(fmt::format("expected lo:hi, got '{}'", spec));
  return {parse_number(parts[0], "range start"), parse_number(parts[1], "range end")};
}

int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::string preset;
  try {
    cfg.config_path = find_config_path(argv);
    if (cfg.config_path) apply_config(read_key_value_file(*cfg.config_path), cfg);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Spin-defect zero-field splitting, ODMR synthesis and fitting"};
  app.name(argv.empty() ? "vbsim" : argv.front());
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_flag;
  app.add_option("--config", config_flag,
                 "INI-style config file (default: $VBSIM_CONFIG); flags override its values");
  app.add_option("--preset", preset, "D0 preset: experimental (3470 MHz) or flake-theory (3263 MHz)")
      ->check(CLI::IsMember({"experimental", "flake-theory"}));
  app.add_option("--threads", cfg.threads, "Worker threads (default: all cores)")
      ->check(CLI::PositiveNumber);

  // zfs
  StrainTensor2D strain;
  StressTensor2D stress;
  ElectricFieldVec efield;
  double detuning = 0.0;
  auto* zfs = app.add_subcommand("zfs", "Resonances for a given strain, stress and electric field");
  zfs->add_option("--strain-xx", strain.exx, "Strain exx");
  zfs->add_option("--strain-yy", strain.eyy, "Strain eyy");
  zfs->add_option("--strain-xy", strain.exy, "Strain exy (= eyx)");
  zfs->add_option("--stress-xx", stress.sxx, "Stress sxx (GPa)");
  zfs->add_option("--stress-yy", stress.syy, "Stress syy (GPa)");
  zfs->add_option("--efield-x", efield.ex, "Electric field Ex (V/cm)");
  zfs->add_option("--efield-y", efield.ey, "Electric field Ey (V/cm)");
  zfs->add_option("--efield-z", efield.ez, "Electric field Ez (V/cm); does not couple");
  zfs->add_option("--detuning", detuning, "Extra Sz detuning, e.g. hyperfine A*m (MHz)");

  // convert-stress
  std::optional<double> conv_sxx;
  std::optional<double> conv_syy;
  std::optional<double> conv_exx;
  std::optional<double> conv_eyy;
  std::optional<double> sigma_g1;
  std::optional<double> sigma_g2;
  auto* conv = app.add_subcommand("convert-stress", "Print stress couplings h1, h2 and convert stress <-> strain");
  conv->add_option("--stress-xx", conv_sxx, "Stress sxx to convert to strain (GPa)");
  conv->add_option("--stress-yy", conv_syy, "Stress syy to convert to strain (GPa)");
  conv->add_option("--strain-xx", conv_exx, "Strain exx to convert to stress");
  conv->add_option("--strain-yy", conv_eyy, "Strain eyy to convert to stress");
  conv->add_option("--sigma-g1", sigma_g1, "One-sigma error of g1 (GHz/strain)");
  conv->add_option("--sigma-g2", sigma_g2, "One-sigma error of g2 (GHz/strain)");

  // scatter
  std::string kind_name;
  std::string mags_spec;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
  std::string out_path;
  auto* scatter = app.add_subcommand("scatter", "Level scatter of random strain or electric-field environments");
  scatter->add_option("--kind", kind_name, "strain or electric")
      ->required()
      ->check(CLI::IsMember({"strain", "electric"}));
  scatter->add_option("--mags", mags_spec, "Magnitudes lo:hi:n (strain or V/cm)")->required();
  scatter->add_option("--n", n_samples, "Samples per magnitude")->capture_default_str();
  scatter->add_option("--seed", seed, "Random seed")->required();
  scatter->add_option("--out", out_path, "Output CSV (default: stdout)");

  // synth
  double rho = 0.0;
  double contrast = 0.05;
  double step = 1.0;
  double half_span = 0.0;
  std::size_t n_configs_flag = 0;
  bool fast = false;
  std::string dump_path;
  EnvFlags env_flags;
  auto* synth = app.add_subcommand("synth", "Synthesize a zero-field ODMR spectrum from the charge model");
  synth->add_option("--rho", rho, "Charge density (nm^-3)")->required();
  synth->add_option("--contrast", contrast, "ODMR contrast")->capture_default_str();
  synth->add_option("--step", step, "Frequency grid step (MHz)")->capture_default_str();
  synth->add_option("--half-span", half_span,
                    "Grid half width around D0 (MHz; default 3A + 5 linewidth + 300)");
  synth->add_option("--n-configs", n_configs_flag, "Charge configurations (default 10000)");
  synth->add_flag("--fast", fast, "Use 1000 configurations unless --n-configs is given");
  synth->add_option("--seed", seed, "Random seed")->required();
  synth->add_option("--out", out_path, "Output CSV (default: stdout)");
  synth->add_option("--dump-charges", dump_path, "Write configuration 0 as CSV");
  add_environment_options(*synth, cfg, env_flags);

  // fit
  std::string input_path;
  std::string rho_range;
  std::string contrast_range;
  std::size_t grid_points = 21;
  auto* fit = app.add_subcommand("fit", "Fit charge density and contrast to a measured spectrum");
  fit->add_option("--input", input_path, "Measured spectrum CSV (freq_mhz,signal)")->required();
  fit->add_option("--rho-range", rho_range, "Initial rho_c range lo:hi (nm^-3)");
  fit->add_option("--contrast-range", contrast_range, "Initial contrast range lo:hi");
  fit->add_option("--grid", grid_points, "Grid points per axis and cycle (odd)")->capture_default_str();
  fit->add_option("--n-configs", n_configs_flag, "Charge configurations per candidate (default 10000)");
  fit->add_flag("--fast", fast, "Use 1000 configurations unless --n-configs is given");
  fit->add_option("--seed", seed, "Random seed")->required();
  fit->add_option("--out", out_path, "Output key=value file (default: stdout)");
  add_environment_options(*fit, cfg, env_flags);

  // pl-density
  std::vector<std::string> pl_inputs;
  auto* pl = app.add_subcommand("pl-density", "Relative defect densities from PL-vs-power slopes");
  pl->add_option("--input", pl_inputs, "PL CSV files (power_mw,pl); the first is the reference")
      ->required();

  // local-strain
  std::vector<double> ref_vertices;
  std::vector<double> def_vertices;
  auto* local = app.add_subcommand("local-strain", "Strain tensor from a deformed triangle");
  local->add_option("--ref", ref_vertices, "Reference vertices x0,y0,x1,y1,x2,y2 (nm)")
      ->required()
      ->delimiter(',')
      ->expected(6);
  local->add_option("--deformed", def_vertices, "Deformed vertices x0,y0,x1,y1,x2,y2 (nm)")
      ->required()
      ->delimiter(',')
      ->expected(6);

  std::vector<const char*> cargv;
  cargv.reserve(argv.size());
  for (const auto& a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (!preset.empty()) cfg.constants.d0_mhz = CouplingConstants::d0_for(parse_d0_preset(preset));
    const unsigned threads = cfg.threads == 0 ? default_thread_count() : cfg.threads;
    const CouplingConstants& k = cfg.constants;

    if (zfs->parsed()) {
      ZfsParameters p{k.d0_mhz, 0.0, 0.0};
      p += strain_perturbation(strain, k);
      p += stress_perturbation(stress, k);
      p += electric_perturbation(efield, k);
      const Resonances r = resonance_frequencies(build_hamiltonian(p, detuning));
      print_kv(out, "d_mhz", p.d);
      print_kv(out, "e1_mhz", p.e1);
      print_kv(out, "e2_mhz", p.e2);
      print_kv(out, "e_eff_mhz", p.e_eff());
      print_kv(out, "f_minus_mhz", r.f_minus);
      print_kv(out, "f_plus_mhz", r.f_plus);
      return kExitOk;
    }

    if (conv->parsed()) {
      const StressCouplings h = stress_couplings(k);
      print_kv(out, "h1_mhz_per_gpa", h.h1_mhz_per_gpa);
      print_kv(out, "h2_mhz_per_gpa", h.h2_mhz_per_gpa);
      if (sigma_g1 || sigma_g2) {
        const StressCouplings dh = stress_coupling_errors(units::ghz_to_mhz(sigma_g1.value_or(0.0)),
                                                          units::ghz_to_mhz(sigma_g2.value_or(0.0)), k);
        print_kv(out, "h1_sigma_mhz_per_gpa", dh.h1_mhz_per_gpa);
        print_kv(out, "h2_sigma_mhz_per_gpa", dh.h2_mhz_per_gpa);
      }
      if (conv_sxx || conv_syy) {
        const StrainTensor2D e = strain_from_stress({conv_sxx.value_or(0.0), conv_syy.value_or(0.0)}, k);
        print_kv(out, "strain_xx", e.exx);
        print_kv(out, "strain_yy", e.eyy);
      }
      if (conv_exx || conv_eyy) {
        const StressTensor2D s = stress_from_strain({conv_exx.value_or(0.0), conv_eyy.value_or(0.0), 0.0}, k);
        print_kv(out, "stress_xx_gpa", s.sxx);
        print_kv(out, "stress_yy_gpa", s.syy);
      }
      return kExitOk;
    }

    if (scatter->parsed()) {
      const auto mags = parse_linspace(mags_spec);
      const ScatterDataset data =
          scatter_levels(parse_perturbation_kind(kind_name), mags, n_samples, k, seed);
      emit(out_path, out, [&](std::ostream& os) { csv::write_scatter(os, data); });
      return kExitOk;
    }

    const std::size_t n_configs =
        n_configs_flag > 0 ? n_configs_flag : (fast ? std::size_t{1000} : cfg.n_configs);

    if (synth->parsed()) {
      finish_environment(cfg, env_flags);
      SynthesisConfig sc;
      sc.rho_c = rho;
      sc.contrast = contrast;
      sc.linewidth_mhz = cfg.linewidth_mhz;
      sc.n_configs = n_configs;
      sc.env = cfg.env;
      sc.seed = seed;
      sc.threads = threads;
      const double span =
          half_span > 0.0 ? half_span : required_half_span(k, cfg.linewidth_mhz) + 300.0;
      sc.grid = FrequencyGrid::centered(k.d0_mhz, span, step);
      const Synthesis result = synthesize_spectrum(sc, k);
      emit(out_path, out, [&](std::ostream& os) { csv::write_spectrum(os, result.spectrum); });
      if (!dump_path.empty()) {
        const ChargeConfiguration c0 = generate_configuration(rho, cfg.env, seed, 0);
        emit(dump_path, out, [&](std::ostream& os) { write_charge_csv(os, c0); });
      }
      if (!out_path.empty()) {
        print_kv(out, "mean_e_eff_mhz", result.mean_e_eff_mhz);
        print_kv(out, "mean_centroid_shift_mhz", result.mean_centroid_shift_mhz);
      }
      return kExitOk;
    }

    if (fit->parsed()) {
      finish_environment(cfg, env_flags);
      FitConfig fc;
      std::tie(fc.rho_min, fc.rho_max) =
          rho_range.empty() ? std::pair{cfg.rho_min, cfg.rho_max} : parse_range(rho_range);
      std::tie(fc.contrast_min, fc.contrast_max) =
          contrast_range.empty() ? std::pair{cfg.contrast_min, cfg.contrast_max}
                                 : parse_range(contrast_range);
      fc.grid_points = grid_points;
      fc.linewidth_mhz = cfg.linewidth_mhz;
      fc.n_configs = n_configs;
      fc.env = cfg.env;
      fc.threads = threads;
      const OdmrSpectrum measured =
          read_file(input_path, [](std::istream& is) { return csv::read_spectrum(is); });
      const FitResult result = fit_spectrum(measured, fc, k, seed);
      emit(out_path, out, [&](std::ostream& os) { csv::write_fit_result(os, result); });
      if (result.at_boundary) {
        err << "error: best fit lies on the grid boundary (" << result.boundary_note
            << "); widen the search range\n";
        return kExitNumerical;
      }
      return kExitOk;
    }

    if (pl->parsed()) {
      std::vector<std::vector<Sample>> series;
      for (const auto& path : pl_inputs)
        series.push_back(read_file(path, [](std::istream& is) { return csv::read_pl_series(is); }));
      const auto ratios = relative_densities(series);
      for (std::size_t i = 0; i < series.size(); ++i) {
        fmt::print(out, "slope_{}={}\n", i, csv::format_number(relative_density_from_pl(series[i]).slope));
        fmt::print(out, "relative_density_{}={}\n", i, csv::format_number(ratios[i]));
      }
      return kExitOk;
    }

    if (local->parsed()) {
      auto tri = [](const std::vector<double>& v) {
        return Triangle{Point2{v[0], v[1]}, Point2{v[2], v[3]}, Point2{v[4], v[5]}};
      };
      const StrainTensor2D e = local_strain_from_triangle(tri(ref_vertices), tri(def_vertices));
      print_kv(out, "strain_xx", e.exx);
      print_kv(out, "strain_yy", e.eyy);
      print_kv(out, "strain_xy", e.exy);
      return kExitOk;
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace vbsim::cli
