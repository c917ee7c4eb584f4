#include "vbsim/odmr_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "vbsim/error.hpp"
#include "vbsim/parallel.hpp"
#include "vbsim/rng.hpp"

namespace vbsim {

namespace {

struct Line {
  double freq_mhz;
  double amplitude;  // hyperfine weight / 2, per unit contrast
};

// Both transitions of every hyperfine manifold for one in-plane field.
void append_lines(const ElectricFieldVec& field, const CouplingConstants& k,
                  std::span<const HyperfineLine> hyperfine, std::vector<Line>& out) {
  ZfsParameters zfs = electric_perturbation(field, k);
  zfs.d += k.d0_mhz;
  for (const HyperfineLine& hf : hyperfine) {
    const Resonances r = resonance_frequencies(build_hamiltonian(zfs, hf.shift_mhz));
    out.push_back({r.f_minus, 0.5 * hf.weight});
    out.push_back({r.f_plus, 0.5 * hf.weight});
  }
}

// Unit-contrast dip profile: (1/n_configs) sum over lines of amplitude * L(f).
std::vector<double> dip_profile(std::span<const Line> lines, std::size_t n_configs,
                                double linewidth_mhz, std::span<const double> freqs,
                                unsigned threads) {
  std::vector<double> profile(freqs.size(), 0.0);
  const double g2 = linewidth_mhz * linewidth_mhz;
  const double inv_n = 1.0 / static_cast<double>(n_configs);
  parallel_for(freqs.size(), threads, [&](std::size_t i) {
    const double f = freqs[i];
    double acc = 0.0;
    for (const Line& l : lines) {
      const double df = f - l.freq_mhz;
      acc += l.amplitude * g2 / (df * df + g2);
    }
    profile[i] = acc * inv_n;
  });
  return profile;
}

std::vector<ElectricFieldVec> sample_fields(double rho_c, const EnvironmentConfig& env,
                                            std::size_t n_configs, std::uint64_t seed,
                                            unsigned threads) {
  std::vector<ElectricFieldVec> fields(n_configs);
  parallel_for(n_configs, threads, [&](std::size_t i) {
    const ChargeConfiguration cfg = generate_configuration(rho_c, env, seed, i);
    fields[i] = field_at_origin(cfg, env.eps_r, env.exclusion_nm);
  });
  return fields;
}

struct LineSet {
  std::vector<Line> lines;
  double mean_e_eff = 0.0;
  double mean_centroid_shift = 0.0;
};

LineSet build_lines(std::span<const ElectricFieldVec> fields, const CouplingConstants& k,
                    unsigned threads) {
  const auto hyperfine = hyperfine_detunings(k.a_hf_mhz);
  const std::size_t per_config = 2 * hyperfine.size();
  LineSet set;
  set.lines.resize(fields.size() * per_config);
  std::vector<double> e_eff(fields.size());
  std::vector<double> centroid(fields.size());
  parallel_for(fields.size(), threads, [&](std::size_t i) {
    std::vector<Line> local;
    local.reserve(per_config);
    append_lines(fields[i], k, hyperfine, local);
    std::copy(local.begin(), local.end(),
              set.lines.begin() + static_cast<std::ptrdiff_t>(i * per_config));
    ZfsParameters zfs = electric_perturbation(fields[i], k);
    zfs.d += k.d0_mhz;
    const Resonances r = resonance_frequencies(build_hamiltonian(zfs));
    e_eff[i] = 0.5 * (r.f_plus - r.f_minus);
    centroid[i] = 0.5 * (r.f_plus + r.f_minus) - k.d0_mhz;
  });
  for (std::size_t i = 0; i < fields.size(); ++i) {
    set.mean_e_eff += e_eff[i];
    set.mean_centroid_shift += centroid[i];
  }
  if (!fields.empty()) {
    set.mean_e_eff /= static_cast<double>(fields.size());
    set.mean_centroid_shift /= static_cast<double>(fields.size());
  }
  return set;
}

void check_contrast(double contrast) {
  if (!(contrast >= 0.0 && contrast < 1.0))
    throw InputError(fmt::format("contrast {} is not in [0, 1)", contrast));
}

void check_linewidth(double linewidth_mhz) {
  if (!(linewidth_mhz > 0.0) || !std::isfinite(linewidth_mhz))
    throw InputError("linewidth must be positive");
}

Synthesis assemble(const LineSet& set, std::size_t n_configs, double contrast,
                   double linewidth_mhz, const FrequencyGrid& grid, unsigned threads) {
  Synthesis out;
  out.spectrum.freqs = grid.points();
  const std::vector<double> profile =
      dip_profile(set.lines, n_configs, linewidth_mhz, out.spectrum.freqs, threads);
  out.spectrum.signal.resize(profile.size());
  for (std::size_t i = 0; i < profile.size(); ++i)
    out.spectrum.signal[i] = 1.0 - contrast * profile[i];
  out.mean_e_eff_mhz = set.mean_e_eff;
  out.mean_centroid_shift_mhz = set.mean_centroid_shift;
  return out;
}

void check_grid_coverage(const FrequencyGrid& grid, const CouplingConstants& k,
                         double linewidth_mhz) {
  if (grid.count < 2 || !(grid.step_mhz > 0.0)) throw InputError("frequency grid is empty");
  const double half = required_half_span(k, linewidth_mhz);
  if (grid.start_mhz > k.d0_mhz - half || grid.stop_mhz() < k.d0_mhz + half)
    throw InputError(fmt::format("frequency grid [{}, {}] MHz is too narrow; need D0 +- {} MHz",
                                 grid.start_mhz, grid.stop_mhz(), half));
}

// Keeps grid nodes that round-off pushed just past a range limit.
bool snap_into(double& x, double lo, double hi, double step) {
  const double slack = 1e-9 * step;
  if (x < lo - slack || x > hi + slack) return false;
  x = std::clamp(x, lo, hi);
  return true;
}

}  // namespace

std::vector<HyperfineLine> hyperfine_detunings(double a_mhz) {
  if (!std::isfinite(a_mhz)) throw InputError("hyperfine constant is not finite");
  // Number of ways three spins with m in {-1,0,1} sum to M.
  std::array<int, 7> multiplicity{};
  for (int m1 = -1; m1 <= 1; ++m1)
    for (int m2 = -1; m2 <= 1; ++m2)
      for (int m3 = -1; m3 <= 1; ++m3) ++multiplicity[static_cast<std::size_t>(m1 + m2 + m3 + 3)];
  std::vector<HyperfineLine> lines;
  lines.reserve(multiplicity.size());
  for (int m = -3; m <= 3; ++m)
    lines.push_back({a_mhz * m, multiplicity[static_cast<std::size_t>(m + 3)] / 27.0});
  return lines;
}

std::vector<double> FrequencyGrid::points() const {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = at(i);
  return out;
}

FrequencyGrid FrequencyGrid::centered(double center_mhz, double half_width_mhz, double step_mhz) {
  if (!(step_mhz > 0.0) || !(half_width_mhz > 0.0))
    throw InputError("grid step and half width must be positive");
  const auto half_n = static_cast<std::size_t>(std::ceil(half_width_mhz / step_mhz - 1e-9));
  return {center_mhz - step_mhz * static_cast<double>(half_n), step_mhz, 2 * half_n + 1};
}

void OdmrSpectrum::validate() const {
  if (freqs.size() != signal.size()) throw InputError("spectrum: column lengths differ");
  if (freqs.size() < 2) throw InputError("spectrum: need at least two points");
  const double step = (freqs.back() - freqs.front()) / static_cast<double>(freqs.size() - 1);
  if (!(step > 0.0)) throw InputError("spectrum: frequencies must be strictly ascending");
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    if (!std::isfinite(freqs[i]) || !std::isfinite(signal[i]))
      throw InputError("spectrum: non-finite value");
    if (i > 0 && !(freqs[i] > freqs[i - 1]))
      throw InputError("spectrum: frequencies must be strictly ascending");
    const double expected = freqs.front() + step * static_cast<double>(i);
    if (std::abs(freqs[i] - expected) > 1e-3 * step)
      throw InputError("spectrum: frequency grid is not uniform");
  }
}

PerturbationKind parse_perturbation_kind(const std::string& name) {
  if (name == "strain") return PerturbationKind::strain;
  if (name == "electric") return PerturbationKind::electric;
  throw InputError(fmt::format("unknown perturbation kind '{}'", name));
}

ScatterDataset scatter_levels(PerturbationKind kind, std::span<const double> magnitudes,
                              std::size_t n_samples, const CouplingConstants& k,
                              std::uint64_t seed) {
  ScatterDataset out;
  out.reserve(magnitudes.size() * n_samples);
  for (std::size_t m = 0; m < magnitudes.size(); ++m) {
    const double mag = magnitudes[m];
    if (!(mag >= 0.0) || !std::isfinite(mag))
      throw InputError("scatter_levels: magnitudes must be finite and >= 0");
    for (std::size_t s = 0; s < n_samples; ++s) {
      RngStream rng = RngStream::substream(seed, m, s);
      double u = 0.0;
      double v = 0.0;
      double len = 0.0;
      do {
        u = rng.uniform(-1.0, 1.0);
        v = rng.uniform(-1.0, 1.0);
        len = std::hypot(u, v);
      } while (len == 0.0);
      const double cx = mag * u / len;
      const double cy = mag * v / len;

      ZfsParameters zfs = kind == PerturbationKind::strain
                              ? strain_perturbation({cx, cy, 0.0}, k)
                              : electric_perturbation({cx, cy, 0.0}, k);
      zfs.d += k.d0_mhz;
      const Resonances r = resonance_frequencies(build_hamiltonian(zfs));
      out.push_back({mag, r.f_minus, r.f_plus});
    }
  }
  return out;
}

std::vector<ScatterStats> summarize_scatter(const ScatterDataset& data, double d0_mhz) {
  std::vector<ScatterStats> stats;
  std::vector<std::size_t> counts;
  for (const ScatterRow& row : data) {
    auto it = std::find_if(stats.begin(), stats.end(),
                           [&](const ScatterStats& s) { return s.magnitude == row.magnitude; });
    if (it == stats.end()) {
      stats.push_back({row.magnitude, 0.0, 0.0, 0.0});
      counts.push_back(0);
      it = stats.end() - 1;
    }
    const double shift = 0.5 * (row.f_plus + row.f_minus) - d0_mhz;
    it->mean_shift += shift;
    it->mean_abs_shift += std::abs(shift);
    it->mean_half_split += 0.5 * (row.f_plus - row.f_minus);
    ++counts[static_cast<std::size_t>(it - stats.begin())];
  }
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto n = static_cast<double>(counts[i]);
    stats[i].mean_shift /= n;
    stats[i].mean_abs_shift /= n;
    stats[i].mean_half_split /= n;
  }
  return stats;
}

double shift_to_splitting_ratio(const ScatterDataset& data, double d0_mhz) {
  std::vector<Sample> samples;
  for (const ScatterStats& s : summarize_scatter(data, d0_mhz))
    samples.push_back({s.mean_half_split, s.mean_abs_shift});
  return extract_coupling_slope(samples).slope;
}

double required_half_span(const CouplingConstants& k, double linewidth_mhz) {
  return 3.0 * std::abs(k.a_hf_mhz) + 5.0 * linewidth_mhz;
}

Synthesis synthesize_spectrum(const SynthesisConfig& cfg, const CouplingConstants& k) {
  if (cfg.n_configs < 1) throw InputError("n_configs must be at least 1");
  check_contrast(cfg.contrast);
  check_linewidth(cfg.linewidth_mhz);
  check_grid_coverage(cfg.grid, k, cfg.linewidth_mhz);
  cfg.env.validate();

  const auto fields = sample_fields(cfg.rho_c, cfg.env, cfg.n_configs, cfg.seed, cfg.threads);
  const LineSet set = build_lines(fields, k, cfg.threads);
  return assemble(set, cfg.n_configs, cfg.contrast, cfg.linewidth_mhz, cfg.grid, cfg.threads);
}

Synthesis synthesize_spectrum_from_fields(std::span<const ElectricFieldVec> fields, double contrast,
                                          double linewidth_mhz, const FrequencyGrid& grid,
                                          const CouplingConstants& k, unsigned threads) {
  if (fields.empty()) throw InputError("need at least one field configuration");
  check_contrast(contrast);
  check_linewidth(linewidth_mhz);
  check_grid_coverage(grid, k, linewidth_mhz);
  const LineSet set = build_lines(fields, k, threads);
  return assemble(set, fields.size(), contrast, linewidth_mhz, grid, threads);
}

void FitConfig::validate() const {
  if (!(rho_min >= 0.0) || !(rho_max > rho_min)) throw InputError("fit: need 0 <= rho_min < rho_max");
  if (!(contrast_min >= 0.0) || !(contrast_max > contrast_min) || !(contrast_max < 1.0))
    throw InputError("fit: need 0 <= contrast_min < contrast_max < 1");
  if (grid_points < 3 || grid_points % 2 == 0) throw InputError("fit: grid_points must be odd and >= 3");
  if (!(shrink > 1.0)) throw InputError("fit: shrink factor must exceed 1");
  if (n_configs < 1) throw InputError("fit: n_configs must be at least 1");
  check_linewidth(linewidth_mhz);
  env.validate();
}

FitResult fit_spectrum(const OdmrSpectrum& measured, const FitConfig& cfg,
                       const CouplingConstants& k, std::uint64_t seed) {
  measured.validate();
  cfg.validate();

  // The objective depends on rho_c only through the integer charge count, so
  // dip profiles are cached per count.
  std::map<std::size_t, std::vector<double>> profiles;
  auto profile_for = [&](double rho) -> const std::vector<double>& {
    const std::size_t n_charges = charge_count(rho, cfg.env.radius_nm);
    auto it = profiles.find(n_charges);
    if (it != profiles.end()) return it->second;
    const auto fields = sample_fields(rho, cfg.env, cfg.n_configs, seed, cfg.threads);
    const LineSet set = build_lines(fields, k, cfg.threads);
    auto profile = dip_profile(set.lines, cfg.n_configs, cfg.linewidth_mhz, measured.freqs, cfg.threads);
    return profiles.emplace(n_charges, std::move(profile)).first->second;
  };
  auto objective = [&](const std::vector<double>& profile, double contrast) {
    double sse = 0.0;
    for (std::size_t i = 0; i < profile.size(); ++i) {
      const double r = measured.signal[i] - (1.0 - contrast * profile[i]);
      sse += r * r;
    }
    return sse;
  };

  const auto half = static_cast<long>(cfg.grid_points / 2);
  double center_rho = 0.5 * (cfg.rho_min + cfg.rho_max);
  double center_c = 0.5 * (cfg.contrast_min + cfg.contrast_max);
  double step_rho = (cfg.rho_max - cfg.rho_min) / static_cast<double>(cfg.grid_points - 1);
  double step_c = (cfg.contrast_max - cfg.contrast_min) / static_cast<double>(cfg.grid_points - 1);

  FitResult result;
  double lowest_rho = 0.0;
  double highest_rho = 0.0;
  double lowest_c = 0.0;
  double highest_c = 0.0;

  for (int cycle = 0; cycle < kFitCycles; ++cycle) {
    if (cycle > 0) {
      step_rho /= cfg.shrink;
      step_c /= cfg.shrink;
    }
    double best = std::numeric_limits<double>::infinity();
    long best_rank = 0;
    double best_rho = center_rho;
    double best_c = center_c;
    lowest_rho = lowest_c = std::numeric_limits<double>::infinity();
    highest_rho = highest_c = -std::numeric_limits<double>::infinity();
    // Offsets are relative to the center so the previous best is always
    // re-evaluated. Nodes outside the requested ranges are skipped; ties go
    // to the node nearest the center.
    for (long i = -half; i <= half; ++i) {
      double rho = i == 0 ? center_rho : center_rho + static_cast<double>(i) * step_rho;
      if (!snap_into(rho, cfg.rho_min, cfg.rho_max, step_rho)) continue;
      lowest_rho = std::min(lowest_rho, rho);
      highest_rho = std::max(highest_rho, rho);
      const std::vector<double>& profile = profile_for(rho);
      for (long j = -half; j <= half; ++j) {
        double c = j == 0 ? center_c : center_c + static_cast<double>(j) * step_c;
        if (!snap_into(c, cfg.contrast_min, cfg.contrast_max, step_c)) continue;
        lowest_c = std::min(lowest_c, c);
        highest_c = std::max(highest_c, c);
        const double sse = objective(profile, c);
        const long rank = std::abs(i) + std::abs(j);
        if (sse < best || (sse == best && rank < best_rank)) {
          best = sse;
          best_rank = rank;
          best_rho = rho;
          best_c = c;
        }
      }
    }
    center_rho = best_rho;
    center_c = best_c;
    result.cycle_objectives.push_back(best);
    result.residual = best;
  }

  result.rho_c = center_rho;
  result.contrast = center_c;
  result.step_rho = step_rho;
  result.step_contrast = step_c;

  // An optimum on the outermost evaluated node may lie beyond it, unless that
  // node is the physical limit of zero.
  std::vector<std::string> edges;
  if (center_rho == lowest_rho && center_rho > 0.0) edges.emplace_back("rho_c at lower grid edge");
  if (center_rho == highest_rho) edges.emplace_back("rho_c at upper grid edge");
  if (center_c == lowest_c && center_c > 0.0) edges.emplace_back("contrast at lower grid edge");
  if (center_c == highest_c) edges.emplace_back("contrast at upper grid edge");
  if (!edges.empty()) {
    result.at_boundary = true;
    result.boundary_note = fmt::format("{}", fmt::join(edges, "; "));
  }
  return result;
}

LinearFit relative_density_from_pl(std::span<const Sample> series) {
  return extract_coupling_slope(series);
}

std::vector<double> relative_densities(std::span<const std::vector<Sample>> series) {
  if (series.empty()) throw InputError("relative_densities: no series given");
  std::vector<double> slopes;
  for (const auto& s : series) slopes.push_back(relative_density_from_pl(s).slope);
  if (slopes.front() == 0.0) throw NumericalError("relative_densities: reference slope is zero");
  std::vector<double> ratios;
  for (double s : slopes) ratios.push_back(s / slopes.front());
  return ratios;
}

}  // namespace vbsim
