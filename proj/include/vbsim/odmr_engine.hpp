#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vbsim/charge_environment.hpp"
#include "vbsim/coupling_model.hpp"
#include "vbsim/spin_hamiltonian.hpp"

namespace vbsim {

struct HyperfineLine {
  double shift_mhz = 0.0;
  double weight = 0.0;
};

// Secular coupling A Sz sum_k Iz,k to three spin-1 nitrogen nuclei: seven
// detunings A m for m = -3..3 with multiplicities (1,3,6,7,6,3,1)/27.
std::vector<HyperfineLine> hyperfine_detunings(double a_mhz);

struct FrequencyGrid {
  double start_mhz = 0.0;
  double step_mhz = 1.0;
  std::size_t count = 0;

  double at(std::size_t i) const { return start_mhz + step_mhz * static_cast<double>(i); }
  double stop_mhz() const { return count == 0 ? start_mhz : at(count - 1); }
  std::vector<double> points() const;

  // Odd point count, symmetric about `center_mhz`.
  static FrequencyGrid centered(double center_mhz, double half_width_mhz, double step_mhz);
};

struct OdmrSpectrum {
  std::vector<double> freqs;   // MHz, strictly ascending, uniform
  std::vector<double> signal;  // normalized PL, 1 off resonance

  // Throws InputError unless sizes match, n >= 2 and the grid is uniform.
  void validate() const;
};

enum class PerturbationKind { strain, electric };

PerturbationKind parse_perturbation_kind(const std::string& name);

struct ScatterRow {
  double magnitude = 0.0;
  double f_minus = 0.0;
  double f_plus = 0.0;
};

using ScatterDataset = std::vector<ScatterRow>;

// For every magnitude, n_samples random in-plane directions: both components
// drawn uniform on [-1, 1] and the vector rescaled to the magnitude. Strain
// directions live in (exx, eyy) with exy = 0; field directions in (ex, ey).
ScatterDataset scatter_levels(PerturbationKind kind, std::span<const double> magnitudes,
                              std::size_t n_samples, const CouplingConstants& k,
                              std::uint64_t seed);

struct ScatterStats {
  double magnitude = 0.0;
  double mean_shift = 0.0;       // mean of (f+ + f-)/2 - D0
  double mean_abs_shift = 0.0;   // mean of |(f+ + f-)/2 - D0|
  double mean_half_split = 0.0;  // mean of (f+ - f-)/2
};

// Per-magnitude means, in order of first appearance.
std::vector<ScatterStats> summarize_scatter(const ScatterDataset& data, double d0_mhz);

// Least-squares slope of mean |shift| against mean half-splitting across
// magnitudes. For strain this is |g1 / g2|.
double shift_to_splitting_ratio(const ScatterDataset& data, double d0_mhz);

struct SynthesisConfig {
  double rho_c = 0.0;            // nm^-3
  double contrast = 0.05;
  double linewidth_mhz = 30.0;   // Lorentzian half width at half maximum
  std::size_t n_configs = 10000;
  FrequencyGrid grid;
  EnvironmentConfig env;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct Synthesis {
  OdmrSpectrum spectrum;
  double mean_e_eff_mhz = 0.0;        // mean (f+ - f-)/2 of the unshifted manifold
  double mean_centroid_shift_mhz = 0.0;
};

// Half width of the band a synthetic grid must cover around D0.
double required_half_span(const CouplingConstants& k, double linewidth_mhz);

// Monte Carlo spectrum over n_configs charge environments; configuration i
// draws from substream i of `seed` and results do not depend on `threads`.
Synthesis synthesize_spectrum(const SynthesisConfig& cfg, const CouplingConstants& k);

// Same accumulation for explicitly given in-plane fields, one per configuration.
Synthesis synthesize_spectrum_from_fields(std::span<const ElectricFieldVec> fields, double contrast,
                                          double linewidth_mhz, const FrequencyGrid& grid,
                                          const CouplingConstants& k, unsigned threads = 1);

struct FitConfig {
  double rho_min = 0.0;
  double rho_max = 0.2;
  double contrast_min = 0.0;
  double contrast_max = 0.1;
  std::size_t grid_points = 21;  // per axis, odd
  double shrink = 5.0;
  double linewidth_mhz = 30.0;
  std::size_t n_configs = 1000;
  EnvironmentConfig env;
  unsigned threads = 1;

  void validate() const;
};

inline constexpr int kFitCycles = 3;

struct FitResult {
  double rho_c = 0.0;
  double contrast = 0.0;
  double residual = 0.0;
  double step_rho = 0.0;
  double step_contrast = 0.0;
  std::vector<double> cycle_objectives;  // best objective after each cycle
  bool at_boundary = false;
  std::string boundary_note;
};

// Least squares over a (rho_c x contrast) grid refined in kFitCycles cycles:
// each cycle re-centers on the best cell and divides both steps by `shrink`.
// Nodes stay inside the configured ranges. Every candidate reuses `seed`
// (common random numbers). A best point on the outermost node of the final
// grid, other than rho_c = 0 or contrast = 0, sets at_boundary instead of
// throwing.
FitResult fit_spectrum(const OdmrSpectrum& measured, const FitConfig& cfg,
                       const CouplingConstants& k, std::uint64_t seed);

// PL against excitation power: least-squares slope (with intercept).
LinearFit relative_density_from_pl(std::span<const Sample> series);

// Slope of each series divided by the slope of the first.
std::vector<double> relative_densities(std::span<const std::vector<Sample>> series);

}  // namespace vbsim
