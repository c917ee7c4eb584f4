#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "vbsim/error.hpp"
#include "vbsim/odmr_engine.hpp"

using namespace vbsim;

namespace {

constexpr double kK = 1.4399645;

// Closed-form spectrum for a purely in-plane field: f = D0 +- sqrt(E^2 + (A m)^2).
std::vector<double> oracle_signal(const std::vector<double>& e_eff, double d0, double a_hf,
                                  double contrast, double gamma, const std::vector<double>& freqs) {
  const double w[7] = {1, 3, 6, 7, 6, 3, 1};
  std::vector<double> out(freqs.size(), 0.0);
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    double acc = 0.0;
    for (double e : e_eff)
      for (int m = -3; m <= 3; ++m) {
        const double half = std::sqrt(e * e + a_hf * a_hf * m * m);
        for (double f0 : {d0 - half, d0 + half}) {
          const double df = freqs[i] - f0;
          acc += 0.5 * w[m + 3] / 27.0 * gamma * gamma / (df * df + gamma * gamma);
        }
      }
    out[i] = 1.0 - contrast * acc / static_cast<double>(e_eff.size());
  }
  return out;
}

SynthesisConfig base_synthesis(double rho, const CouplingConstants& k) {
  SynthesisConfig cfg;
  cfg.rho_c = rho;
  cfg.n_configs = 200;
  cfg.seed = 5;
  cfg.grid = FrequencyGrid::centered(k.d0_mhz, required_half_span(k, cfg.linewidth_mhz) + 300.0, 2.0);
  return cfg;
}

}  // namespace

TEST_CASE("hyperfine detunings") {
  const auto lines = hyperfine_detunings(47.0);
  REQUIRE(lines.size() == 7);
  const double mult[7] = {1, 3, 6, 7, 6, 3, 1};
  double total = 0.0;
  for (int m = -3; m <= 3; ++m) {
    CHECK(lines[m + 3].shift_mhz == doctest::Approx(47.0 * m));
    CHECK(lines[m + 3].weight * 27.0 == doctest::Approx(mult[m + 3]).epsilon(1e-14));
    total += lines[m + 3].weight;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));

  // Multiplicities are the coefficients of (x^-1 + 1 + x)^3.
  std::vector<int> poly{1};
  for (int n = 0; n < 3; ++n) {
    std::vector<int> next(poly.size() + 2, 0);
    for (std::size_t i = 0; i < poly.size(); ++i)
      for (std::size_t d = 0; d < 3; ++d) next[i + d] += poly[i];
    poly = next;
  }
  for (int i = 0; i < 7; ++i) CHECK(poly[i] == mult[i]);
}

TEST_CASE("frequency grid and spectrum validation") {
  const FrequencyGrid g = FrequencyGrid::centered(3470.0, 100.0, 1.0);
  CHECK(g.count % 2 == 1);
  CHECK(g.at(g.count / 2) == doctest::Approx(3470.0));
  CHECK(g.start_mhz == doctest::Approx(3370.0));
  CHECK(g.stop_mhz() == doctest::Approx(3570.0));
  CHECK(g.points().size() == g.count);

  OdmrSpectrum s{{1.0, 2.0, 3.0}, {1.0, 0.9, 1.0}};
  CHECK_NOTHROW(s.validate());
  s.freqs[2] = 3.5;
  CHECK_THROWS_AS(s.validate(), InputError);
  s.freqs = {1.0, 2.0};
  CHECK_THROWS_AS(s.validate(), InputError);
  s.freqs = {3.0, 2.0, 1.0};
  CHECK_THROWS_AS(s.validate(), InputError);
}

TEST_CASE("scatter_levels") {
  const CouplingConstants k;
  SUBCASE("zero magnitude sits at D0") {
    const std::vector<double> mags{0.0};
    for (auto kind : {PerturbationKind::strain, PerturbationKind::electric})
      for (const ScatterRow& r : scatter_levels(kind, mags, 50, k, 1)) {
        CHECK(r.f_minus == doctest::Approx(k.d0_mhz).epsilon(1e-12));
        CHECK(r.f_plus == doctest::Approx(k.d0_mhz).epsilon(1e-12));
      }
  }
  SUBCASE("electric field splits symmetrically by dperp |F|") {
    const std::vector<double> mags{1e4, 1e5, 1e6};
    const ScatterDataset rows = scatter_levels(PerturbationKind::electric, mags, 200, k, 2);
    CHECK(rows.size() == 600);
    for (const ScatterRow& r : rows) {
      const double e = k.dperp_hz_cm_per_v * 1e-6 * r.magnitude;
      CHECK(std::abs(r.f_plus - (k.d0_mhz + e)) < 1e-9);
      CHECK(std::abs(r.f_minus - (k.d0_mhz - e)) < 1e-9);
    }
    CHECK(shift_to_splitting_ratio(rows, k.d0_mhz) == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("strain shift to splitting ratio") {
    std::vector<double> mags;
    for (int i = 1; i <= 20; ++i) mags.push_back(1e-4 * i);
    const ScatterDataset rows = scatter_levels(PerturbationKind::strain, mags, 1000, k, 3);
    CHECK(std::abs(shift_to_splitting_ratio(rows, k.d0_mhz) - 19200.0 / 2600.0) < 0.15);

    const auto stats = summarize_scatter(rows, k.d0_mhz);
    REQUIRE(stats.size() == 20);
    for (std::size_t i = 0; i < stats.size(); ++i) {
      CHECK(stats[i].magnitude == mags[i]);
      CHECK(stats[i].mean_half_split > 0.0);
      CHECK(stats[i].mean_abs_shift >= std::abs(stats[i].mean_shift));
    }
  }
  SUBCASE("rows follow seed") {
    const std::vector<double> mags{1e-3};
    const auto a = scatter_levels(PerturbationKind::strain, mags, 10, k, 9);
    const auto b = scatter_levels(PerturbationKind::strain, mags, 10, k, 9);
    const auto c = scatter_levels(PerturbationKind::strain, mags, 10, k, 10);
    CHECK(a[3].f_plus == b[3].f_plus);
    CHECK(a[3].f_plus != c[3].f_plus);
  }
  CHECK(parse_perturbation_kind("electric") == PerturbationKind::electric);
  CHECK_THROWS_AS(parse_perturbation_kind("magnetic"), InputError);
}

TEST_CASE("synthesis without charges") {
  const CouplingConstants k;
  SynthesisConfig cfg = base_synthesis(0.0, k);
  const Synthesis s = synthesize_spectrum(cfg, k);
  const auto& sig = s.spectrum.signal;
  const std::size_t n = sig.size();
  for (std::size_t i = 0; i < n / 2; ++i) CHECK(std::abs(sig[i] - sig[n - 1 - i]) < 1e-12);
  CHECK(s.mean_e_eff_mhz == 0.0);

  const auto oracle = oracle_signal({0.0}, k.d0_mhz, k.a_hf_mhz, cfg.contrast, cfg.linewidth_mhz,
                                    s.spectrum.freqs);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(sig[i] - oracle[i]) < 1e-12);
}

TEST_CASE("dip area equals contrast * pi * linewidth") {
  const CouplingConstants k;
  SynthesisConfig cfg = base_synthesis(0.0, k);
  cfg.grid = FrequencyGrid::centered(k.d0_mhz, 3000.0, 1.0);
  const Synthesis s = synthesize_spectrum(cfg, k);
  double area = 0.0;
  for (double v : s.spectrum.signal) area += (1.0 - v) * cfg.grid.step_mhz;
  CHECK(area == doctest::Approx(cfg.contrast * std::numbers::pi * cfg.linewidth_mhz).epsilon(0.02));
}

TEST_CASE("frozen single charge") {
  const CouplingConstants k;
  const double field = kK / (1.0 * 1.0) * 1e7;
  const double e = k.dperp_hz_cm_per_v * 1e-6 * field;
  CHECK(e == doctest::Approx(298.36).epsilon(1e-5));
  const std::vector<ElectricFieldVec> fields{{-field, 0.0, 0.0}};
  const FrequencyGrid grid = FrequencyGrid::centered(k.d0_mhz + e, 700.0, 0.25);
  const Synthesis s = synthesize_spectrum_from_fields(fields, 0.05, 30.0, grid, k);
  CHECK(s.mean_e_eff_mhz == doctest::Approx(e).epsilon(1e-12));
  CHECK(std::abs(s.mean_centroid_shift_mhz) < 1e-9);
  const auto oracle = oracle_signal({e}, k.d0_mhz, k.a_hf_mhz, 0.05, 30.0, s.spectrum.freqs);
  for (std::size_t i = 0; i < oracle.size(); ++i)
    CHECK(std::abs(s.spectrum.signal[i] - oracle[i]) < 1e-9);

  // Narrow lines expose the m = 0 pair exactly at D0 +- E.
  const FrequencyGrid fine = FrequencyGrid::centered(k.d0_mhz + e, 700.0, 0.001);
  const Synthesis narrow = synthesize_spectrum_from_fields(fields, 0.05, 0.01, fine, k);
  const std::size_t mid = fine.count / 2;
  const auto& sig = narrow.spectrum.signal;
  CHECK(sig[mid] < sig[mid - 1]);
  CHECK(sig[mid] < sig[mid + 1]);
  CHECK(1.0 - sig[mid] == doctest::Approx(0.05 * 7.0 / 54.0).epsilon(1e-3));
  const FrequencyGrid lower = FrequencyGrid::centered(k.d0_mhz - e, 700.0, 0.001);
  const Synthesis mirrored = synthesize_spectrum_from_fields(fields, 0.05, 0.01, lower, k);
  CHECK(mirrored.spectrum.signal[lower.count / 2] == doctest::Approx(sig[mid]).epsilon(1e-9));
}

TEST_CASE("synthesis errors") {
  const CouplingConstants k;
  SynthesisConfig cfg = base_synthesis(0.046, k);
  cfg.n_configs = 5;
  cfg.grid = FrequencyGrid::centered(k.d0_mhz, 100.0, 1.0);
  CHECK_THROWS_AS(synthesize_spectrum(cfg, k), InputError);
  cfg = base_synthesis(0.046, k);
  cfg.n_configs = 5;
  cfg.contrast = 1.0;
  CHECK_THROWS_AS(synthesize_spectrum(cfg, k), InputError);
  cfg.contrast = -0.1;
  CHECK_THROWS_AS(synthesize_spectrum(cfg, k), InputError);
  cfg.contrast = 0.05;
  cfg.linewidth_mhz = 0.0;
  CHECK_THROWS_AS(synthesize_spectrum(cfg, k), InputError);
  cfg = base_synthesis(0.046, k);
  cfg.n_configs = 0;
  CHECK_THROWS_AS(synthesize_spectrum(cfg, k), InputError);
}

TEST_CASE("splitting grows with charge density") {
  const CouplingConstants k;
  double previous = 0.0;
  for (double rho : {0.018, 0.046, 0.141}) {
    SynthesisConfig cfg = base_synthesis(rho, k);
    const Synthesis s = synthesize_spectrum(cfg, k);
    CHECK(s.mean_e_eff_mhz > previous);
    CHECK(std::abs(s.mean_centroid_shift_mhz) < 1e-9);
    previous = s.mean_e_eff_mhz;
  }
}

TEST_CASE("synthesis is independent of the thread count") {
  const CouplingConstants k;
  SynthesisConfig cfg = base_synthesis(0.046, k);
  cfg.threads = 1;
  const Synthesis a = synthesize_spectrum(cfg, k);
  cfg.threads = 4;
  const Synthesis b = synthesize_spectrum(cfg, k);
  REQUIRE(a.spectrum.signal.size() == b.spectrum.signal.size());
  for (std::size_t i = 0; i < a.spectrum.signal.size(); ++i)
    CHECK(a.spectrum.signal[i] == b.spectrum.signal[i]);
  CHECK(a.mean_e_eff_mhz == b.mean_e_eff_mhz);

  cfg.seed = 6;
  const Synthesis c = synthesize_spectrum(cfg, k);
  CHECK(c.mean_e_eff_mhz != a.mean_e_eff_mhz);
}

TEST_CASE("fit_spectrum") {
  const CouplingConstants k;
  FitConfig fit;
  fit.n_configs = 200;
  fit.threads = 2;

  SUBCASE("recovers the generating parameters") {
    SynthesisConfig cfg = base_synthesis(0.046, k);
    const Synthesis s = synthesize_spectrum(cfg, k);
    const FitResult r = fit_spectrum(s.spectrum, fit, k, cfg.seed);
    CHECK(std::abs(r.rho_c - 0.046) <= 0.002);
    CHECK(std::abs(r.contrast - 0.05) <= 0.0025);
    CHECK_FALSE(r.at_boundary);
    REQUIRE(r.cycle_objectives.size() == kFitCycles);
    for (std::size_t c = 1; c < r.cycle_objectives.size(); ++c)
      CHECK(r.cycle_objectives[c] <= r.cycle_objectives[c - 1]);
    CHECK(r.residual < 1e-20);
    CHECK(r.step_rho == doctest::Approx(0.01 / 25.0));
  }
  SUBCASE("no charges fits to zero density without a boundary flag") {
    SynthesisConfig cfg = base_synthesis(0.0, k);
    cfg.contrast = 0.03;
    const Synthesis s = synthesize_spectrum(cfg, k);
    const FitResult r = fit_spectrum(s.spectrum, fit, k, cfg.seed);
    CHECK(charge_count(r.rho_c, fit.env.radius_nm) == 0);
    CHECK(r.contrast == doctest::Approx(0.03).epsilon(1e-9));
    CHECK_FALSE(r.at_boundary);
  }
  SUBCASE("a density beyond the range is flagged") {
    SynthesisConfig cfg = base_synthesis(0.141, k);
    const Synthesis s = synthesize_spectrum(cfg, k);
    fit.rho_max = 0.02;
    const FitResult r = fit_spectrum(s.spectrum, fit, k, cfg.seed);
    CHECK(r.at_boundary);
    CHECK(r.boundary_note.find("rho_c at upper") != std::string::npos);
  }
  SUBCASE("invalid settings") {
    SynthesisConfig cfg = base_synthesis(0.0, k);
    const Synthesis s = synthesize_spectrum(cfg, k);
    fit.grid_points = 20;
    CHECK_THROWS_AS(fit_spectrum(s.spectrum, fit, k, 1), InputError);
    fit.grid_points = 21;
    fit.contrast_max = 1.0;
    CHECK_THROWS_AS(fit_spectrum(s.spectrum, fit, k, 1), InputError);
  }
}

TEST_CASE("relative densities from PL series") {
  auto line = [](double slope, double intercept) {
    std::vector<Sample> s;
    for (double p : {0.5, 1.0, 2.0, 4.0, 8.0}) s.push_back({p, intercept + slope * p});
    return s;
  };
  const std::vector<std::vector<Sample>> series{line(2.0, 1.0), line(9.6, 0.3), line(17.0, -2.0)};
  const auto ratios = relative_densities(series);
  REQUIRE(ratios.size() == 3);
  CHECK(ratios[0] == 1.0);
  CHECK(std::abs(ratios[1] - 4.8) < 1e-9 * 4.8);
  CHECK(std::abs(ratios[2] - 8.5) < 1e-9 * 8.5);

  const std::vector<std::vector<Sample>> flat{line(0.0, 1.0), line(1.0, 0.0)};
  CHECK_THROWS_AS(relative_densities(flat), NumericalError);
  CHECK_THROWS_AS(relative_densities({}), InputError);
}
