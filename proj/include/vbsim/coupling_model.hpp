#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "vbsim/spin_hamiltonian.hpp"

namespace vbsim {

enum class D0Preset { experimental, flake_theory };

// Coupling constants of the boron-vacancy ground-state spin. All energies are
// MHz internally; the g couplings are MHz per unit strain.
struct CouplingConstants {
  double d0_mhz = 3470.0;
  double g1_mhz = -19200.0;
  double g2_mhz = 2600.0;
  double g2p_mhz = 0.0;
  double g3_mhz = 0.0;
  double g3p_mhz = 5800.0;
  double dperp_hz_cm_per_v = 20.72;
  double a_hf_mhz = 47.0;
  double c11_gpa = 811.0;
  double c12_gpa = 168.0;

  static CouplingConstants defaults(D0Preset preset = D0Preset::experimental);

  static double d0_for(D0Preset preset);
};

D0Preset parse_d0_preset(std::string_view name);

// Recognized config keys, in file order.
inline constexpr std::array<std::string_view, 10> kConstantKeys = {
    "d0_mhz",           "g1_ghz_per_strain", "g2_ghz_per_strain", "g2p_ghz_per_strain",
    "g3_ghz_per_strain", "g3p_ghz_per_strain", "dperp_hz_cm_per_v", "a_hf_mhz",
    "c11_gpa",          "c12_gpa"};

// Flat key=value view of an INI-style file. Section headers are allowed and
// ignored; keys must be unique across the file.
using KeyValueMap = std::map<std::string, std::string>;

KeyValueMap read_key_value_file(const std::filesystem::path& path);

// Overrides `base` with every constants key present in `kv`. Keys that are not
// constants keys are left for other consumers.
CouplingConstants apply_constants(const KeyValueMap& kv, CouplingConstants base = {});

CouplingConstants load_constants(const std::filesystem::path& path,
                                 CouplingConstants base = {});

std::string format_constants(const CouplingConstants& k);

struct StrainTensor2D {
  double exx = 0.0;
  double eyy = 0.0;
  double exy = 0.0;
};

struct StressTensor2D {
  double sxx = 0.0;  // GPa
  double syy = 0.0;
};

// V/cm. ez is stored for completeness; it is symmetry-forbidden from coupling.
struct ElectricFieldVec {
  double ex = 0.0;
  double ey = 0.0;
  double ez = 0.0;

  ElectricFieldVec& operator+=(const ElectricFieldVec& rhs) {
    ex += rhs.ex;
    ey += rhs.ey;
    ez += rhs.ez;
    return *this;
  }
};

inline constexpr double kDefaultStrainGuard = 0.1;

// Perturbation maps. Each returns the change (dD, E1, E2) in MHz.
ZfsParameters strain_perturbation(const StrainTensor2D& eps, const CouplingConstants& k,
                                  double guard = kDefaultStrainGuard);
ZfsParameters stress_perturbation(const StressTensor2D& sig, const CouplingConstants& k);
ZfsParameters electric_perturbation(const ElectricFieldVec& f, const CouplingConstants& k);

struct StressCouplings {
  double h1_mhz_per_gpa = 0.0;
  double h2_mhz_per_gpa = 0.0;
};

StressCouplings stress_couplings(const CouplingConstants& k);

// One-sigma errors of h1, h2 from one-sigma errors of g1, g2 (MHz per strain),
// propagated linearly with the stiffness held fixed.
StressCouplings stress_coupling_errors(double sigma_g1_mhz, double sigma_g2_mhz,
                                       const CouplingConstants& k);

// In-plane normal components only:
// [sxx, syy] = [[C11, C12], [C12, C11]] [exx, eyy].
StressTensor2D stress_from_strain(const StrainTensor2D& eps, const CouplingConstants& k);
StrainTensor2D strain_from_stress(const StressTensor2D& sig, const CouplingConstants& k);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

struct Sample {
  double x = 0.0;
  double y = 0.0;
};

// Ordinary least squares y = intercept + slope x. Needs >= 3 samples and
// >= 2 distinct abscissae.
LinearFit extract_coupling_slope(std::span<const Sample> samples);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

using Triangle = std::array<Point2, 3>;

// Small-strain tensor (F + F^T)/2 - I of the affine map carrying the reference
// triangle's edge vectors onto the deformed ones.
StrainTensor2D local_strain_from_triangle(const Triangle& reference, const Triangle& deformed);

}  // namespace vbsim
