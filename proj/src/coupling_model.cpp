#include "vbsim/coupling_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "vbsim/error.hpp"
#include "vbsim/units.hpp"

namespace vbsim {

namespace {

double parse_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(end[-1]))) --end;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value))
    throw InputError(fmt::format("config key '{}': '{}' is not a finite number", key, text));
  return value;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InputError(fmt::format("{} is not finite", what));
}

}  // namespace

double CouplingConstants::d0_for(D0Preset preset) {
  return preset == D0Preset::experimental ? 3470.0 : 3263.0;
}

CouplingConstants CouplingConstants::defaults(D0Preset preset) {
  CouplingConstants k;
  k.d0_mhz = d0_for(preset);
  return k;
}

D0Preset parse_d0_preset(std::string_view name) {
  if (name == "experimental") return D0Preset::experimental;
  if (name == "flake-theory") return D0Preset::flake_theory;
  throw InputError(fmt::format("unknown D0 preset '{}'", name));
}

KeyValueMap read_key_value_file(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw InputError(fmt::format("cannot read config '{}': {}", path.string(), e.message()));
  }
  KeyValueMap out;
  auto insert = [&](const std::string& key, const std::string& value) {
    if (!out.emplace(key, value).second)
      throw InputError(fmt::format("config '{}': duplicate key '{}'", path.string(), key));
  };
  for (const auto& [key, node] : tree) {
    if (node.empty()) {
      insert(key, node.data());
    } else {
      for (const auto& [sub_key, sub_node] : node) insert(sub_key, sub_node.data());
    }
  }
  return out;
}

CouplingConstants apply_constants(const KeyValueMap& kv, CouplingConstants base) {
  auto get = [&](std::string_view key, double& slot, double scale) {
    if (auto it = kv.find(std::string(key)); it != kv.end())
      slot = parse_double(it->first, it->second) * scale;
  };
  get("d0_mhz", base.d0_mhz, 1.0);
  get("g1_ghz_per_strain", base.g1_mhz, units::kMhzPerGhz);
  get("g2_ghz_per_strain", base.g2_mhz, units::kMhzPerGhz);
  get("g2p_ghz_per_strain", base.g2p_mhz, units::kMhzPerGhz);
  get("g3_ghz_per_strain", base.g3_mhz, units::kMhzPerGhz);
  get("g3p_ghz_per_strain", base.g3p_mhz, units::kMhzPerGhz);
  get("dperp_hz_cm_per_v", base.dperp_hz_cm_per_v, 1.0);
  get("a_hf_mhz", base.a_hf_mhz, 1.0);
  get("c11_gpa", base.c11_gpa, 1.0);
  get("c12_gpa", base.c12_gpa, 1.0);
  return base;
}

CouplingConstants load_constants(const std::filesystem::path& path, CouplingConstants base) {
  return apply_constants(read_key_value_file(path), base);
}

std::string format_constants(const CouplingConstants& k) {
  return fmt::format(
      "d0_mhz={:.9g}\ng1_ghz_per_strain={:.9g}\ng2_ghz_per_strain={:.9g}\n"
      "g2p_ghz_per_strain={:.9g}\ng3_ghz_per_strain={:.9g}\ng3p_ghz_per_strain={:.9g}\n"
      "dperp_hz_cm_per_v={:.9g}\na_hf_mhz={:.9g}\nc11_gpa={:.9g}\nc12_gpa={:.9g}\n",
      k.d0_mhz, units::mhz_to_ghz(k.g1_mhz), units::mhz_to_ghz(k.g2_mhz),
      units::mhz_to_ghz(k.g2p_mhz), units::mhz_to_ghz(k.g3_mhz), units::mhz_to_ghz(k.g3p_mhz),
      k.dperp_hz_cm_per_v, k.a_hf_mhz, k.c11_gpa, k.c12_gpa);
}

ZfsParameters strain_perturbation(const StrainTensor2D& eps, const CouplingConstants& k,
                                  double guard) {
  for (double c : {eps.exx, eps.eyy, eps.exy}) {
    require_finite(c, "strain component");
    if (std::abs(c) >= guard)
      throw InputError(fmt::format("strain component {} outside linear-response guard {}", c, guard));
  }
  const double normal_sum = eps.exx + eps.eyy;
  const double normal_diff = eps.exx - eps.eyy;
  const double shear = 2.0 * eps.exy;  // eps_xy + eps_yx
  return {k.g1_mhz * normal_sum, k.g2_mhz * normal_diff + k.g3_mhz * shear,
          k.g2p_mhz * normal_diff + k.g3p_mhz * shear};
}

StressCouplings stress_couplings(const CouplingConstants& k) {
  const double bulk = k.c11_gpa + k.c12_gpa;
  const double shear = k.c11_gpa - k.c12_gpa;
  if (bulk == 0.0 || shear == 0.0)
    throw NumericalError("stress_couplings: singular stiffness (C11 = +-C12)");
  return {k.g1_mhz / bulk, k.g2_mhz / shear};
}

StressCouplings stress_coupling_errors(double sigma_g1_mhz, double sigma_g2_mhz,
                                       const CouplingConstants& k) {
  require_finite(sigma_g1_mhz, "sigma g1");
  require_finite(sigma_g2_mhz, "sigma g2");
  if (sigma_g1_mhz < 0.0 || sigma_g2_mhz < 0.0) throw InputError("coupling errors must be >= 0");
  CouplingConstants unit = k;
  unit.g1_mhz = sigma_g1_mhz;
  unit.g2_mhz = sigma_g2_mhz;
  return stress_couplings(unit);
}

ZfsParameters stress_perturbation(const StressTensor2D& sig, const CouplingConstants& k) {
  require_finite(sig.sxx, "stress sxx");
  require_finite(sig.syy, "stress syy");
  const StressCouplings h = stress_couplings(k);
  return {h.h1_mhz_per_gpa * (sig.sxx + sig.syy), h.h2_mhz_per_gpa * (sig.sxx - sig.syy), 0.0};
}

StressTensor2D stress_from_strain(const StrainTensor2D& eps, const CouplingConstants& k) {
  return {k.c11_gpa * eps.exx + k.c12_gpa * eps.eyy, k.c12_gpa * eps.exx + k.c11_gpa * eps.eyy};
}

StrainTensor2D strain_from_stress(const StressTensor2D& sig, const CouplingConstants& k) {
  const double det = k.c11_gpa * k.c11_gpa - k.c12_gpa * k.c12_gpa;
  if (det == 0.0) throw NumericalError("strain_from_stress: singular stiffness (C11 = +-C12)");
  return {(k.c11_gpa * sig.sxx - k.c12_gpa * sig.syy) / det,
          (k.c11_gpa * sig.syy - k.c12_gpa * sig.sxx) / det, 0.0};
}

ZfsParameters electric_perturbation(const ElectricFieldVec& f, const CouplingConstants& k) {
  require_finite(f.ex, "field ex");
  require_finite(f.ey, "field ey");
  require_finite(f.ez, "field ez");
  return {0.0, units::hz_cm_per_v_times_v_per_cm_to_mhz(k.dperp_hz_cm_per_v, f.ey),
          units::hz_cm_per_v_times_v_per_cm_to_mhz(k.dperp_hz_cm_per_v, f.ex)};
}

LinearFit extract_coupling_slope(std::span<const Sample> samples) {
  const std::size_t n = samples.size();
  if (n < 3) throw InputError("extract_coupling_slope: need at least 3 samples");
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const Sample& s : samples) {
    require_finite(s.x, "sample abscissa");
    require_finite(s.y, "sample ordinate");
    mean_x += s.x;
    mean_y += s.y;
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  double sxx = 0.0;
  double sxy = 0.0;
  for (const Sample& s : samples) {
    sxx += (s.x - mean_x) * (s.x - mean_x);
    sxy += (s.x - mean_x) * (s.y - mean_y);
  }
  const bool distinct = std::any_of(samples.begin(), samples.end(),
                                    [&](const Sample& s) { return s.x != samples.front().x; });
  if (!distinct || sxx == 0.0)
    throw NumericalError("extract_coupling_slope: abscissae are degenerate");

  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  double ssr = 0.0;
  for (const Sample& s : samples) {
    const double r = s.y - (fit.intercept + fit.slope * s.x);
    ssr += r * r;
  }
  fit.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  return fit;
}

StrainTensor2D local_strain_from_triangle(const Triangle& reference, const Triangle& deformed) {
  // Columns of R and S are the edge vectors v1 - v0 and v2 - v0; F = S R^-1.
  const double r00 = reference[1].x - reference[0].x;
  const double r10 = reference[1].y - reference[0].y;
  const double r01 = reference[2].x - reference[0].x;
  const double r11 = reference[2].y - reference[0].y;
  const double det = r00 * r11 - r01 * r10;
  if (std::abs(det) * 0.5 <= 1e-6)
    throw NumericalError("local_strain_from_triangle: reference triangle is degenerate");

  const double s00 = deformed[1].x - deformed[0].x;
  const double s10 = deformed[1].y - deformed[0].y;
  const double s01 = deformed[2].x - deformed[0].x;
  const double s11 = deformed[2].y - deformed[0].y;

  const double i00 = r11 / det;
  const double i01 = -r01 / det;
  const double i10 = -r10 / det;
  const double i11 = r00 / det;

  const double f00 = s00 * i00 + s01 * i10;
  const double f01 = s00 * i01 + s01 * i11;
  const double f10 = s10 * i00 + s11 * i10;
  const double f11 = s10 * i01 + s11 * i11;

  return {f00 - 1.0, f11 - 1.0, 0.5 * (f01 + f10)};
}

}  // namespace vbsim
