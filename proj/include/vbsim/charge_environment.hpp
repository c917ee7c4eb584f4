#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "vbsim/coupling_model.hpp"
#include "vbsim/rng.hpp"

namespace vbsim {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }

  friend Vec3 operator+(Vec3 a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

// Integer address of an atomic site: Bravais cell (i, j), honeycomb
// sublattice (0 = boron position of layer 0, 1 = nitrogen position), layer.
struct LatticeSite {
  int i = 0;
  int j = 0;
  int sublattice = 0;
  int layer = 0;

  std::uint64_t key() const;
  friend bool operator==(const LatticeSite&, const LatticeSite&) = default;
};

// Bulk hBN with AA' stacking. Layers alternate species but share the same
// in-plane honeycomb positions, so the site set is honeycomb x {layer * c/2}.
// x runs along the zigzag direction, y along armchair; the vacancy sits on
// the boron site at the origin.
struct HexLattice {
  double a_nm = 0.2504;
  double interlayer_nm = 0.333;

  void validate() const;

  Vec3 position(const LatticeSite& site) const;
  LatticeSite nearest_site(const Vec3& p) const;

  // In-plane B-N bond length a / sqrt(3).
  double bond_length() const;
  // Largest possible distance from any point to its nearest site.
  double max_snap_distance() const;
};

enum class PositionLaw {
  uniform_ball,     // normal direction times radius * cbrt(u)
  gaussian_nm,      // components standard normal in nm, truncated to the ball
};

struct PointCharge {
  Vec3 position;  // nm, defect at origin
  int q = 1;      // units of e
};

struct ChargeConfiguration {
  std::vector<PointCharge> charges;
  double radius_nm = 0.0;
  double rho_c = 0.0;  // nm^-3
};

struct EnvironmentConfig {
  HexLattice lattice;
  double radius_nm = 10.0;
  double exclusion_nm = 0.5;
  double eps_r = 1.0;
  PositionLaw law = PositionLaw::uniform_ball;
  int charge_e = 1;
  int max_attempts = 100;

  void validate() const;
};

// round(rho_c * 4/3 pi radius^3).
std::size_t charge_count(double rho_c, double radius_nm);

// One point drawn from `law` inside the ball of `radius_nm`.
Vec3 sample_point(RngStream& rng, double radius_nm, PositionLaw law = PositionLaw::uniform_ball);

// charge_count(rho_c, radius) points; point k draws from its own substream of
// `seed`, so the first n points do not depend on how many follow.
std::vector<Vec3> sample_positions(double rho_c, double radius_nm, std::uint64_t seed,
                                   PositionLaw law = PositionLaw::uniform_ball);

// Snaps each point to its nearest lattice site. Sites inside the exclusion
// radius, outside the ball, or already occupied are redrawn from point k's
// resample substream. Throws NumericalError after max_attempts redraws.
ChargeConfiguration snap_to_lattice(std::span<const Vec3> points, const EnvironmentConfig& env,
                                    std::uint64_t seed);

// sample_positions + snap_to_lattice for work item `config_index` of a run
// seeded with `master_seed`.
ChargeConfiguration generate_configuration(double rho_c, const EnvironmentConfig& env,
                                           std::uint64_t master_seed, std::uint64_t config_index);

// Coulomb field at the origin in V/cm. Throws InputError for any charge
// closer than exclusion_nm (or exactly at the origin).
ElectricFieldVec field_at_origin(std::span<const PointCharge> charges, double eps_r,
                                 double exclusion_nm = 0.0);
ElectricFieldVec field_at_origin(const ChargeConfiguration& cfg, double eps_r,
                                 double exclusion_nm = 0.0);

// CSV with header x_nm,y_nm,z_nm,q_e.
void write_charge_csv(std::ostream& out, const ChargeConfiguration& cfg);

}  // namespace vbsim
