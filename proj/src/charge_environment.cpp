#include "vbsim/charge_environment.hpp"

#include <array>
#include <numbers>
#include <ostream>
#include <unordered_set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "vbsim/error.hpp"
#include "vbsim/units.hpp"

namespace vbsim {

namespace {

constexpr double kSqrt3 = std::numbers::sqrt3;

// Stream tags within one point's substream family.
constexpr std::uint64_t kDrawTag = 0;
constexpr std::uint64_t kResampleTag = 1;

double ball_volume(double radius) { return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius; }

}  // namespace

std::uint64_t LatticeSite::key() const {
  constexpr std::uint64_t kOffset = 1u << 20;
  constexpr std::uint64_t kMask = (1u << 21) - 1;
  return ((static_cast<std::uint64_t>(i + kOffset) & kMask) << 43) |
         ((static_cast<std::uint64_t>(j + kOffset) & kMask) << 22) |
         ((static_cast<std::uint64_t>(layer + kOffset) & kMask) << 1) |
         static_cast<std::uint64_t>(sublattice & 1);
}

void HexLattice::validate() const {
  if (!(a_nm > 0.0) || !(interlayer_nm > 0.0))
    throw InputError("lattice constant and interlayer spacing must be positive");
}

Vec3 HexLattice::position(const LatticeSite& s) const {
  // a1 = a (1, 0), a2 = a (1/2, sqrt3/2), nitrogen offset (a1 + a2) / 3.
  double x = a_nm * (s.i + 0.5 * s.j);
  double y = a_nm * (0.5 * kSqrt3 * s.j);
  if (s.sublattice == 1) {
    x += 0.5 * a_nm;
    y += a_nm * kSqrt3 / 6.0;
  }
  return {x, y, interlayer_nm * s.layer};
}

LatticeSite HexLattice::nearest_site(const Vec3& p) const {
  const int layer = static_cast<int>(std::lround(p.z / interlayer_nm));
  LatticeSite best{};
  double best_d2 = std::numeric_limits<double>::infinity();
  for (int sub = 0; sub < 2; ++sub) {
    const double ox = sub == 1 ? 0.5 * a_nm : 0.0;
    const double oy = sub == 1 ? a_nm * kSqrt3 / 6.0 : 0.0;
    const double v = (p.y - oy) / (0.5 * kSqrt3 * a_nm);
    const double u = (p.x - ox) / a_nm - 0.5 * v;
    const int u0 = static_cast<int>(std::floor(u));
    const int v0 = static_cast<int>(std::floor(v));
    // The nearest triangular-lattice point is a corner of the containing cell.
    for (int di = 0; di < 2; ++di) {
      for (int dj = 0; dj < 2; ++dj) {
        const LatticeSite cand{u0 + di, v0 + dj, sub, layer};
        const Vec3 q = position(cand);
        const double dx = q.x - p.x;
        const double dy = q.y - p.y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d2) {
          best_d2 = d2;
          best = cand;
        }
      }
    }
  }
  return best;
}

double HexLattice::bond_length() const { return a_nm / kSqrt3; }

double HexLattice::max_snap_distance() const {
  return std::hypot(bond_length(), 0.5 * interlayer_nm);
}

void EnvironmentConfig::validate() const {
  lattice.validate();
  if (!(radius_nm > 0.0)) throw InputError("simulation radius must be positive");
  if (radius_nm > 50.0) throw InputError("simulation radius above 50 nm is not supported");
  if (!(exclusion_nm >= 0.0) || exclusion_nm >= radius_nm)
    throw InputError("exclusion radius must lie in [0, radius)");
  if (!(eps_r > 0.0)) throw InputError("relative permittivity must be positive");
  if (max_attempts < 1) throw InputError("max_attempts must be at least 1");
}

std::size_t charge_count(double rho_c, double radius_nm) {
  if (!(rho_c >= 0.0) || !std::isfinite(rho_c)) throw InputError("charge density must be >= 0");
  if (!(radius_nm > 0.0)) throw InputError("simulation radius must be positive");
  return static_cast<std::size_t>(std::llround(rho_c * ball_volume(radius_nm)));
}

Vec3 sample_point(RngStream& rng, double radius_nm, PositionLaw law) {
  if (law == PositionLaw::gaussian_nm) {
    for (;;) {
      const Vec3 p{rng.normal(), rng.normal(), rng.normal()};
      if (p.norm() <= radius_nm) return p;
    }
  }
  Vec3 dir;
  double len = 0.0;
  do {
    dir = {rng.normal(), rng.normal(), rng.normal()};
    len = dir.norm();
  } while (len == 0.0);
  const double d = radius_nm * std::cbrt(rng.uniform_open_closed());
  return (d / len) * dir;
}

std::vector<Vec3> sample_positions(double rho_c, double radius_nm, std::uint64_t seed,
                                   PositionLaw law) {
  const std::size_t n = charge_count(rho_c, radius_nm);
  std::vector<Vec3> points;
  points.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    RngStream rng = RngStream::substream(seed, k, kDrawTag);
    points.push_back(sample_point(rng, radius_nm, law));
  }
  return points;
}

ChargeConfiguration snap_to_lattice(std::span<const Vec3> points, const EnvironmentConfig& env,
                                    std::uint64_t seed) {
  env.validate();
  ChargeConfiguration cfg;
  cfg.radius_nm = env.radius_nm;
  cfg.rho_c = static_cast<double>(points.size()) / ball_volume(env.radius_nm);
  cfg.charges.reserve(points.size());

  std::unordered_set<std::uint64_t> occupied;
  occupied.reserve(points.size() * 2);

  for (std::size_t k = 0; k < points.size(); ++k) {
    Vec3 raw = points[k];
    RngStream resample = RngStream::substream(seed, k, kResampleTag);
    for (int attempt = 0;; ++attempt) {
      const LatticeSite site = env.lattice.nearest_site(raw);
      const Vec3 pos = env.lattice.position(site);
      const double r = pos.norm();
      if (r >= env.exclusion_nm && r > 0.0 && r <= env.radius_nm &&
          occupied.insert(site.key()).second) {
        cfg.charges.push_back({pos, env.charge_e});
        break;
      }
      if (attempt >= env.max_attempts)
        throw NumericalError(fmt::format(
            "snap_to_lattice: no free site for charge {} after {} redraws (density too high)", k,
            env.max_attempts));
      raw = sample_point(resample, env.radius_nm, env.law);
    }
  }
  return cfg;
}

ChargeConfiguration generate_configuration(double rho_c, const EnvironmentConfig& env,
                                           std::uint64_t master_seed, std::uint64_t config_index) {
  const std::uint64_t seed = RngStream::substream(master_seed, config_index)();
  const std::vector<Vec3> points = sample_positions(rho_c, env.radius_nm, seed, env.law);
  ChargeConfiguration cfg = snap_to_lattice(points, env, seed);
  cfg.rho_c = rho_c;
  return cfg;
}

ElectricFieldVec field_at_origin(std::span<const PointCharge> charges, double eps_r,
                                 double exclusion_nm) {
  if (!(eps_r > 0.0)) throw InputError("relative permittivity must be positive");
  double ex = 0.0;
  double ey = 0.0;
  double ez = 0.0;
  for (const PointCharge& c : charges) {
    const double r = c.position.norm();
    if (r == 0.0 || r < exclusion_nm)
      throw InputError(fmt::format("charge at distance {} nm lies inside the exclusion radius", r));
    // Field at the origin points away from a positive charge: -r_hat.
    const double s = -units::kCoulombVNm * c.q / (r * r * r);
    ex += s * c.position.x;
    ey += s * c.position.y;
    ez += s * c.position.z;
  }
  return {units::v_per_nm_to_v_per_cm(ex / eps_r), units::v_per_nm_to_v_per_cm(ey / eps_r),
          units::v_per_nm_to_v_per_cm(ez / eps_r)};
}

ElectricFieldVec field_at_origin(const ChargeConfiguration& cfg, double eps_r,
                                 double exclusion_nm) {
  return field_at_origin(std::span<const PointCharge>(cfg.charges), eps_r, exclusion_nm);
}

void write_charge_csv(std::ostream& out, const ChargeConfiguration& cfg) {
  out << "x_nm,y_nm,z_nm,q_e\n";
  for (const PointCharge& c : cfg.charges)
    fmt::print(out, "{:.9g},{:.9g},{:.9g},{}\n", c.position.x, c.position.y, c.position.z, c.q);
}

}  // namespace vbsim
