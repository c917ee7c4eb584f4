#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <vector>

#include "vbsim/charge_environment.hpp"
#include "vbsim/error.hpp"

using namespace vbsim;

namespace {

constexpr double kK = 1.4399645;  // e / (4 pi eps0) in V nm

// Site coordinates written out from the honeycomb basis.
Vec3 site_oracle(const HexLattice& lat, int i, int j, int sub, int layer) {
  const double a = lat.a_nm;
  double x = a * i + 0.5 * a * j;
  double y = 0.5 * std::sqrt(3.0) * a * j;
  if (sub == 1) {
    x += 0.5 * a;
    y += a / (2.0 * std::sqrt(3.0));
  }
  return {x, y, layer * lat.interlayer_nm};
}

double brute_force_nearest(const HexLattice& lat, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  const int jc = static_cast<int>(std::floor(p.y / (0.5 * std::sqrt(3.0) * lat.a_nm)));
  const int ic = static_cast<int>(std::floor(p.x / lat.a_nm - 0.5 * jc));
  const int lc = static_cast<int>(std::floor(p.z / lat.interlayer_nm));
  for (int i = ic - 4; i <= ic + 4; ++i)
    for (int j = jc - 4; j <= jc + 4; ++j)
      for (int s = 0; s < 2; ++s)
        for (int l = lc - 2; l <= lc + 3; ++l)
          best = std::min(best, (site_oracle(lat, i, j, s, l) - p).norm());
  return best;
}

}  // namespace

TEST_CASE("charge_count") {
  CHECK(charge_count(0.0, 10.0) == 0);
  CHECK(charge_count(0.141, 10.0) == 591);
  CHECK(charge_count(0.046, 10.0) == 193);
  CHECK(charge_count(0.018, 10.0) == 75);
  CHECK_THROWS_AS(charge_count(-0.1, 10.0), InputError);
  CHECK(sample_positions(0.0, 10.0, 1).empty());

  EnvironmentConfig env;
  const ChargeConfiguration empty = generate_configuration(0.0, env, 7, 0);
  CHECK(empty.charges.empty());
  const ElectricFieldVec f = field_at_origin(empty, 1.0);
  CHECK(f.ex == 0.0);
  CHECK(f.ey == 0.0);
  CHECK(f.ez == 0.0);
}

TEST_CASE("lattice geometry") {
  const HexLattice lat;
  CHECK(lat.bond_length() == doctest::Approx(0.2504 / std::sqrt(3.0)));
  CHECK(lat.max_snap_distance() ==
        doctest::Approx(std::hypot(0.2504 / std::sqrt(3.0), 0.333 / 2.0)));

  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j)
      for (int s = 0; s < 2; ++s)
        for (int l = -2; l <= 2; ++l) {
          const LatticeSite site{i, j, s, l};
          const Vec3 p = lat.position(site);
          const Vec3 o = site_oracle(lat, i, j, s, l);
          CHECK((p - o).norm() < 1e-14);
          CHECK(lat.nearest_site(p) == site);
        }

  // Nearest in-plane neighbours of the vacancy site sit one bond away.
  CHECK(lat.position({0, 0, 1, 0}).norm() == doctest::Approx(lat.bond_length()));

  HexLattice bad;
  bad.a_nm = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("nearest_site agrees with a brute-force search") {
  const HexLattice lat;
  RngStream rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 3000; ++trial) {
    const Vec3 p{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
    const double d = (lat.position(lat.nearest_site(p)) - p).norm();
    CHECK(d == doctest::Approx(brute_force_nearest(lat, p)).epsilon(1e-12));
    worst = std::max(worst, d);
  }
  CHECK(worst <= lat.max_snap_distance() + 1e-12);
  CHECK(worst > 0.5 * lat.max_snap_distance());
}

TEST_CASE("uniform ball sampling") {
  constexpr double R = 10.0;
  constexpr std::size_t N = 100000;
  std::vector<double> u;
  u.reserve(N);
  double sx = 0.0, sy = 0.0, sz = 0.0;
  std::size_t inner = 0;
  for (std::size_t k = 0; k < N; ++k) {
    RngStream rng = RngStream::substream(42, k);
    const Vec3 p = sample_point(rng, R);
    const double r = p.norm();
    REQUIRE(r <= R);
    u.push_back(std::pow(r / R, 3.0));
    sx += p.x / r;
    sy += p.y / r;
    sz += p.z / r;
    if (r <= 0.5 * R) ++inner;
  }
  std::sort(u.begin(), u.end());
  double ks = 0.0;
  for (std::size_t k = 0; k < N; ++k)
    ks = std::max({ks, std::abs(u[k] - static_cast<double>(k) / N),
                   std::abs(u[k] - static_cast<double>(k + 1) / N)});
  CHECK(ks < 1.36 / std::sqrt(static_cast<double>(N)));
  CHECK(std::abs(sx / N) < 0.01);
  CHECK(std::abs(sy / N) < 0.01);
  CHECK(std::abs(sz / N) < 0.01);
  CHECK(static_cast<double>(inner) / N == doctest::Approx(0.125).epsilon(0.04));
}

TEST_CASE("gaussian position law") {
  constexpr std::size_t N = 50000;
  double s2 = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    RngStream rng = RngStream::substream(5, k);
    const Vec3 p = sample_point(rng, 10.0, PositionLaw::gaussian_nm);
    s2 += p.x * p.x + p.y * p.y + p.z * p.z;
  }
  CHECK(s2 / (3.0 * N) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("samples are prefix stable") {
  const auto small = sample_positions(0.018, 10.0, 99);
  const auto large = sample_positions(0.141, 10.0, 99);
  REQUIRE(small.size() < large.size());
  for (std::size_t k = 0; k < small.size(); ++k) CHECK(small[k] == large[k]);

  EnvironmentConfig env;
  const auto a = generate_configuration(0.018, env, 3, 17);
  const auto b = generate_configuration(0.141, env, 3, 17);
  for (std::size_t k = 0; k < a.charges.size(); ++k)
    CHECK(a.charges[k].position == b.charges[k].position);

  const auto c = generate_configuration(0.018, env, 3, 18);
  CHECK_FALSE(a.charges[0].position == c.charges[0].position);
}

TEST_CASE("snapped configurations respect the constraints") {
  EnvironmentConfig env;
  for (std::uint64_t idx = 0; idx < 20; ++idx) {
    const ChargeConfiguration cfg = generate_configuration(0.141, env, 11, idx);
    REQUIRE(cfg.charges.size() == 591);
    std::set<std::uint64_t> keys;
    for (const PointCharge& c : cfg.charges) {
      const double r = c.position.norm();
      CHECK(r >= env.exclusion_nm);
      CHECK(r <= env.radius_nm);
      CHECK(c.q == 1);
      const LatticeSite s = env.lattice.nearest_site(c.position);
      CHECK((env.lattice.position(s) - c.position).norm() < 1e-12);
      keys.insert(s.key());
    }
    CHECK(keys.size() == cfg.charges.size());
  }

  // Snapping moves an accepted point by at most the largest Voronoi radius.
  const auto raw = sample_positions(0.141, 10.0, 77);
  const ChargeConfiguration snapped = snap_to_lattice(raw, env, 77);
  std::size_t checked = 0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const Vec3 site = env.lattice.position(env.lattice.nearest_site(raw[k]));
    if (!(site == snapped.charges[k].position)) continue;  // resampled
    CHECK((site - raw[k]).norm() <= env.lattice.max_snap_distance() + 1e-12);
    ++checked;
  }
  CHECK(checked > raw.size() / 2);
}

TEST_CASE("snapping gives up when sites run out") {
  EnvironmentConfig env;
  env.radius_nm = 1.0;
  env.exclusion_nm = 0.1;
  const auto raw = sample_positions(250.0, env.radius_nm, 1);
  REQUIRE(raw.size() > 1000);
  CHECK_THROWS_AS(snap_to_lattice(raw, env, 1), NumericalError);
}

TEST_CASE("field_at_origin") {
  SUBCASE("single charge on the x axis") {
    const std::vector<PointCharge> q{{{1.0, 0.0, 0.0}, 1}};
    const ElectricFieldVec f = field_at_origin(q, 1.0);
    CHECK(f.ex == doctest::Approx(-kK * 1e7).epsilon(1e-12));
    CHECK(f.ex == doctest::Approx(-1.4399645e7).epsilon(1e-9));
    CHECK(f.ey == 0.0);
    CHECK(f.ez == 0.0);
  }
  SUBCASE("symmetric pair cancels") {
    const std::vector<PointCharge> q{{{0.7, -1.1, 0.333}, 1}, {{-0.7, 1.1, -0.333}, 1}};
    const ElectricFieldVec f = field_at_origin(q, 1.0);
    CHECK(std::abs(f.ex) < 1e-6);
    CHECK(std::abs(f.ey) < 1e-6);
    CHECK(std::abs(f.ez) < 1e-6);
  }
  SUBCASE("charge on the axis gives a pure z field") {
    const std::vector<PointCharge> q{{{0.0, 0.0, 2.0}, 1}};
    const ElectricFieldVec f = field_at_origin(q, 1.0);
    CHECK(f.ex == 0.0);
    CHECK(f.ey == 0.0);
    CHECK(f.ez == doctest::Approx(-kK / 4.0 * 1e7).epsilon(1e-12));
  }
  SUBCASE("negative charge and dielectric screening") {
    const std::vector<PointCharge> q{{{0.0, 3.0, 0.0}, -2}};
    const ElectricFieldVec f = field_at_origin(q, 4.0);
    CHECK(f.ey == doctest::Approx(2.0 * kK / 9.0 / 4.0 * 1e7).epsilon(1e-12));
  }
  SUBCASE("superposition and 1/eps_r scaling") {
    EnvironmentConfig env;
    const ChargeConfiguration cfg = generate_configuration(0.046, env, 8, 0);
    const ElectricFieldVec total = field_at_origin(cfg, 1.0);
    ElectricFieldVec sum;
    for (const PointCharge& c : cfg.charges)
      sum += field_at_origin(std::span<const PointCharge>(&c, 1), 1.0);
    CHECK(total.ex == doctest::Approx(sum.ex).epsilon(1e-9));
    CHECK(total.ey == doctest::Approx(sum.ey).epsilon(1e-9));
    CHECK(total.ez == doctest::Approx(sum.ez).epsilon(1e-9));
    const ElectricFieldVec screened = field_at_origin(cfg, 3.0);
    CHECK(screened.ex == doctest::Approx(total.ex / 3.0).epsilon(1e-12));
    CHECK(screened.ez == doctest::Approx(total.ez / 3.0).epsilon(1e-12));
  }
  SUBCASE("errors") {
    const std::vector<PointCharge> origin{{{0.0, 0.0, 0.0}, 1}};
    CHECK_THROWS_AS(field_at_origin(origin, 1.0), InputError);
    const std::vector<PointCharge> close{{{0.3, 0.0, 0.0}, 1}};
    CHECK_NOTHROW(field_at_origin(close, 1.0));
    CHECK_THROWS_AS(field_at_origin(close, 1.0, 0.5), InputError);
    const std::vector<PointCharge> ok{{{1.0, 0.0, 0.0}, 1}};
    CHECK_THROWS_AS(field_at_origin(ok, 0.0), InputError);
  }
}

TEST_CASE("environment validation and csv output") {
  EnvironmentConfig env;
  CHECK_NOTHROW(env.validate());
  env.radius_nm = 60.0;
  CHECK_THROWS_AS(env.validate(), InputError);
  env = {};
  env.exclusion_nm = -1.0;
  CHECK_THROWS_AS(env.validate(), InputError);
  env = {};
  env.eps_r = 0.0;
  CHECK_THROWS_AS(env.validate(), InputError);

  ChargeConfiguration cfg;
  cfg.charges.push_back({{1.0, -0.5, 0.333}, 1});
  std::ostringstream out;
  write_charge_csv(out, cfg);
  CHECK(out.str().rfind("x_nm,y_nm,z_nm,q_e\n", 0) == 0);
  CHECK(out.str().find("1,-0.5,0.333,1") != std::string::npos);
}
