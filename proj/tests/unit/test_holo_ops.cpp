#include <doctest.h>

#include <cmath>
#include <random>

#include "eclab/errors.hpp"
#include "eclab/holo_ops.hpp"

using namespace eclab;

namespace {

HoloFunc z() { return HoloFunc::identity(); }

// prod (z - r_k)
HoloFunc from_roots(const std::vector<cplx>& roots, cplx lead = 1.0) {
  std::vector<cplx> c{lead};
  for (cplx r : roots) {
    std::vector<cplx> n(c.size() + 1, 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      n[k + 1] += c[k];
      n[k] -= r * c[k];
    }
    c = n;
  }
  return HoloFunc::poly(c);
}

double scan_sup_circle(const HoloFunc& f, cplx c, double r, int n) {
  double m = 0.0;
  for (int k = 0; k < n; ++k) m = std::max(m, std::abs(f(c + std::polar(r, 2.0 * M_PI * (k + 0.5) / n))));
  return m;
}

}  // namespace

TEST_CASE("sup_modulus brackets") {
  ModulusBracket b = sup_modulus(z(), DiscDomain(0.0, 1.0));
  CHECK(b.lo() == doctest::Approx(1.0));
  CHECK(b.lo() <= 1.0);
  CHECK(b.hi() >= 1.0);
  CHECK(b.hi() <= 1.0 + 1e-2);

  HoloFunc f = HoloFunc::poly({1.0, 0.0, 1.0});
  ModulusBracket b2 = sup_modulus(f, DiscDomain(0.0, 1.0));
  CHECK(b2.lo() <= 2.0);
  CHECK(b2.hi() >= 2.0);
  CHECK(scan_sup_circle(f, 0.0, 1.0, 1000000) <= b2.hi());

  ModulusBracket b3 = sup_modulus(HoloFunc::constant(cplx(3, 4)), DiscDomain(1.0, 2.0));
  CHECK(b3.lo() == doctest::Approx(5.0));
  CHECK(b3.hi() == doctest::Approx(5.0));

  CHECK_THROWS_AS(sup_modulus(z(), DiscDomain(0.0, 1.0), 8), ParameterError);
}

TEST_CASE("sup_modulus bracket holds for random polynomials") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<cplx> c(2 + t % 7);
    for (auto& x : c) x = {u(rng), u(rng)};
    HoloFunc f = HoloFunc::poly(c);
    cplx ctr(0.5 * u(rng), 0.5 * u(rng));
    double r = 0.5 + 0.5 * std::abs(u(rng));
    ModulusBracket b = sup_modulus(f, DiscDomain(ctr, r), 4096);
    double scan = scan_sup_circle(f, ctr, r, 200000);
    CHECK(b.lo() <= scan * (1 + 1e-12));
    CHECK(scan <= b.hi());
  }
}

TEST_CASE("inf_modulus_on_disc brackets") {
  ModulusBracket a = inf_modulus_on_disc(z(), DiscDomain(2.0, 0.5));
  CHECK(a.lo() <= 1.5);
  CHECK(a.lo() >= 1.5 - 0.05);
  ModulusBracket b = inf_modulus_on_disc(HoloFunc::constant(3.0), DiscDomain(0.0, 1.0));
  CHECK(b.lo() == doctest::Approx(3.0));
  ModulusBracket c = inf_modulus_on_disc(HoloFunc::power(z(), 2), DiscDomain(2.0, 0.1));
  CHECK(c.lo() <= 3.61);
  CHECK(c.hi() >= 3.61 - 1e-12);
  CHECK(c.lo() >= 3.61 - 0.05);
}

TEST_CASE("taylor_truncate") {
  HoloFunc p = HoloFunc::poly({1.0, 2.0, 3.0});
  Truncation t = taylor_truncate(p, DiscDomain(0.0, 1.0, 2.0), 1e-6);
  CHECK(t.error_bound == 0.0);
  CHECK(t.poly.structurally_equal(p));

  // 1/(1 - z/4) by a degree-200 geometric polynomial
  std::vector<cplx> g(201);
  for (int k = 0; k <= 200; ++k) g[k] = std::pow(0.25, k);
  HoloFunc geo = HoloFunc::poly(g);
  const double eps = 1e-6;
  Truncation tg = taylor_truncate(geo, DiscDomain(0.0, 1.0, 2.0), eps);
  CHECK(tg.error_bound <= eps);
  CHECK(tg.degree < 200);
  // sup on |z| = 2 is about 2, so the degree is close to log(4/eps)/log 2
  CHECK(tg.degree <= static_cast<std::uint64_t>(std::ceil(std::log(2.0 * 2.0 * 2.0 / eps) / std::log(2.0))) + 2);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    cplx q = std::polar(1.0, 2.0 * M_PI * k / 10000);
    worst = std::max(worst, std::abs(geo(q) - tg.poly(q)));
  }
  CHECK(worst <= eps);

  Truncation big = taylor_truncate(HoloFunc::poly({0.1, 0.01}), DiscDomain(0.0, 1.0, 2.0), 10.0);
  CHECK(big.degree == 0);

  CHECK_THROWS_AS(taylor_truncate(p, DiscDomain(0.0, 1.0, 2.0), 0.0), ParameterError);
  CHECK_THROWS_AS(taylor_truncate(p, DiscDomain(0.0, 2.0, 1.0), 1e-3), ParameterError);
}

TEST_CASE("count_zeros on small examples") {
  HoloFunc f = HoloFunc::poly({-1.0, 0.0, 1.0});
  CHECK(count_zeros(f, RectContour{cplx(-2, -2), cplx(2, 2)}) == 2);
  CHECK(count_zeros(HoloFunc::constant(1.0), CircleContour{0.0, 3.0}) == 0);
  CHECK(count_zeros(HoloFunc::power(z(), 3), CircleContour{0.0, 1.0}) == 3);
  CHECK_THROWS_AS(count_zeros(f, CircleContour{0.0, 1.0}), ContourError);
}

TEST_CASE("count_zeros matches planted roots") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    int deg = 1 + t % 8;
    std::vector<cplx> roots;
    int inside = 0;
    for (int k = 0; k < deg; ++k) {
      cplx r(1.8 * u(rng), 1.8 * u(rng));
      if (std::abs(std::abs(r) - 1.0) < 0.05) r *= 1.2;
      inside += std::abs(r) < 1.0;
      roots.push_back(r);
    }
    CHECK(count_zeros(from_roots(roots, cplx(0.7, 0.2)), CircleContour{0.0, 1.0}) == inside);
  }
}

TEST_CASE("find_preimage") {
  Preimage a = find_preimage(z(), std::vector<cplx>{cplx(3, 4)}, 2.0, 8.0);
  CHECK(std::abs(a.z - cplx(3, 4)) < 1e-10);
  Preimage b = find_preimage(HoloFunc::power(z(), 2), std::vector<cplx>{4.0}, 1.0, 4.0);
  CHECK(std::abs(b.z - cplx(2, 0)) < 1e-10);
  CHECK(b.residual <= 1e-10);
  CHECK(std::abs(b.z) > 1.0);
  // 1 + z/10 only reaches 100 near |z| = 990
  CHECK_THROWS_AS(find_preimage(HoloFunc::poly({1.0, 0.1}), std::vector<cplx>{100.0}, 1.0, 20.0), NotFoundError);
}

TEST_CASE("find_preimage residuals on random polynomials") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    std::vector<cplx> c(2 + t % 5);
    for (auto& x : c) x = {u(rng), u(rng)};
    c.back() = 1.0;
    HoloFunc f = HoloFunc::poly(c);
    cplx w(5 * u(rng), 5 * u(rng));
    Preimage p = find_preimage(f, std::vector<cplx>{w}, 0.5, 12.0);
    CHECK(std::abs(p.z) > 0.5);
    CHECK(p.residual <= 1e-10);
    CHECK(std::abs(f(p.z) - w) <= 1e-10);
  }
}

TEST_CASE("structural_sup dominates the sampled sup") {
  HoloFunc f = HoloFunc::power(HoloFunc::poly({0.5, 0.5}), 40) * (z() + HoloFunc::constant(2.0));
  DiscDomain d(0.0, 1.0);
  XReal s = structural_sup(f, d);
  CHECK(s.to_double() >= scan_sup_circle(f, 0.0, 1.0, 100000));
  // the atom slack is raised to the 40th power, so the bound is loose
  CHECK(s.to_double() <= 3.0 * 1.2);
}
