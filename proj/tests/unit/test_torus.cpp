#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "eclab/errors.hpp"
#include "eclab/torus.hpp"

using namespace eclab;

namespace {

// brute force over translates |i|, |j| <= 2
double brute_dist(const Lattice& lat, cplx a, cplx b) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) best = std::min(best, std::abs(a - b - lat.point(i, j)));
  return best;
}

bool integer_combination(const Lattice& lat, cplx d) {
  double s, t;
  lat.coordinates(d, s, t);
  return std::abs(s - std::round(s)) < 1e-9 && std::abs(t - std::round(t)) < 1e-9;
}

}  // namespace

TEST_CASE("reduce") {
  const Lattice sq = Lattice::square();
  TorusPoint p = reduce(sq, cplx(2.5, 0.25));
  CHECK(std::abs(p.rep - cplx(0.5, 0.25)) < 1e-12);
  CHECK(std::abs(reduce(sq, cplx(0.3, 0.7)).rep - cplx(0.3, 0.7)) < 1e-15);

  const Lattice odd(2.0, cplx(1, 1));
  TorusPoint q = reduce(odd, cplx(3, 2));
  CHECK(q.s >= 0.0);
  CHECK(q.s < 1.0);
  CHECK(q.t >= 0.0);
  CHECK(q.t < 1.0);
  CHECK(integer_combination(odd, cplx(3, 2) - q.rep));
  // 3 + 2i = 0.5 * 2 + 2 * (1 + i): representative 1
  CHECK(std::abs(q.rep - cplx(1, 0)) < 1e-12);
}

TEST_CASE("reduce is idempotent and lattice invariant") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  std::uniform_int_distribution<int> k(-50, 50);
  for (const Lattice& lat : {Lattice::square(), Lattice::hexagonal(), Lattice(cplx(1.3, 0.2), cplx(-0.4, 2.1))}) {
    for (int i = 0; i < 100; ++i) {
      cplx z(u(rng), u(rng));
      TorusPoint p = reduce(lat, z);
      CHECK(std::abs(reduce(lat, p.rep).rep - p.rep) < 1e-9);
      CHECK(std::abs(reduce(lat, z + lat.point(k(rng), k(rng))).rep - p.rep) < 1e-9);
      CHECK(integer_combination(lat, z - p.rep));
    }
  }
}

TEST_CASE("lattice validation") {
  CHECK_THROWS(Lattice(1.0, 2.0));
  CHECK_THROWS(Lattice(cplx(0, 1), 1.0));  // wrong orientation
  CHECK(Lattice::square().cell_area() == doctest::Approx(1.0));
  CHECK(Lattice::hexagonal().cell_area() == doctest::Approx(std::sqrt(3.0) / 2.0));
  CHECK(Lattice::square().packing_radius() == doctest::Approx(0.5));
  CHECK(Lattice::square().covering_radius() == doctest::Approx(std::sqrt(0.5)));
  Lattice l = Lattice::from_json(Lattice::hexagonal().to_json());
  CHECK(l == Lattice::hexagonal());
}

TEST_CASE("torus_dist") {
  const Lattice sq = Lattice::square();
  TorusPoint p = reduce(sq, 0.05), q = reduce(sq, 0.95);
  CHECK(torus_dist(sq, p, p) == 0.0);
  CHECK(torus_dist(sq, p, q) == doctest::Approx(0.1));
  CHECK_THROWS_AS(torus_dist(sq, p, reduce(Lattice::hexagonal(), 0.2)), LatticeMismatch);
}

TEST_CASE("torus_dist against brute force, symmetry and triangle inequality") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (const Lattice& lat : {Lattice::square(), Lattice::hexagonal(), Lattice(cplx(1.0, 0.0), cplx(0.9, 0.3))}) {
    for (int i = 0; i < 200; ++i) {
      cplx a(u(rng), u(rng)), b(u(rng), u(rng)), c(u(rng), u(rng));
      TorusPoint pa = reduce(lat, a), pb = reduce(lat, b), pc = reduce(lat, c);
      double d = torus_dist(lat, pa, pb);
      CHECK(d <= std::abs(pa.rep - pb.rep) + 1e-12);
      CHECK(d == doctest::Approx(brute_dist(lat, pa.rep, pb.rep)).epsilon(1e-12));
      CHECK(d == torus_dist(lat, pb, pa));
      CHECK(torus_dist(lat, pa, pc) <= d + torus_dist(lat, pb, pc) + 1e-12);
      CHECK(torus_dist_to(pa, b) == doctest::Approx(d).epsilon(1e-12));
    }
  }
}

TEST_CASE("tubes are open") {
  const ProductTarget X;
  TorusPoint c = reduce(X.lattice1, cplx(0.3, 0.3));
  TubeNbhd tube(1, c, 0.25);
  TorusPoint other = reduce(X.lattice2, cplx(0.7, 0.1));
  CHECK(in_tube(tube, c, other));
  CHECK(!in_tube(tube, reduce(X.lattice1, cplx(0.55, 0.3)), other));
  CHECK(in_tube(tube, reduce(X.lattice1, cplx(0.54, 0.3)), other));
  CHECK(in_tube_lift(tube, XComplex(cplx(7.3, -4.7))));
  CHECK(!in_tube_lift(tube, XComplex::from_parts(cplx(0.7, 0.1), 80)));
  CHECK(tube.embedded());
  CHECK(!TubeNbhd(1, c, 0.6).embedded());
  CHECK(tube.doubled().rho == 0.5);
}

TEST_CASE("tube membership against brute force") {
  const ProductTarget X;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double rho = X.lattice2.covering_radius() / 2.0;
  TubeNbhd tube(2, reduce(X.lattice2, cplx(0.2, 0.4)), rho);
  TorusPoint x1 = reduce(X.lattice1, 0.0);
  for (int i = 0; i < 500; ++i) {
    cplx w(u(rng), u(rng));
    bool brute = brute_dist(X.lattice2, reduce(X.lattice2, w).rep, tube.center.rep) < rho;
    CHECK(in_tube(tube, x1, reduce(X.lattice2, w)) == brute);
    CHECK(in_tube_lift(tube, XComplex(w)) == brute);
  }
}

TEST_CASE("dense_sequence") {
  const Lattice sq = Lattice::square();
  TorusPoint first = dense_sequence(sq, 1);
  CHECK(first.s == doctest::Approx(0.32471795724474602596));
  CHECK(first.t == doctest::Approx(0.75487766624669276005));
  CHECK(dense_sequence(sq, 1).rep == first.rep);
  CHECK_THROWS_AS(dense_sequence(sq, 0), ParameterError);

  std::set<std::pair<double, double>> seen;
  int boxes[16][16] = {};
  for (std::uint64_t l = 1; l <= 10000; ++l) {
    TorusPoint p = dense_sequence(sq, l);
    seen.insert({p.s, p.t});
    boxes[static_cast<int>(p.s * 16)][static_cast<int>(p.t * 16)]++;
  }
  CHECK(seen.size() == 10000);
  int empty = 0;
  for (auto& row : boxes)
    for (int b : row) empty += b == 0;
  CHECK(empty == 0);
}

TEST_CASE("product target JSON") {
  ProductTarget X;
  X.lattice1 = Lattice(cplx(2, 0), cplx(0.5, 1.5));
  ProductTarget Y = ProductTarget::from_json(X.to_json());
  CHECK(Y.lattice1 == X.lattice1);
  CHECK(Y.lattice2 == X.lattice2);
}
