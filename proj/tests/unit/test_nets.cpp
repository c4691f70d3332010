#include <catch_amalgamated.hpp>

#include <sstream>

#include "lipforge/nets.hpp"

using namespace lipforge;

namespace {

const auto eu = NormKind::euclidean;

Domain unit_box() { return Domain::box(Vec{0, 0}, Vec{1, 1}, eu); }

TargetSet grid(const Rational& step) { return TargetSet::open_grid({0, 0}, {1, 1}, step); }

// Quadratic scan with no spatial index: keep p if it is delta-far from all kept.
std::vector<Vec> naive_greedy(const std::vector<Vec>& pts, double delta, std::vector<Vec> kept) {
  for (const auto& p : pts) {
    bool far = true;
    for (const auto& q : kept) far = far && distance(p, q, eu) >= delta;
    if (far) kept.push_back(p);
  }
  return kept;
}

}  // namespace

TEST_CASE("restrict examples", "[nets]") {
  const TargetSet g = grid(Rational(1, 20));
  const auto k1 = restrict(g, unit_box(), 1);
  REQUIRE(k1.size() == 1);
  CHECK(k1.front() == Vec{0.5, 0.5});
  for (const auto& p : restrict(g, unit_box(), 2)) CHECK(unit_box().dist_to_boundary(p) >= 0.25);
  CHECK(restrict(g, unit_box(), 2).size() == 11 * 11);
  CHECK(restrict(TargetSet{}, unit_box(), 3).empty());
}

TEST_CASE("separation examples", "[nets]") {
  CHECK(separation({Vec{0, 0}, Vec{1, 0}}, eu) == 1);
  CHECK(separation({Vec{0, 0}}, eu) == infinity());
  CHECK(abs(separation({Vec{0, 0}, Vec{0.3, 0.4}}, eu) - 0.5) <= 1e-15);
}

TEST_CASE("greedy_net matches a quadratic oracle", "[nets]") {
  const auto pts = grid(Rational(1, 10)).points;
  for (double delta : {0.25, 0.15, 0.1, 0.05}) {
    const auto net = greedy_net(pts, Real(delta), {}, eu);
    CHECK(net == naive_greedy(pts, delta, {}));
    for (const auto& p : pts) {
      bool covered = false;
      for (const auto& q : net) covered = covered || distance(p, q, eu) < delta;
      CHECK(covered);
    }
  }
  const auto seed = greedy_net(pts, Real(0.25), {}, eu);
  CHECK(greedy_net(pts, Real(0.125), seed, eu) == naive_greedy(pts, 0.125, seed));
}

TEST_CASE("greedy_net contracts", "[nets]") {
  CHECK(greedy_net({Vec{0.3, 0.3}}, Real(0.5), {}, eu) == std::vector<Vec>{Vec{0.3, 0.3}});
  CHECK_THROWS_WITH(greedy_net({}, Real(0.5), {Vec{0.1, 0.1}, Vec{0.2, 0.1}}, eu), "seed set violates separation");
  const auto pts = grid(Rational(1, 20)).points;
  const auto net = greedy_net(pts, Real(0.125), {}, eu);
  CHECK(greedy_net(net, Real(0.125), {}, eu) == net);
}

TEST_CASE("nested_nets invariants", "[nets]") {
  const auto single = nested_nets(TargetSet{{Vec{0.5, 0.5}}}, unit_box(), 3);
  for (int k = 1; k <= 3; ++k) CHECK(single.level(k) == std::vector<Vec>{Vec{0.5, 0.5}});

  const TargetSet g = grid(Rational(1, 20));
  const auto fam = nested_nets(g, unit_box(), 6);
  REQUIRE(fam.k_max() == 6);
  for (int k = 1; k <= 6; ++k) {
    const auto& lvl = fam.level(k);
    const Real delta = pow2(-k);
    CHECK(separation(lvl, eu) >= delta);
    for (const auto& p : lvl) {
      CHECK(unit_box().dist_to_boundary(p) >= delta);
      CHECK(std::find(g.points.begin(), g.points.end(), p) != g.points.end());
    }
    if (k > 1)
      for (const auto& p : fam.level(k - 1)) CHECK(std::find(lvl.begin(), lvl.end(), p) != lvl.end());
    CHECK(lvl == naive_greedy(restrict(g, unit_box(), k), std::ldexp(1.0, -k), fam.level(k - 1)));
  }
}

TEST_CASE("net csv export", "[nets]") {
  const auto fam = nested_nets(TargetSet{{Vec{0.5, 0.5}, Vec{0.25, 0.75}}}, unit_box(), 3);
  std::ostringstream os;
  write_net_csv(os, fam);
  CHECK(os.str() == "k,x1,x2\n1,5e-1,5e-1\n2,5e-1,5e-1\n2,2.5e-1,7.5e-1\n3,5e-1,5e-1\n3,2.5e-1,7.5e-1\n");
}
