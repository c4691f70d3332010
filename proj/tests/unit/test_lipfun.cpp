#include <catch_amalgamated.hpp>

#include <random>

#include "lipforge/lipfun.hpp"
#include "lipforge/metric.hpp"

using namespace lipforge;
using Catch::Matchers::ContainsSubstring;

namespace {

const auto eu = NormKind::euclidean;

double to_d(const Real& x) { return static_cast<double>(x); }

LipFun id1() { return LipFun::identity(1, eu); }
LipFun zero1() { return LipFun::zero(1, 1); }

// Blend formula written out for f1 = 0, f2 = id in d = 1.
double blend_0_id(double a, double b, double x) {
  const double n = std::abs(x);
  if (n <= a) return 0;
  if (n >= b) return x;
  return b * (n - a) / (n * (b - a)) * x;
}

}  // namespace

TEST_CASE("eval examples", "[lipfun]") {
  const auto A = LipFun::linear(LinearMap::from_rows({{2, 0}}, eu, eu));
  CHECK(A(Vec{1, 1}) == Vec{2});
  const auto phi = radial_blend(Real(1), Real(2), zero1(), id1(), eu);
  CHECK(phi(Vec{1.5}) == Vec{1.0});
  CHECK(phi(Vec{0.5}) == Vec{0});
  CHECK(phi(Vec{3}) == Vec{3});
  CHECK_THROWS_WITH(A(Vec{1}), "dimension mismatch");
}

TEST_CASE("radial blend matches its formula", "[lipfun]") {
  const auto phi = radial_blend(Real(1), Real(2), zero1(), id1(), eu);
  for (int i = -300; i <= 300; ++i) {
    const double x = i / 100.0;
    CHECK(abs(phi(Vec{x})[0] - blend_0_id(1, 2, x)) <= 1e-15);
    // (iv): |Φ(x) − x| ≤ a·Lip(id) = 1.
    CHECK(abs(phi(Vec{x})[0] - x) <= 1 + 1e-12);
  }
}

TEST_CASE("radial blend preconditions", "[lipfun]") {
  CHECK_THROWS_WITH(radial_blend(Real(2), Real(1), zero1(), id1(), eu), ContainsSubstring("0 < a < b"));
  CHECK_THROWS_WITH(radial_blend(Real(1), Real(1), zero1(), id1(), eu), ContainsSubstring("0 < a < b"));
  const auto shifted = LipFun::add_const(id1(), Vec{0.5});
  CHECK_THROWS_WITH(radial_blend(Real(1), Real(2), zero1(), shifted, eu), ContainsSubstring("nonzero at origin"));
}

TEST_CASE("lip_cert examples", "[lipfun]") {
  CHECK(LipFun::scale(Real(0.5), LipFun::norm_of(2, eu)).lip_cert() == 0.5);
  CHECK(radial_blend(Real(1), Real(2), zero1(), id1(), eu).lip_cert() == 2);
  CHECK(LipFun::constant(Vec{3}, 2).lip_cert() == 0);
  CHECK(LipFun::sum(id1(), LipFun::scale(Real(-2), id1())).lip_cert() == 3);
  const auto dom = Domain::box(Vec{0}, Vec{4}, eu);
  const auto p = patch(id1(), {{Vec{2}, Real(0.5), id1()}}, dom);
  CHECK(p.lip_cert() == 1);
  const auto half = LipFun::linear(LinearMap::from_rows({{0.5}}, eu, eu));
  CHECK(LipFun::precompose(half, LipFun::scale(Real(3), id1())).lip_cert() == 1.5);
}

TEST_CASE("patch examples", "[lipfun]") {
  const auto dom = Domain::box(Vec{0, 0}, Vec{1, 1}, eu);
  const auto f = LipFun::norm_of(2, eu);
  const auto empty = patch(f, {}, dom);
  CHECK(empty(Vec{0.3, 0.4}) == f(Vec{0.3, 0.4}));

  CHECK_NOTHROW(patch(f, {{Vec{0.25, 0.5}, Real(0.1), f}, {Vec{0.75, 0.5}, Real(0.1), f}}, dom));
  CHECK_THROWS_WITH(patch(f, {{Vec{0.45, 0.5}, Real(0.1), f}, {Vec{0.55, 0.5}, Real(0.1), f}}, dom),
                    "patch overlap");
  CHECK_THROWS_WITH(patch(f, {{Vec{0.05, 0.5}, Real(0.1), f}}, dom), "patch escapes domain");
  // A constant inner disagrees with |z| on the sphere.
  CHECK_THROWS_WITH(patch(f, {{Vec{0.5, 0.5}, Real(0.1), LipFun::constant(Vec{0}, 2)}}, dom),
                    "patch boundary mismatch");

  const auto same = patch(f, {{Vec{0.5, 0.5}, Real(0.1), f}}, dom);
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    const Vec z{u(gen), u(gen)};
    CHECK(same(z) == f(z));
  }
}

TEST_CASE("patched lookup agrees with a linear scan", "[lipfun]") {
  const auto dom = Domain::box(Vec{0, 0}, Vec{1, 1}, eu);
  // Cones r − ‖z − c‖ meet the zero outer function on every sphere.
  const auto outer = LipFun::constant(Vec{0}, 2);
  std::vector<PatchSpec> specs;
  std::vector<std::pair<Vec, double>> balls;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) {
      const Vec c{0.1 + 0.1 * i, 0.1 + 0.1 * j};
      const double r = 0.03 + 0.001 * ((i * 9 + j) % 7);
      const auto to_local = LipFun::affine(Vec(2), LinearMap::identity(2, eu), c);
      const auto cone = LipFun::add_const(LipFun::precompose(LipFun::norm_of(2, eu, -1), to_local), Vec{r});
      specs.push_back({c, Real(r), cone});
      balls.emplace_back(c, r);
    }
  const auto p = patch(outer, specs, dom);
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> u(0, 1);
  for (int n = 0; n < 10000; ++n) {
    const Vec z{u(gen), u(gen)};
    double expect = 0;
    for (const auto& [c, r] : balls) {
      const double dist = std::hypot(to_d(z[0] - c[0]), to_d(z[1] - c[1]));
      if (dist < r) expect = r - dist;
    }
    REQUIRE(abs(p(z)[0] - expect) <= 1e-14);
  }
}

TEST_CASE("sampled quotients never exceed lip_cert", "[lipfun]") {
  const auto A = LinearMap::from_rows({{0.3, -0.4}}, eu, eu);
  const auto f = LipFun::sum(LipFun::linear(A), LipFun::scale(Real(0.5), LipFun::norm_of(2, eu, -1)));
  const auto phi = radial_blend(Real(0.2), Real(0.5), LipFun::linear(A), LipFun::norm_of(2, eu), eu);
  std::mt19937_64 gen(23);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  for (const auto& g : {f, phi}) {
    for (int i = 0; i < 10000; ++i) {
      const Vec x{u(gen), u(gen)}, y{u(gen), u(gen)};
      CHECK(norm(g(x) - g(y), eu) <= g.lip_cert() * norm(x - y, eu) + 1e-9);
    }
  }
}

TEST_CASE("sup_dist examples", "[lipfun]") {
  const auto dom = Domain::box(Vec{0, 0}, Vec{1, 1}, eu);
  const auto f = LipFun::norm_of(2, eu);
  CHECK(sup_dist(f, f, dom, eu) == 0);
  CHECK(sup_dist(LipFun::constant(Vec{0, 0}, 2), LipFun::constant(Vec{3, 4}, 2), dom, eu) == 5);
  const auto g = LipFun::linear(LinearMap::from_rows({{0.5, 0.5}}, eu, eu));
  CHECK(sup_dist(f, g, dom, eu, 128, 4) == sup_dist(g, f, dom, eu, 128, 4));
  // ‖z‖ − (z1+z2)/2 on the unit box peaks at 0.5 in the corners (1,0), (0,1).
  const Real d = sup_dist(f, g, dom, eu, 1024, 4);
  CHECK(d <= 0.5 + 1e-12);
  CHECK(d > 0.45);
}
