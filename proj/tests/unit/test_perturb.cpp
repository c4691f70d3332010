#include <catch_amalgamated.hpp>

#include <cmath>

#include "lipforge/perturb.hpp"
#include "lipforge/sampling.hpp"

using namespace lipforge;
using Catch::Matchers::WithinRel;

namespace {

const auto eu = NormKind::euclidean;

Domain unit_box() { return Domain::box(Vec{0, 0}, Vec{1, 1}, eu); }

double to_d(const Real& x) { return static_cast<double>(x); }

}  // namespace

TEST_CASE("choose_s examples", "[perturb]") {
  CHECK(choose_s({Vec{0.25, 0.25}, Vec{0.75, 0.75}}, unit_box()) == 0.0625);
  CHECK(choose_s({Vec{0.5, 0.5}}, unit_box()) == 0.125);
  CHECK_THROWS_WITH(choose_s({Vec{0.5, 0.5}, Vec{0.5, 0.5}}, unit_box()), Catch::Matchers::ContainsSubstring("zero separation"));
  CHECK_THROWS_WITH(choose_s({}, unit_box()), Catch::Matchers::ContainsSubstring("empty"));
  CHECK_THROWS_WITH(choose_s({Vec{0, 0.5}}, unit_box()), Catch::Matchers::ContainsSubstring("zero margin"));
}

TEST_CASE("blend_params closed forms", "[perturb]") {
  const Real r(0.5), s(0.25), diam = sqrt(Real(2));
  const auto p = blend_params(r, s, diam);
  // Independent long-double evaluation of rs/(4(1+D)) and r²s/(16(1+D)²).
  const long double D = std::sqrt(2.0L);
  const long double beta = 0.5L * 0.25L / (4 * (1 + D));
  const long double alpha = 0.25L * 0.25L / (16 * (1 + D) * (1 + D));
  CHECK_THAT(to_d(p.beta), WithinRel(static_cast<double>(beta), 1e-12));
  CHECK_THAT(to_d(p.alpha), WithinRel(static_cast<double>(alpha), 1e-12));
  // 30-digit values of the same closed forms from an arbitrary-precision calculator.
  CHECK(abs(p.beta / parse_real("0.0129441738241592202750527726316") - 1) <= 1e-18);
  CHECK(abs(p.alpha / parse_real("0.000670206543960194931236806842112") - 1) <= 1e-18);
  CHECK_THAT(to_d(p.blow_up), WithinRel(0.25 / (0.25 - static_cast<double>(beta)), 1e-12));
  CHECK_THAT(to_d(p.blow_up), WithinRel(1.0546039050504400049, 1e-15));
  CHECK(p.alpha <= p.beta * p.beta / p.s);
  CHECK(p.beta < p.s / 2);
  CHECK(p.alpha < p.r);
  CHECK_THROWS(blend_params(Real(1), s, diam));
  CHECK_THROWS(blend_params(r, Real(0), diam));
  CHECK_THROWS(blend_params(r, s, Real(0)));
}

TEST_CASE("linearize_near on the zero function", "[perturb]") {
  const Domain dom = unit_box();
  const Vec x{0.5, 0.5};
  const auto L = LinearMap::from_rows({{0.5, 0}}, eu, eu);
  const auto res = linearize_near(LipFun::zero(2, 1), {x}, L, Real(0.5), dom);
  CHECK(res.alpha == res.params.alpha);
  CHECK(certified_one_lipschitz(res.g));
  Real worst(0);
  PrecisionScope scope(bits_for_scale(res.alpha));
  const Vec gx = res.g(x);
  for (const auto& u : ball_offsets(2, res.alpha, eu, 1000, 3))
    worst = std::max(worst, max_abs(res.g(x + u) - gx - L.apply(u)));
  CHECK(worst <= 1e-12 * res.alpha);
  CHECK(res.gap_sampled < 0.5);
  CHECK(res.coarse_gap_bound <= Real(0.5) * (1 + 1e-12));
  CHECK(res.gap_bound < 0.5);
  CHECK(res.gap_sampled <= res.gap_bound);
}

TEST_CASE("linearize_near preconditions", "[perturb]") {
  const Domain dom = unit_box();
  const auto big = LinearMap::from_rows({{0.6, 0}}, eu, eu);
  CHECK_THROWS_WITH(linearize_near(LipFun::zero(2, 1), {Vec{0.5, 0.5}}, big, Real(0.5), dom), "operator too large");
  const auto L = LinearMap::from_rows({{0.1, 0}}, eu, eu);
  const auto steep = LipFun::scale(Real(2), LipFun::norm_of(2, eu));
  CHECK_THROWS_WITH(linearize_near(steep, {Vec{0.5, 0.5}}, L, Real(0.5), dom), "f not 1-Lipschitz-certified");
}

TEST_CASE("g is a scaled copy of f off the s-balls", "[perturb]") {
  const Domain dom = unit_box();
  const auto f = LipFun::sum(LipFun::linear(LinearMap::from_rows({{0.3, 0.2}}, eu, eu)),
                             LipFun::scale(Real(0.4), LipFun::norm_of(2, eu, -1)));
  const std::vector<Vec> gamma{Vec{0.3, 0.3}, Vec{0.7, 0.4}, Vec{0.5, 0.75}};
  const auto L = LinearMap::from_rows({{-0.2, 0.3}}, eu, eu);
  const auto res = linearize_near(f, gamma, L, Real(0.4), dom);
  const Real& s = res.params.s;
  const Real scale = (s - res.params.beta) / s;
  std::size_t tested = 0;
  for (const auto& z : sample_domain(dom, 2000, 4)) {
    bool near = false;
    for (const auto& x : gamma) near = near || distance(z, x, eu) < s;
    if (near) continue;
    ++tested;
    CHECK(max_abs(res.g(z) - (scale * (f(z) - res.shift) + res.shift)) <= 1e-12);
  }
  CHECK(tested > 1000);
}

TEST_CASE("constant shifts of f shift g back", "[perturb]") {
  const Domain dom = unit_box();
  const auto f = LipFun::scale(Real(0.5), LipFun::norm_of(2, eu));
  const Vec c{0.37};
  const std::vector<Vec> gamma{Vec{0.25, 0.5}, Vec{0.75, 0.5}};
  const auto L = LinearMap::from_rows({{0.2, -0.1}}, eu, eu);
  const auto g = linearize_near(f, gamma, L, Real(0.5), dom).g;
  const auto gc = linearize_near(LipFun::add_const(f, c), gamma, L, Real(0.5), dom).g;
  auto pts = sample_domain(dom, 500, 6);
  for (const auto& x : gamma) {
    const auto near = sample_ball(x, Real(0.05), eu, 100, 8);
    pts.insert(pts.end(), near.begin(), near.end());
  }
  for (const auto& z : pts) CHECK(max_abs(gc(z) - c - g(z)) <= 1e-12);
}
