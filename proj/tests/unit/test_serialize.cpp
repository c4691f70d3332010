#include <catch_amalgamated.hpp>

#include "lipforge/perturb.hpp"
#include "lipforge/sampling.hpp"
#include "lipforge/serialize.hpp"

using namespace lipforge;
using Catch::Matchers::ContainsSubstring;

namespace {

const auto eu = NormKind::euclidean;

Domain unit_box() { return Domain::box(Vec{0, 0}, Vec{1, 1}, eu); }

// Three nested patch layers: a perturbation of a perturbation of a cone.
LipFun three_level() {
  const Domain dom = unit_box();
  const auto L = LinearMap::from_rows({{0.25, 0.1}}, eu, eu);
  const auto f = LipFun::scale(Real(0.5), LipFun::norm_of(2, eu, -1));
  const auto g = linearize_near(f, {Vec{0.5, 0.5}}, L, Real(0.5), dom).g;
  return linearize_near(g, {Vec{0.25, 0.25}, Vec{0.75, 0.75}}, L.scaled(Real(-1)), Real(0.25), dom).g;
}

}  // namespace

TEST_CASE("linear node round-trips to the identical matrix", "[serialize]") {
  const auto A = LinearMap::from_rows({{0.1, -0.7}, {1.0 / 3, 2}}, eu, NormKind::sup);
  const auto art = deserialize(serialize(LipFun::linear(A)));
  const auto& lin = std::get<node::Linear>(art.f.node().payload);
  CHECK(lin.map == A);
}

TEST_CASE("patched tree round-trips bit-exactly", "[serialize]") {
  const LipFun f = three_level();
  const std::string text = serialize(f, unit_box());
  const auto art = deserialize(text);
  REQUIRE(art.domain);
  CHECK(art.domain->diam() == unit_box().diam());
  // Points concentrated near the patch centers, where the deep structure lives.
  auto pts = sample_domain(unit_box(), 700, 3);
  for (const Vec& c : {Vec{0.5, 0.5}, Vec{0.25, 0.25}, Vec{0.75, 0.75}}) {
    const auto near = sample_ball(c, Real(1e-4), eu, 100, 5);
    pts.insert(pts.end(), near.begin(), near.end());
  }
  for (const auto& z : pts) REQUIRE(art.f(z) == f(z));
  // Writing the copy gives the same bytes.
  CHECK(serialize(art.f, art.domain) == text);
}

TEST_CASE("numerals carry their precision", "[serialize]") {
  const Real x = with_bits(Real(1) / 3, 300);
  const json j = numeral_to_json(x, working_bits());
  CHECK_THAT(j.get<std::string>(), ContainsSubstring("@300"));
  const Real y = numeral_from_json(j, working_bits());
  CHECK(precision_of(y) == 300);
  CHECK(y == x);
  // Values at the document precision carry no suffix.
  CHECK(numeral_to_json(Real(0.5), working_bits()).get<std::string>() == "5e-1");
}

TEST_CASE("reader rejects broken input", "[serialize]") {
  const std::string text = serialize(three_level());
  CHECK_THROWS_WITH(deserialize(text.substr(0, text.size() / 2)), "malformed artifact");
  CHECK_THROWS_WITH(deserialize(""), "malformed artifact");
  CHECK_THROWS_WITH(deserialize("{\"schema\":\"lipforge-fun/9\"}"), ContainsSubstring("unknown schema version"));
  CHECK_THROWS_WITH(deserialize("[1,2]"), ContainsSubstring("malformed artifact"));
  CHECK_THROWS_WITH(deserialize("{\"schema\":\"lipforge-fun/1\",\"precision\":68}"),
                    ContainsSubstring("malformed artifact"));
}

TEST_CASE("rounded copies agree with the original", "[serialize]") {
  const LipFun f = three_level();
  const long full = max_precision(f);
  CHECK(full > working_bits());
  const LipFun same = rounded(f, full);
  const LipFun coarse = rounded(f, working_bits());
  CHECK(max_precision(coarse) <= working_bits());
  for (const auto& z : sample_domain(unit_box(), 300, 9)) {
    CHECK(same(z) == f(z));
    CHECK(max_abs(coarse(z) - f(z)) <= 1e-15);
  }
}
