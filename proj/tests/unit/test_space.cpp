#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lipforge/sampling.hpp"
#include "lipforge/space.hpp"

using namespace lipforge;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const auto eu = NormKind::euclidean;

double to_d(const Real& x) { return static_cast<double>(x); }

// Largest ‖Au‖₂ over unit u = (cos θ, sin θ), θ on a fine sweep.
double sweep_op_norm_2x2(double a, double b, double c, double d) {
  double best = 0;
  for (int i = 0; i < 200000; ++i) {
    const double t = M_PI * i / 200000;
    const double x = a * std::cos(t) + b * std::sin(t), y = c * std::cos(t) + d * std::sin(t);
    best = std::max(best, std::hypot(x, y));
  }
  return best;
}

// max over vertices of the unit ball of the input norm, for sup/one inputs.
double vertex_op_norm(const std::vector<double>& m, std::size_t rows, std::size_t cols, NormKind in, NormKind out) {
  std::vector<std::vector<double>> verts;
  if (in == NormKind::one) {
    for (std::size_t j = 0; j < cols; ++j)
      for (double s : {-1.0, 1.0}) {
        std::vector<double> v(cols, 0.0);
        v[j] = s;
        verts.push_back(v);
      }
  } else {
    for (std::size_t mask = 0; mask < (1u << cols); ++mask) {
      std::vector<double> v(cols);
      for (std::size_t j = 0; j < cols; ++j) v[j] = mask >> j & 1 ? 1.0 : -1.0;
      verts.push_back(v);
    }
  }
  double best = 0;
  for (const auto& v : verts) {
    double acc = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      double y = 0;
      for (std::size_t c = 0; c < cols; ++c) y += m[r * cols + c] * v[c];
      if (out == NormKind::sup) acc = std::max(acc, std::abs(y));
      else if (out == NormKind::one) acc += std::abs(y);
      else acc += y * y;
    }
    best = std::max(best, out == NormKind::euclidean ? std::sqrt(acc) : acc);
  }
  return best;
}

}  // namespace

TEST_CASE("norm examples", "[space]") {
  CHECK(norm(Vec{3, 4}, eu) == 5);
  CHECK(norm(Vec{3, 4}, NormKind::sup) == 4);
  CHECK(norm(Vec{0, 0}, NormKind::one) == 0);
  CHECK(norm(Vec{3, -4}, NormKind::one) == 7);
}

TEST_CASE("norm axioms on sampled triples", "[space]") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-3, 3);
  for (NormKind k : {NormKind::euclidean, NormKind::sup, NormKind::one}) {
    for (int i = 0; i < 500; ++i) {
      const Vec x{u(gen), u(gen), u(gen)}, y{u(gen), u(gen), u(gen)};
      const Real c(u(gen));
      CHECK(norm(x + y, k) <= norm(x, k) + norm(y, k) + 1e-12);
      CHECK(abs(norm(c * x, k) - abs(c) * norm(x, k)) <= 1e-12);
    }
  }
}

TEST_CASE("op_norm examples", "[space]") {
  CHECK(to_d(LinearMap::from_rows({{0.5, 0}}, eu, eu).op_norm()) == 0.5);
  CHECK(to_d(LinearMap::identity(2, eu).op_norm()) == 1);
  const double diag = to_d(LinearMap::from_rows({{3, 0}, {0, 4}}, eu, eu).op_norm());
  CHECK_THAT(diag, WithinRel(sweep_op_norm_2x2(3, 0, 0, 4), 1e-9));
  CHECK_THAT(diag, WithinRel(4.0, 1e-10));
}

TEST_CASE("euclidean op_norm against an angle sweep", "[space]") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 10; ++i) {
    const double a = u(gen), b = u(gen), c = u(gen), d = u(gen);
    const auto A = LinearMap::from_rows({{a, b}, {c, d}}, eu, eu);
    CHECK_THAT(to_d(A.op_norm()), WithinRel(sweep_op_norm_2x2(a, b, c, d), 1e-8));
  }
  // 3×3 goes through power iteration rather than the 2×2 closed form.
  const auto B = LinearMap::from_rows({{2, 0, 0}, {0, -5, 0}, {0, 0, 1}}, eu, eu);
  CHECK_THAT(to_d(B.op_norm()), WithinRel(5.0, 1e-10));
}

TEST_CASE("closed-form op_norm against vertex brute force", "[space]") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (NormKind in : {NormKind::sup, NormKind::one})
    for (NormKind out : {NormKind::euclidean, NormKind::sup, NormKind::one})
      for (int i = 0; i < 5; ++i) {
        std::vector<double> m(6);
        for (auto& x : m) x = u(gen);
        std::vector<Real> e(m.begin(), m.end());
        const LinearMap A(2, 3, e, in, out);
        CHECK_THAT(to_d(A.op_norm()), WithinRel(vertex_op_norm(m, 2, 3, in, out), 1e-12));
      }
}

TEST_CASE("op_norm dominates sampled quotients", "[space]") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (NormKind in : {NormKind::euclidean, NormKind::sup, NormKind::one})
    for (NormKind out : {NormKind::euclidean, NormKind::sup, NormKind::one}) {
      const auto A = LinearMap::from_rows({{u(gen), u(gen)}, {u(gen), u(gen)}}, in, out);
      for (int i = 0; i < 1000; ++i) {
        const Vec x{u(gen), u(gen)};
        if (norm(x, in) == 0) continue;
        CHECK(norm(A.apply(x), out) / norm(x, in) <= A.op_norm() + 1e-9);
      }
    }
}

TEST_CASE("op_norm rejects non-finite entries", "[space]") {
  CHECK_THROWS_WITH(LinearMap(1, 1, {Real(std::numeric_limits<double>::quiet_NaN())}, eu, eu),
                    Catch::Matchers::ContainsSubstring("non-finite"));
}

TEST_CASE("dist_to_boundary examples", "[space]") {
  const auto box = Domain::box(Vec{0, 0}, Vec{1, 1}, eu);
  CHECK(box.dist_to_boundary(Vec{0.5, 0.5}) == 0.5);
  CHECK(to_d(box.dist_to_boundary(Vec{0.1, 0.5})) == 0.1);
  const auto ball = Domain::ball(Vec{0, 0}, Real(1), eu);
  CHECK(ball.dist_to_boundary(Vec{0.25, 0}) == 0.75);
  CHECK_THROWS_WITH(box.dist_to_boundary(Vec{2, 0.5}), "point outside domain");
}

TEST_CASE("dist_to_boundary vanishes on the boundary", "[space]") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0, 1);
  const auto box = Domain::box(Vec{0, 0}, Vec{1, 1}, eu);
  for (int i = 0; i < 100; ++i) {
    const double t = u(gen);
    const Vec faces[] = {Vec{0, t}, Vec{1, t}, Vec{t, 0}, Vec{t, 1}};
    CHECK(box.dist_to_boundary(faces[i % 4]) == 0);
  }
  for (NormKind k : {NormKind::sup, NormKind::one}) {
    const auto ball = Domain::ball(Vec{0, 0}, Real(1), k);
    for (int i = 0; i < 100; ++i) {
      Vec p{u(gen) - 0.5, u(gen) - 0.5};
      p = p / norm(p, k);
      CHECK(abs(ball.dist_to_boundary(p)) <= 1e-12);
    }
  }
}

TEST_CASE("diam examples", "[space]") {
  CHECK_THAT(to_d(Domain::box(Vec{0, 0}, Vec{1, 1}, eu).diam()), WithinAbs(std::sqrt(2.0), 1e-15));
  CHECK(Domain::ball(Vec{0, 0}, Real(1), eu).diam() == 2);
  CHECK(Domain::box(Vec{0, 0}, Vec{1, 1}, NormKind::sup).diam() == 1);
}

TEST_CASE("sample_ball contract", "[space]") {
  const auto pts = sample_ball(Vec{0, 0}, Real(1), eu, 5, 1);
  REQUIRE(pts.size() == 5);
  for (const Vec& axis : {Vec{1, 0}, Vec{-1, 0}, Vec{0, 1}, Vec{0, -1}})
    CHECK(std::find(pts.begin(), pts.end(), axis) != pts.end());

  for (NormKind k : {NormKind::euclidean, NormKind::sup, NormKind::one}) {
    const Vec c{0.3, -0.2, 0.1};
    const auto many = sample_ball(c, Real(0.25), k, 200, 7);
    CHECK(many.size() == 200);
    for (const auto& p : many) CHECK(norm(p - c, k) <= 0.25 + 1e-15);
    CHECK(many == sample_ball(c, Real(0.25), k, 200, 7));
    CHECK(many != sample_ball(c, Real(0.25), k, 200, 8));
    // Some points lie on the boundary sphere.
    std::size_t on_sphere = 0;
    for (const auto& p : many) on_sphere += abs(norm(p - c, k) - 0.25) <= 1e-15;
    CHECK(on_sphere > 6);
  }
  CHECK_THROWS_WITH(sample_ball(Vec{0, 0}, Real(1), eu, 4, 1), Catch::Matchers::ContainsSubstring("budget too small"));
}
