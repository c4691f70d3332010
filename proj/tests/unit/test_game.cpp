#include <catch_amalgamated.hpp>

#include "lipforge/game.hpp"
#include "lipforge/transcript.hpp"

using namespace lipforge;
using Catch::Matchers::ContainsSubstring;

namespace {

const auto eu = NormKind::euclidean;

GameSetup small_setup(AdversaryKind adv = AdversaryKind::stay, int rounds = 4) {
  GameSetup s{Domain::box(Vec{0, 0}, Vec{1, 1}, eu), TargetSet::open_grid({0, 0}, {1, 1}, Rational(1, 10)),
              {LinearMap::from_rows({{0.5, 0}}, eu, eu), LinearMap::from_rows({{-0.5, 0}}, eu, eu)}};
  s.rounds = rounds;
  s.adversary = adv;
  s.seed = 3;
  return s;
}

const GameTranscript& stay_run() {
  static const GameTranscript t = run_game(small_setup());
  return t;
}

}  // namespace

TEST_CASE("round-robin schedule", "[game]") {
  for (int k = 1; k <= 8; ++k) CHECK(schedule(k, 2) == (k % 2 == 1 ? 0u : 1u));
  CHECK(schedule(7, 3) == 0);
  const auto& t = stay_run();
  for (const auto& rec : t.rounds) CHECK(rec.op == schedule(rec.k, 2));
}

TEST_CASE("shrink radius", "[game]") {
  const auto L = LinearMap::from_rows({{0.5, 0}}, eu, eu);
  CHECK(shrink_radius(3, Real(1), L) == 0.0625);
  CHECK(shrink_radius(1, Real(0.1), L) == 0.1);
}

TEST_CASE("validate_move", "[game]") {
  GameState state = start_game(small_setup());
  const auto zero = LipFun::zero(2, 1);
  // Round 1 is unconstrained beyond the shrink.
  CHECK(validate_move(state, zero, Real(0.5)).radius == 0.25);
  CHECK_THROWS_WITH(validate_move(state, zero, Real(0)), "radius must be positive");
  CHECK_THROWS_WITH(validate_move(state, LipFun::identity(2, eu), Real(0.1)), "dimension mismatch");
  CHECK_THROWS_WITH(validate_move(state, LipFun::scale(Real(2), LipFun::norm_of(2, eu)), Real(0.1)),
                    "move is not 1-Lipschitz-certified");
  play_round(state, adversary(AdversaryKind::stay, state, 1));
  const Real s1 = state.history.back().s;
  const auto far = LipFun::add_const(state.history.back().g, Vec{1.0});
  CHECK_THROWS_WITH(validate_move(state, far, s1 / 2), "move not nested");
  CHECK_NOTHROW(validate_move(state, state.history.back().g, s1 / 2));
  // Exactly filling the previous ball is allowed; exceeding it is not.
  const auto shifted = LipFun::add_const(state.history.back().g, Vec(std::vector<Real>{s1 / 2}));
  CHECK_NOTHROW(validate_move(state, shifted, s1 / 2));
  CHECK_THROWS_WITH(validate_move(state, shifted, s1), "move not nested");
}

TEST_CASE("player two keeps every round's contracts", "[game]") {
  const auto& t = stay_run();
  REQUIRE(t.rounds.size() == 4);
  for (std::size_t i = 0; i < t.rounds.size(); ++i) {
    const auto& rec = t.rounds[i];
    const Real k(rec.k);
    CHECK(rec.s < rec.alpha / k);
    CHECK(rec.r <= pow2(-rec.k) * (1 - t.operators[rec.op].op_norm()));
    CHECK(rec.gap_sampled + rec.s < rec.r);
    CHECK(rec.gap_bound + rec.s <= rec.r);
    CHECK(rec.alpha < rec.r);
    if (i > 0) CHECK(rec.s < t.rounds[i - 1].s);
    if (i > 0) CHECK(rec.move_gap + rec.r <= t.rounds[i - 1].s);
    CHECK(rec.gamma == nested_nets(small_setup().target, t.domain, 4).level(rec.k));
  }
  CHECK(t.tail_bound() <= pow2(-4));
  // Γ_1 of this grid is the center alone.
  CHECK(t.rounds[0].gamma == std::vector<Vec>{Vec{0.5, 0.5}});
}

TEST_CASE("exact linearity at every round's centers", "[game]") {
  const auto& t = stay_run();
  for (const auto& rec : t.rounds) {
    const auto& L = t.operators[rec.op];
    PrecisionScope scope(bits_for_scale(rec.alpha));
    for (const auto& x : rec.gamma) {
      const Vec gx = rec.g(x);
      for (const auto& u : ball_offsets(2, rec.alpha, eu, 9, 1))
        CHECK(max_abs(rec.g(x + u) - gx - L.apply(u)) <= 1e-9 * rec.alpha);
    }
  }
}

TEST_CASE("empty net rounds skip the perturbation", "[game]") {
  GameSetup s = small_setup(AdversaryKind::stay, 2);
  s.target = TargetSet{{Vec{0.1, 0.1}}};  // margin 0.1 first admits it at k = 4
  const auto t = run_game(s);
  for (const auto& rec : t.rounds) {
    CHECK(rec.gamma.empty());
    CHECK(rec.g.same_as(rec.f));
    CHECK(rec.alpha == rec.r / 2);
  }
}

TEST_CASE("adversaries", "[game]") {
  GameState state = start_game(small_setup());
  const Move first = adversary(AdversaryKind::stay, state, 1);
  CHECK(first.offset.is_zero());
  CHECK(first.radius == 0.5);
  play_round(state, first);
  const Move stay = adversary(AdversaryKind::stay, state, 1);
  CHECK(stay.offset.is_zero());
  CHECK(stay.radius == state.history.back().s / 2);
  const Move jitter = adversary(AdversaryKind::jitter, state, 1);
  CHECK(norm(jitter.offset, eu) <= state.history.back().s / 4);
  CHECK(jitter.radius == state.history.back().s / 4);
  const LipFun f = LipFun::add_const(state.history.back().g, jitter.offset);
  CHECK_NOTHROW(validate_move(state, f, jitter.radius));
  CHECK_THROWS_WITH(adversary(AdversaryKind::replay, state, 1, {first}), "replay exhausted");
  CHECK(parse_adversary_kind("jitter") == AdversaryKind::jitter);
  CHECK_THROWS_WITH(parse_adversary_kind("greedy"), ContainsSubstring("unknown adversary"));
}

TEST_CASE("run_game errors", "[game]") {
  GameSetup s = small_setup();
  s.operators = {LinearMap::from_rows({{1.0, 0}}, eu, eu)};
  CHECK_THROWS_WITH(run_game(s), "operator norm must be < 1");
  s = small_setup(AdversaryKind::replay, 3);
  CHECK_THROWS_WITH(run_game(s), "replay exhausted");
}

TEST_CASE("witnesses", "[game]") {
  const auto& t = stay_run();
  std::size_t centers = 0;
  for (const auto& rec : t.rounds) centers += rec.gamma.size();
  const auto w1 = witnesses(t, 1);
  CHECK(w1.size() == centers);
  for (const auto& w : w1) CHECK(w.x == w.center);
  const auto w3 = witnesses(t, 3, 5);
  CHECK(w3.size() == 3 * centers);
  for (const auto& w : w3) CHECK(distance(w.x, w.center, eu) < w.s);
  const auto again = witnesses(t, 3, 5);
  for (std::size_t i = 0; i < w3.size(); ++i) CHECK(again[i].x == w3[i].x);
  CHECK_THROWS(witnesses(t, 0));
}

TEST_CASE("transcript round-trip and replay are byte-identical", "[game]") {
  for (AdversaryKind adv : {AdversaryKind::stay, AdversaryKind::jitter}) {
    const GameSetup setup = small_setup(adv);
    const auto t = run_game(setup);
    const std::string text = write_transcript(t, setup.perturb);
    const auto loaded = read_transcript(text);
    CHECK(write_transcript(loaded.transcript, loaded.perturb) == text);
    const auto again = replay(loaded);
    CHECK(write_transcript(again, loaded.perturb) == text);
    CHECK(write_transcript(run_game(setup), setup.perturb) == text);
  }
  CHECK_THROWS_WITH(read_transcript("{\"schema\":\"lipforge-game/0\"}"), ContainsSubstring("unknown schema version"));
  CHECK_THROWS_WITH(read_transcript("{"), ContainsSubstring("malformed transcript"));
}
