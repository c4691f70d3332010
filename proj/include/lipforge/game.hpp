#pragma once

#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "lipforge/perturb.hpp"

namespace lipforge {

enum class AdversaryKind { stay, jitter, replay };

inline std::string_view to_string(AdversaryKind k) {
  switch (k) {
    case AdversaryKind::stay: return "stay";
    case AdversaryKind::jitter: return "jitter";
    case AdversaryKind::replay: return "replay";
  }
  return "stay";
}

inline AdversaryKind parse_adversary_kind(std::string_view s) {
  if (s == "stay") return AdversaryKind::stay;
  if (s == "jitter") return AdversaryKind::jitter;
  if (s == "replay") return AdversaryKind::replay;
  throw Error("unknown adversary '" + std::string(s) + "' (expected stay, jitter or replay)");
}

/// Player I's move: the ball B(g_{k−1} + offset, radius). In round 1 the
/// offset is taken from the initial function instead.
struct Move {
  Vec offset;
  Real radius;
};

struct RoundRecord {
  int k = 0;
  std::size_t op = 0;  // 0-based index of L_{n(k)}
  Move move;
  LipFun f;
  Real r;         // accepted radius after shrinking
  Real move_gap;  // ρ(f_k, g_{k−1}); zero in round 1
  LipFun g;
  Real s;
  Real alpha;
  std::vector<Vec> gamma;
  Real gap_sampled;  // ρ̂(g_k, f_k)
  Real gap_bound;    // certified ‖g_k − f_k‖∞
  std::optional<PerturbParams> params;
};

/// Fixed inputs of a game together with the rounds played so far.
struct GameState {
  Domain domain;
  NetFamily nets;
  std::vector<LinearMap> operators;
  LipFun initial;
  Real initial_radius{0.5};
  PerturbOptions perturb;
  std::vector<RoundRecord> history;

  int round() const { return static_cast<int>(history.size()) + 1; }
  NormKind out_norm() const { return operators.front().out_norm(); }
  const LipFun& previous_center() const { return history.empty() ? initial : history.back().g; }
};

/// Round-robin schedule n(k) = ((k−1) mod m) + 1, returned 0-based.
inline std::size_t schedule(int k, std::size_t m) { return static_cast<std::size_t>(k - 1) % m; }

inline void check_operators(const std::vector<LinearMap>& ops, std::size_t in_dim, std::size_t out_dim) {
  if (ops.empty()) throw Error("operator dictionary is empty");
  for (const auto& L : ops) {
    if (L.cols() != in_dim || L.rows() != out_dim) throw Error("operator dimensions do not match the target");
    if (!(L.op_norm() < 1)) throw Error("operator norm must be < 1");
    if (L.out_norm() != ops.front().out_norm()) throw Error("operators disagree on the codomain norm");
  }
}

/// ρ(f, center), exact when f is center itself or a constant shift of it and
/// sampled otherwise.
inline Real move_gap(const LipFun& f, const LipFun& center, const Domain& domain, NormKind out_norm) {
  if (f.same_as(center)) return Real(0);
  if (const auto* a = std::get_if<node::AddConst>(&f.node().payload); a && a->f.same_as(center))
    return norm(a->offset, out_norm);
  return sup_dist(f, center, domain, out_norm);
}

/// r_k = min(r, 2^{-k}(1 − ‖L‖)).
inline Real shrink_radius(int k, const Real& r, const LinearMap& L) { return std::min(r, Real(pow2(-k) * (1 - L.op_norm()))); }

struct AcceptedMove {
  Real radius;
  Real gap;
};

/// Checks that B̄(f, r) ⊆ B̄(g_{k−1}, s_{k−1}) via ρ(f, g_{k−1}) + r ≤ s_{k−1} and
/// shrinks r to min(r, 2^{-k}(1 − ‖L_{n(k)}‖)).
inline AcceptedMove validate_move(const GameState& state, const LipFun& f, const Real& r) {
  const int k = state.round();
  if (!(r > 0)) throw Error("radius must be positive");
  if (f.in_dim() != state.domain.dim() || f.out_dim() != state.operators.front().rows())
    throw Error("dimension mismatch");
  if (!certified_one_lipschitz(f)) throw Error("move is not 1-Lipschitz-certified");
  Real gap(0);
  if (!state.history.empty()) {
    gap = move_gap(f, state.history.back().g, state.domain, state.out_norm());
    if (gap + r > state.history.back().s) throw Error("move not nested");
  }
  const LinearMap& L = state.operators[schedule(k, state.operators.size())];
  return {shrink_radius(k, r, L), gap};
}

struct Player2Reply {
  LipFun g;
  Real s;
  Real alpha;
  Real gap_sampled;
  Real gap_bound;
  std::optional<PerturbParams> params;
};

/// g_k = linearize_near(f_k, Γ_k, L_{n(k)}, r_k) and
/// s_k = min(α_k/(k+1), (r_k − max(ρ̂, certified gap))/2).
inline Player2Reply player2_move(const GameState& state, const LipFun& f, const Real& r) {
  const int k = state.round();
  const auto& gamma = state.nets.level(k);
  Player2Reply reply;
  if (gamma.empty()) {
    reply.g = f;
    reply.alpha = r / 2;
    reply.gap_sampled = Real(0);
    reply.gap_bound = Real(0);
  } else {
    const LinearMap& L = state.operators[schedule(k, state.operators.size())];
    PerturbOptions opts = state.perturb;
    opts.seed = mix_seed(state.perturb.seed, static_cast<std::uint64_t>(k));
    auto res = linearize_near(f, gamma, L, r, state.domain, opts);
    reply.g = res.g;
    reply.alpha = res.alpha;
    reply.gap_sampled = res.gap_sampled;
    reply.gap_bound = res.gap_bound;
    reply.params = res.params;
  }
  const Real kk(k);
  reply.s = std::min(Real(reply.alpha / (kk + 1)), Real((r - std::max(reply.gap_sampled, reply.gap_bound)) / 2));
  if (!(reply.s > 0)) throw Error("no admissible s_k: perturbation used the whole radius");
  if (!(reply.s < reply.alpha / kk)) throw Error("s_k violates s_k < α_k/k");
  return reply;
}

/// Plays one full round from Player I's move.
inline const RoundRecord& play_round(GameState& state, const Move& move) {
  const int k = state.round();
  try {
    const LipFun& center = state.previous_center();
    if (move.offset.size() != center.out_dim()) throw Error("move offset has the wrong dimension");
    const LipFun f = move.offset.is_zero() ? center : LipFun::add_const(center, move.offset);
    const AcceptedMove accepted = validate_move(state, f, move.radius);
    Player2Reply reply = player2_move(state, f, accepted.radius);
    RoundRecord rec;
    rec.k = k;
    rec.op = schedule(k, state.operators.size());
    rec.move = move;
    rec.f = f;
    rec.r = accepted.radius;
    rec.move_gap = accepted.gap;
    rec.g = reply.g;
    rec.s = reply.s;
    rec.alpha = reply.alpha;
    rec.gamma = state.nets.level(k);
    rec.gap_sampled = reply.gap_sampled;
    rec.gap_bound = reply.gap_bound;
    rec.params = reply.params;
    spdlog::debug("round {}: |Γ|={} r={} α={} s={}", k, rec.gamma.size(), to_display(rec.r, 6),
                  to_display(rec.alpha, 6), to_display(rec.s, 6));
    state.history.push_back(std::move(rec));
    return state.history.back();
  } catch (const Error& e) {
    throw Error("round " + std::to_string(k) + ": " + e.what());
  }
}

/// Player I's next move for the scripted adversaries. Round 1 always
/// proposes the initial function with the initial radius.
inline Move adversary(AdversaryKind kind, const GameState& state, std::uint64_t seed,
                      const std::vector<Move>& replay = {}) {
  const int k = state.round();
  const std::size_t l = state.operators.front().rows();
  if (kind == AdversaryKind::replay) {
    if (static_cast<std::size_t>(k) > replay.size()) throw Error("replay exhausted");
    return replay[static_cast<std::size_t>(k - 1)];
  }
  if (state.history.empty()) return {Vec(l), state.initial_radius};
  const Real& s = state.history.back().s;
  if (kind == AdversaryKind::stay) return {Vec(l), s / 2};
  // jitter: a shift of norm ≤ s/4 along a seeded direction.
  UnitRng rng(mix_seed(seed, static_cast<std::uint64_t>(k)));
  Vec dir(l);
  for (std::size_t i = 0; i < l; ++i) dir[i] = Real(rng.uniform(-1, 1));
  const Real n = norm(dir, state.out_norm());
  const Real length = s / 4 * Real(rng.next());
  if (n > 0) dir *= length / n;
  return {dir, s / 4};
}

struct GameTranscript {
  Domain domain;
  std::vector<LinearMap> operators{};
  AdversaryKind adversary = AdversaryKind::stay;
  std::uint64_t seed = 0;
  LipFun initial{};
  Real initial_radius{};
  std::vector<RoundRecord> rounds{};

  const LipFun& final_function() const { return rounds.back().g; }
  /// ρ(g, g_K) ≤ s_K for the limit g of the game.
  const Real& tail_bound() const { return rounds.back().s; }
};

struct GameSetup {
  Domain domain;
  TargetSet target;
  std::vector<LinearMap> operators;
  LipFun initial{};  // defaults to the zero function
  Real initial_radius{0.5};
  int rounds = 8;
  AdversaryKind adversary = AdversaryKind::stay;
  std::vector<Move> replay{};
  std::uint64_t seed = 1;
  PerturbOptions perturb{};
};

inline GameState start_game(const GameSetup& setup) {
  if (setup.rounds < 1) throw Error("rounds must be at least 1");
  if (setup.operators.empty()) throw Error("operator dictionary is empty");
  const std::size_t d = setup.domain.dim();
  const std::size_t l = setup.operators.front().rows();
  check_operators(setup.operators, d, l);
  GameState state{setup.domain,
                  nested_nets(setup.target, setup.domain, setup.rounds),
                  setup.operators,
                  setup.initial ? setup.initial : LipFun::zero(d, l),
                  setup.initial_radius,
                  setup.perturb,
                  {}};
  state.perturb.seed = setup.seed;
  if (state.initial.in_dim() != d || state.initial.out_dim() != l)
    throw Error("initial function does not match the domain and operators");
  return state;
}

inline GameTranscript finish_game(GameState state, const GameSetup& setup) {
  return {std::move(state.domain), std::move(state.operators), setup.adversary, setup.seed,
          std::move(state.initial), std::move(state.initial_radius), std::move(state.history)};
}

inline GameTranscript run_game(const GameSetup& setup) {
  GameState state = start_game(setup);
  for (int k = 1; k <= setup.rounds; ++k) play_round(state, adversary(setup.adversary, state, setup.seed, setup.replay));
  return finish_game(std::move(state), setup);
}

/// Points of U_k = ∪_{x∈Γ_k} B(x, s_k) where round k forces g toward L_{n(k)}.
struct Witness {
  Vec x;
  int k = 0;
  Vec center;
  Real alpha;
  Real s;
  std::size_t op = 0;
};

/// Net centers of every round plus up to per_round−1 seeded points of
/// B(x_k, s_k/2) around each.
inline std::vector<Witness> witnesses(const GameTranscript& t, std::size_t per_round, std::uint64_t seed = 1) {
  if (per_round < 1) throw Error("witnesses: per_round must be at least 1");
  std::vector<Witness> out;
  const NormKind norm = t.domain.norm_kind();
  for (const auto& rec : t.rounds) {
    for (std::size_t i = 0; i < rec.gamma.size(); ++i) {
      const Vec& c = rec.gamma[i];
      out.push_back({c, rec.k, c, rec.alpha, rec.s, rec.op});
      if (per_round == 1) continue;
      const std::size_t budget = std::max(per_round - 1, 2 * c.size() + 1);
      const auto offsets = ball_offsets(c.size(), Real(rec.s / 2), norm, budget,
                                        mix_seed(seed, static_cast<std::uint64_t>(rec.k) * 1000003u + i));
      for (std::size_t j = 0; j + 1 < per_round; ++j) out.push_back({c + offsets[j], rec.k, c, rec.alpha, rec.s, rec.op});
    }
  }
  return out;
}

}  // namespace lipforge
