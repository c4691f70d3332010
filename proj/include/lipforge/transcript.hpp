#pragma once

#include <string>
#include <vector>

#include "lipforge/game.hpp"
#include "lipforge/serialize.hpp"

namespace lipforge {

inline constexpr std::string_view kGameSchema = "lipforge-game/1";

// A transcript shares one node table between the initial function and every
// f_k, g_k, so common subgraphs are written once.

namespace detail {

inline json params_to_json(const PerturbParams& p, long bits) {
  return {{"r", numeral_to_json(p.r, bits)},         {"s", numeral_to_json(p.s, bits)},
          {"beta", numeral_to_json(p.beta, bits)},   {"alpha", numeral_to_json(p.alpha, bits)},
          {"blow_up", numeral_to_json(p.blow_up, bits)}, {"diam", numeral_to_json(p.diam, bits)}};
}

inline PerturbParams params_from_json(const json& j, long bits) {
  return {numeral_from_json(j.at("r"), bits),     numeral_from_json(j.at("s"), bits),
          numeral_from_json(j.at("beta"), bits),  numeral_from_json(j.at("alpha"), bits),
          numeral_from_json(j.at("blow_up"), bits), numeral_from_json(j.at("diam"), bits)};
}

inline json perturb_to_json(const PerturbOptions& o) {
  return {{"gap_budget", o.gap_budget},
          {"seed", o.seed},
          {"sphere_samples", o.patch.sphere_samples},
          {"seam_tolerance", o.patch.tolerance},
          {"seam_seed", o.patch.seed}};
}

inline PerturbOptions perturb_from_json(const json& j) {
  PerturbOptions o;
  o.gap_budget = j.at("gap_budget").get<std::size_t>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.patch.sphere_samples = j.at("sphere_samples").get<std::size_t>();
  o.patch.tolerance = j.at("seam_tolerance").get<double>();
  o.patch.seed = j.at("seam_seed").get<std::uint64_t>();
  return o;
}

}  // namespace detail

inline json transcript_to_json(const GameTranscript& t, const PerturbOptions& perturb) {
  const long bits = working_bits();
  FunctionWriter w(bits);
  json ops = json::array();
  for (const auto& L : t.operators) ops.push_back(map_to_json(L, bits));
  const std::size_t initial = w.add(t.initial);
  json rounds = json::array();
  for (const auto& rec : t.rounds) {
    json gamma = json::array();
    for (const auto& x : rec.gamma) gamma.push_back(vec_to_json(x, bits));
    json jr = {{"k", rec.k},
               {"op", rec.op},
               {"move", {{"offset", vec_to_json(rec.move.offset, bits)}, {"radius", numeral_to_json(rec.move.radius, bits)}}},
               {"f", w.add(rec.f)},
               {"r", numeral_to_json(rec.r, bits)},
               {"move_gap", numeral_to_json(rec.move_gap, bits)},
               {"g", w.add(rec.g)},
               {"s", numeral_to_json(rec.s, bits)},
               {"alpha", numeral_to_json(rec.alpha, bits)},
               {"gamma", std::move(gamma)},
               {"gap_sampled", numeral_to_json(rec.gap_sampled, bits)},
               {"gap_bound", numeral_to_json(rec.gap_bound, bits)}};
    if (rec.params) jr["params"] = detail::params_to_json(*rec.params, bits);
    rounds.push_back(std::move(jr));
  }
  json doc = {{"schema", kGameSchema},
              {"precision", bits},
              {"domain", domain_to_json(t.domain, bits)},
              {"operators", std::move(ops)},
              {"adversary", std::string(to_string(t.adversary))},
              {"seed", t.seed},
              {"perturb", detail::perturb_to_json(perturb)},
              {"initial", initial},
              {"initial_radius", numeral_to_json(t.initial_radius, bits)},
              {"rounds", std::move(rounds)}};
  if (!t.rounds.empty()) {
    doc["final"] = w.add(t.final_function());
    doc["tail_bound"] = numeral_to_json(t.tail_bound(), bits);
  }
  doc["nodes"] = w.nodes();
  return doc;
}

struct LoadedTranscript {
  GameTranscript transcript;
  PerturbOptions perturb;
};

inline LoadedTranscript transcript_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("schema") || !doc["schema"].is_string())
    throw Error("malformed transcript: missing schema");
  if (doc["schema"].get<std::string>() != kGameSchema)
    throw Error("unknown schema version '" + doc["schema"].get<std::string>() + "'");
  try {
    const long bits = doc.at("precision").get<long>();
    if (bits < 2) throw Error("malformed transcript: bad precision");
    FunctionReader nodes(doc.at("nodes"), bits);
    LoadedTranscript out{GameTranscript{domain_from_json(doc.at("domain"), bits)}, {}};
    GameTranscript& t = out.transcript;
    for (const auto& j : doc.at("operators")) t.operators.push_back(map_from_json(j, bits));
    t.adversary = parse_adversary_kind(doc.at("adversary").get<std::string>());
    t.seed = doc.at("seed").get<std::uint64_t>();
    t.initial = nodes.at(doc.at("initial"));
    t.initial_radius = numeral_from_json(doc.at("initial_radius"), bits);
    out.perturb = detail::perturb_from_json(doc.at("perturb"));
    for (const auto& jr : doc.at("rounds")) {
      RoundRecord rec;
      rec.k = jr.at("k").get<int>();
      rec.op = jr.at("op").get<std::size_t>();
      if (rec.op >= t.operators.size()) throw Error("malformed transcript: operator index out of range");
      rec.move = {vec_from_json(jr.at("move").at("offset"), bits), numeral_from_json(jr.at("move").at("radius"), bits)};
      rec.f = nodes.at(jr.at("f"));
      rec.r = numeral_from_json(jr.at("r"), bits);
      rec.move_gap = numeral_from_json(jr.at("move_gap"), bits);
      rec.g = nodes.at(jr.at("g"));
      rec.s = numeral_from_json(jr.at("s"), bits);
      rec.alpha = numeral_from_json(jr.at("alpha"), bits);
      for (const auto& x : jr.at("gamma")) rec.gamma.push_back(vec_from_json(x, bits));
      rec.gap_sampled = numeral_from_json(jr.at("gap_sampled"), bits);
      rec.gap_bound = numeral_from_json(jr.at("gap_bound"), bits);
      if (jr.contains("params")) rec.params = detail::params_from_json(jr["params"], bits);
      if (rec.k != static_cast<int>(t.rounds.size()) + 1) throw Error("malformed transcript: rounds out of order");
      t.rounds.push_back(std::move(rec));
    }
    if (t.operators.empty()) throw Error("malformed transcript: no operators");
    return out;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed transcript: ") + e.what());
  }
}

inline std::string write_transcript(const GameTranscript& t, const PerturbOptions& perturb) {
  return transcript_to_json(t, perturb).dump() + "\n";
}

inline LoadedTranscript read_transcript(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error&) {
    throw Error("malformed transcript");
  }
  return transcript_from_json(doc);
}

/// Replays the recorded moves through validate_move and player2_move against
/// the recorded nets. The result serializes identically to the input when
/// the transcript is genuine.
inline GameTranscript replay(const LoadedTranscript& in) {
  const GameTranscript& t = in.transcript;
  NetFamily nets;
  nets.norm = t.domain.norm_kind();
  std::vector<Move> moves;
  for (const auto& rec : t.rounds) {
    nets.levels.push_back(rec.gamma);
    nets.deltas.push_back(pow2(-rec.k));
    Real margin = infinity();
    for (const auto& p : rec.gamma) margin = std::min(margin, t.domain.dist_to_boundary(p));
    nets.margins.push_back(margin);
    moves.push_back(rec.move);
  }
  check_operators(t.operators, t.domain.dim(), t.operators.front().rows());
  GameState state{t.domain, std::move(nets), t.operators, t.initial, t.initial_radius, in.perturb, {}};
  for (std::size_t k = 1; k <= moves.size(); ++k)
    play_round(state, adversary(AdversaryKind::replay, state, t.seed, moves));
  return {t.domain, t.operators, t.adversary, t.seed, t.initial, t.initial_radius, std::move(state.history)};
}

}  // namespace lipforge
