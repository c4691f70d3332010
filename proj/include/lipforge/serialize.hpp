#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "lipforge/lipfun.hpp"

namespace lipforge {

using json = nlohmann::json;

inline constexpr std::string_view kFunctionSchema = "lipforge-fun/1";

// Numerals are decimal strings that read back bit-exactly: the plain form is
// at the document precision, "<decimal>@<bits>" carries its own.

inline json numeral_to_json(const Real& x, long doc_bits) {
  std::string s = to_decimal(x);
  const long bits = precision_of(x);
  if (bits != doc_bits) s += "@" + std::to_string(bits);
  return s;
}

inline Real numeral_from_json(const json& j, long doc_bits) {
  if (j.is_number()) return parse_real(j.dump(), doc_bits);
  if (!j.is_string()) throw Error("malformed artifact: numeral must be a string");
  const auto s = j.get<std::string>();
  long bits = doc_bits;
  std::string body = s;
  if (const auto at = s.find('@'); at != std::string::npos) {
    try {
      bits = std::stol(s.substr(at + 1));
    } catch (const std::logic_error&) {
      throw Error("malformed artifact: bad numeral precision in '" + s + "'");
    }
    if (bits < 2) throw Error("malformed artifact: bad numeral precision in '" + s + "'");
    body = s.substr(0, at);
  }
  try {
    Real r = parse_real(body, bits);
    if (!is_finite(r)) throw Error("non-finite");
    return r;
  } catch (const Error&) {
    throw Error("malformed artifact: bad numeral '" + s + "'");
  }
}

inline json vec_to_json(const Vec& v, long doc_bits) {
  json a = json::array();
  for (const auto& x : v) a.push_back(numeral_to_json(x, doc_bits));
  return a;
}

inline Vec vec_from_json(const json& j, long doc_bits) {
  if (!j.is_array()) throw Error("malformed artifact: expected a numeral list");
  std::vector<Real> c;
  for (const auto& x : j) c.push_back(numeral_from_json(x, doc_bits));
  return Vec(std::move(c));
}

inline json map_to_json(const LinearMap& m, long doc_bits) {
  json e = json::array();
  for (const auto& x : m.entries()) e.push_back(numeral_to_json(x, doc_bits));
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"entries", e},
          {"in_norm", to_string(m.in_norm())},
          {"out_norm", to_string(m.out_norm())}};
}

inline LinearMap map_from_json(const json& j, long doc_bits) {
  try {
    std::vector<Real> entries;
    for (const auto& x : j.at("entries")) entries.push_back(numeral_from_json(x, doc_bits));
    return LinearMap(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(), std::move(entries),
                     parse_norm_kind(j.at("in_norm").get<std::string>()),
                     parse_norm_kind(j.at("out_norm").get<std::string>()));
  } catch (const json::exception& e) {
    throw Error(std::string("malformed artifact: ") + e.what());
  }
}

inline json domain_to_json(const Domain& d, long doc_bits) {
  if (d.is_box())
    return {{"shape", "box"},
            {"lo", vec_to_json(d.as_box().lo, doc_bits)},
            {"hi", vec_to_json(d.as_box().hi, doc_bits)},
            {"norm", to_string(d.norm_kind())}};
  return {{"shape", "ball"},
          {"center", vec_to_json(d.as_ball().center, doc_bits)},
          {"radius", numeral_to_json(d.as_ball().radius, doc_bits)},
          {"norm", to_string(d.norm_kind())}};
}

inline Domain domain_from_json(const json& j, long doc_bits) {
  try {
    const auto shape = j.at("shape").get<std::string>();
    const NormKind n = parse_norm_kind(j.at("norm").get<std::string>());
    if (shape == "box") return Domain::box(vec_from_json(j.at("lo"), doc_bits), vec_from_json(j.at("hi"), doc_bits), n);
    if (shape == "ball")
      return Domain::ball(vec_from_json(j.at("center"), doc_bits), numeral_from_json(j.at("radius"), doc_bits), n);
    throw Error("malformed artifact: unknown domain shape '" + shape + "'");
  } catch (const json::exception& e) {
    throw Error(std::string("malformed artifact: ") + e.what());
  }
}

/// Flattens one or more functions into a shared node table. Children always
/// precede parents, so readers never recurse.
class FunctionWriter {
 public:
  explicit FunctionWriter(long doc_bits = working_bits()) : bits_(doc_bits) {}

  std::size_t add(const LipFun& f) {
    // Iterative post-order: a node is emitted once all its children are.
    std::vector<std::pair<const Node*, bool>> stack{{&f.node(), false}};
    while (!stack.empty()) {
      auto [n, expanded] = stack.back();
      stack.pop_back();
      if (ids_.count(n)) continue;
      if (expanded) {
        emit(*n);
        continue;
      }
      stack.push_back({n, true});
      for (const Node* c : children(*n))
        if (!ids_.count(c)) stack.push_back({c, false});
    }
    return ids_.at(&f.node());
  }

  long precision() const { return bits_; }
  const json& nodes() const { return nodes_; }

 private:
  static std::vector<const Node*> children(const Node& n) {
    std::vector<const Node*> out;
    std::visit([&](const auto& p) {
      using T = std::decay_t<decltype(p)>;
      if constexpr (std::is_same_v<T, node::Sum>) out = {&p.lhs.node(), &p.rhs.node()};
      else if constexpr (std::is_same_v<T, node::Scale> || std::is_same_v<T, node::AddConst>) out = {&p.f.node()};
      else if constexpr (std::is_same_v<T, node::RadialBlend>) out = {&p.f1.node(), &p.f2.node()};
      else if constexpr (std::is_same_v<T, node::Precompose>) out = {&p.f.node(), &p.inner.node()};
      else if constexpr (std::is_same_v<T, node::Patched>) {
        out.push_back(&p.outer.node());
        for (const auto& g : p.inners) out.push_back(&g.node());
      }
    }, n.payload);
    // Reverse so the stack pops children in declaration order.
    std::reverse(out.begin(), out.end());
    return out;
  }

  std::size_t id(const LipFun& f) const { return ids_.at(&f.node()); }

  void emit(const Node& n) {
    json j;
    std::visit([&](const auto& p) {
      using T = std::decay_t<decltype(p)>;
      if constexpr (std::is_same_v<T, node::Const>) {
        j = {{"kind", "const"}, {"in_dim", n.in_dim}, {"value", vec_to_json(p.value, bits_)}};
      } else if constexpr (std::is_same_v<T, node::Linear>) {
        j = {{"kind", "linear"}, {"map", map_to_json(p.map, bits_)}};
      } else if constexpr (std::is_same_v<T, node::Affine>) {
        j = {{"kind", "affine"},
             {"base", vec_to_json(p.base, bits_)},
             {"map", map_to_json(p.map, bits_)},
             {"anchor", vec_to_json(p.anchor, bits_)}};
      } else if constexpr (std::is_same_v<T, node::NormOf>) {
        j = {{"kind", "norm_of"}, {"in_dim", n.in_dim}, {"norm", to_string(p.norm)}, {"sign", p.sign}};
      } else if constexpr (std::is_same_v<T, node::Sum>) {
        j = {{"kind", "sum"}, {"lhs", id(p.lhs)}, {"rhs", id(p.rhs)}};
      } else if constexpr (std::is_same_v<T, node::Scale>) {
        j = {{"kind", "scale"}, {"factor", numeral_to_json(p.factor, bits_)}, {"f", id(p.f)}};
      } else if constexpr (std::is_same_v<T, node::AddConst>) {
        j = {{"kind", "add_const"}, {"f", id(p.f)}, {"offset", vec_to_json(p.offset, bits_)}};
      } else if constexpr (std::is_same_v<T, node::RadialBlend>) {
        j = {{"kind", "radial_blend"},
             {"a", numeral_to_json(p.a, bits_)},
             {"b", numeral_to_json(p.b, bits_)},
             {"f1", id(p.f1)},
             {"f2", id(p.f2)},
             {"norm", to_string(p.norm)}};
      } else if constexpr (std::is_same_v<T, node::Patched>) {
        json patches = json::array();
        for (std::size_t i = 0; i < p.centers.size(); ++i)
          patches.push_back({{"center", vec_to_json(p.centers[i], bits_)},
                             {"radius", numeral_to_json(p.radii[i], bits_)},
                             {"inner", id(p.inners[i])}});
        j = {{"kind", "patched"}, {"outer", id(p.outer)}, {"norm", to_string(p.norm)}, {"patches", patches}};
      } else if constexpr (std::is_same_v<T, node::Precompose>) {
        j = {{"kind", "precompose"}, {"f", id(p.f)}, {"inner", id(p.inner)}};
      }
    }, n.payload);
    ids_.emplace(&n, nodes_.size());
    nodes_.push_back(std::move(j));
  }

  long bits_;
  json nodes_ = json::array();
  std::unordered_map<const Node*, std::size_t> ids_;
};

/// Rebuilds the node table written by FunctionWriter.
class FunctionReader {
 public:
  FunctionReader(const json& nodes, long doc_bits) : bits_(doc_bits) {
    if (!nodes.is_array()) throw Error("malformed artifact: 'nodes' must be a list");
    built_.reserve(nodes.size());
    try {
      for (const auto& j : nodes) built_.push_back(build(j));
    } catch (const json::exception& e) {
      throw Error(std::string("malformed artifact: ") + e.what());
    }
  }

  const LipFun& at(std::size_t id) const {
    if (id >= built_.size()) throw Error("malformed artifact: node reference out of range");
    return built_[id];
  }
  const LipFun& at(const json& ref) const {
    if (!ref.is_number_unsigned()) throw Error("malformed artifact: node reference must be an index");
    return at(ref.get<std::size_t>());
  }

 private:
  LipFun build(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "const") return LipFun::constant(vec_from_json(j.at("value"), bits_), j.at("in_dim").get<std::size_t>());
    if (kind == "linear") return LipFun::linear(map_from_json(j.at("map"), bits_));
    if (kind == "affine")
      return LipFun::affine(vec_from_json(j.at("base"), bits_), map_from_json(j.at("map"), bits_),
                            vec_from_json(j.at("anchor"), bits_));
    if (kind == "norm_of")
      return LipFun::norm_of(j.at("in_dim").get<std::size_t>(), parse_norm_kind(j.at("norm").get<std::string>()),
                             j.at("sign").get<int>());
    if (kind == "sum") return LipFun::sum(at(j.at("lhs")), at(j.at("rhs")));
    if (kind == "scale") return LipFun::scale(numeral_from_json(j.at("factor"), bits_), at(j.at("f")));
    if (kind == "add_const") return LipFun::add_const(at(j.at("f")), vec_from_json(j.at("offset"), bits_));
    if (kind == "radial_blend")
      return make_radial_blend(numeral_from_json(j.at("a"), bits_), numeral_from_json(j.at("b"), bits_),
                               at(j.at("f1")), at(j.at("f2")), parse_norm_kind(j.at("norm").get<std::string>()));
    if (kind == "patched") {
      std::vector<PatchSpec> specs;
      for (const auto& pj : j.at("patches"))
        specs.push_back({vec_from_json(pj.at("center"), bits_), numeral_from_json(pj.at("radius"), bits_),
                         at(pj.at("inner"))});
      return make_patched(at(j.at("outer")), std::move(specs), parse_norm_kind(j.at("norm").get<std::string>()));
    }
    if (kind == "precompose") return LipFun::precompose(at(j.at("f")), at(j.at("inner")));
    throw Error("malformed artifact: unknown node kind '" + kind + "'");
  }

  long bits_;
  std::vector<LipFun> built_;
};

struct FunctionArtifact {
  LipFun f;
  std::optional<Domain> domain;
  long precision = 0;
};

inline json function_to_json(const LipFun& f, const std::optional<Domain>& domain = std::nullopt,
                             long doc_bits = working_bits()) {
  FunctionWriter w(doc_bits);
  const std::size_t root = w.add(f);
  json doc = {{"schema", kFunctionSchema},
              {"precision", doc_bits},
              {"in_dim", f.in_dim()},
              {"out_dim", f.out_dim()},
              {"nodes", w.nodes()},
              {"root", root}};
  if (domain) doc["domain"] = domain_to_json(*domain, doc_bits);
  return doc;
}

inline FunctionArtifact function_from_json(const json& doc) {
  if (!doc.is_object()) throw Error("malformed artifact");
  if (!doc.contains("schema") || !doc["schema"].is_string()) throw Error("malformed artifact: missing schema");
  if (doc["schema"].get<std::string>() != kFunctionSchema)
    throw Error("unknown schema version '" + doc["schema"].get<std::string>() + "'");
  try {
    const long bits = doc.at("precision").get<long>();
    if (bits < 2) throw Error("malformed artifact: bad precision");
    FunctionReader reader(doc.at("nodes"), bits);
    FunctionArtifact out{reader.at(doc.at("root")), std::nullopt, bits};
    if (doc.contains("domain")) out.domain = domain_from_json(doc["domain"], bits);
    if (out.f.in_dim() != doc.at("in_dim").get<std::size_t>() || out.f.out_dim() != doc.at("out_dim").get<std::size_t>())
      throw Error("malformed artifact: dimension header mismatch");
    return out;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed artifact: ") + e.what());
  }
}

inline std::string serialize(const LipFun& f, const std::optional<Domain>& domain = std::nullopt) {
  return function_to_json(f, domain).dump() + "\n";
}

inline FunctionArtifact deserialize(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error&) {
    throw Error("malformed artifact");
  }
  return function_from_json(doc);
}

}  // namespace lipforge
