#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lipforge/probe.hpp"

namespace lipforge {

/// Probe settings shared by the construct and probe commands.
struct ProbeSpec {
  std::size_t per_round = 1;  // witnesses per net center (1 = centers only)
  std::size_t budget = 64;    // samples per dq_error call
  Real ladder_ratio{0.5};
  std::size_t ladder_steps = 20;
  bool inject_alpha = true;  // add the transcript's α_k to every ladder
  Vec dini_direction;        // empty: first basis vector
  int dini_min_round = 4;
};

struct RunConfig {
  explicit RunConfig(Domain d) : domain(std::move(d)) {}

  Domain domain;
  TargetSet target;
  std::vector<std::string> operator_ids;
  std::vector<LinearMap> operators;
  int rounds = 8;
  AdversaryKind adversary = AdversaryKind::stay;
  std::string replay_path;
  Real initial_radius{0.5};
  std::uint64_t seed = 1;
  PerturbOptions perturb;
  ProbeSpec probe;
  std::string out_dir = "out";

  GameSetup setup() const {
    GameSetup s{domain, target, operators};
    s.initial_radius = initial_radius;
    s.rounds = rounds;
    s.adversary = adversary;
    s.seed = seed;
    s.perturb = perturb;
    return s;
  }
};

namespace detail {

/// "section.key" → 1-based line, for diagnostics only; parsing is left to
/// property_tree.
inline std::map<std::string, int> ini_key_lines(std::string_view text) {
  std::map<std::string, int> out;
  std::istringstream in{std::string(text)};
  std::string line, section;
  for (int n = 1; std::getline(in, line); ++n) {
    boost::trim(line);
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = boost::trim_copy(line.substr(1, line.size() - 2));
      out.emplace(section, n);
    } else if (const auto eq = line.find('='); eq != std::string::npos) {
      out.emplace(section + "." + boost::trim_copy(line.substr(0, eq)), n);
    }
  }
  return out;
}

class ConfigReader {
 public:
  ConfigReader(std::string_view text, std::string source) : source_(std::move(source)), lines_(ini_key_lines(text)) {
    std::istringstream in{std::string(text)};
    try {
      boost::property_tree::ini_parser::read_ini(in, tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw Error(source_ + ":" + std::to_string(e.line()) + ": " + e.message());
    }
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& msg) const {
    const auto it = lines_.find(key.empty() ? section : section + "." + key);
    std::string where = source_;
    if (it != lines_.end()) where += ":" + std::to_string(it->second);
    where += ": [" + section + "]";
    if (!key.empty()) where += " " + key;
    throw Error(where + ": " + msg);
  }

  const boost::property_tree::ptree* section(const std::string& name) const {
    const auto it = tree_.find(name);
    return it == tree_.not_found() ? nullptr : &it->second;
  }

  void only_sections(const std::set<std::string>& allowed) const {
    for (const auto& [name, sub] : tree_) {
      if (sub.empty() && !sub.data().empty()) fail(name, "", "key outside any section");
      if (!allowed.count(name)) fail(name, "", "unknown section");
    }
  }

  void only_keys(const std::string& sec, const std::set<std::string>& allowed) const {
    if (const auto* s = section(sec))
      for (const auto& [key, v] : *s)
        if (!allowed.count(key)) fail(sec, key, "unknown field");
  }

  std::optional<std::string> get(const std::string& sec, const std::string& key) const {
    const auto* s = section(sec);
    if (!s) return std::nullopt;
    const auto it = s->find(key);
    if (it == s->not_found()) return std::nullopt;
    return boost::trim_copy(it->second.data());
  }

  std::string require(const std::string& sec, const std::string& key) const {
    auto v = get(sec, key);
    if (!v) fail(sec, key, "missing field");
    return *v;
  }

  /// Wraps a conversion so its error carries the field's line.
  template <class F>
  auto convert(const std::string& sec, const std::string& key, const std::string& text, F&& f) const {
    try {
      return f(text);
    } catch (const Error& e) {
      fail(sec, key, e.what());
    } catch (const std::exception&) {
      fail(sec, key, "invalid value '" + text + "'");
    }
  }

 private:
  std::string source_;
  std::map<std::string, int> lines_;
  boost::property_tree::ptree tree_;
};

inline Real parse_decimal(const std::string& s) { return to_real(parse_rational(s)); }

inline std::vector<Real> parse_numbers(const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(" \t,"), boost::token_compress_on);
  std::vector<Real> out;
  for (const auto& p : parts)
    if (!p.empty()) out.push_back(parse_decimal(p));
  if (out.empty()) throw Error("expected at least one number");
  return out;
}

inline std::vector<Rational> parse_rationals(const std::string& s) {
  std::vector<std::string> parts;
  boost::split(parts, s, boost::is_any_of(" \t,"), boost::token_compress_on);
  std::vector<Rational> out;
  for (const auto& p : parts)
    if (!p.empty()) out.push_back(parse_rational(p));
  if (out.empty()) throw Error("expected at least one number");
  return out;
}

/// Rows separated by ';', entries by spaces or commas.
inline std::vector<std::vector<Real>> parse_matrix(const std::string& s) {
  std::vector<std::string> rows;
  boost::split(rows, s, boost::is_any_of(";"));
  std::vector<std::vector<Real>> out;
  for (const auto& r : rows)
    if (!boost::trim_copy(r).empty()) out.push_back(parse_numbers(r));
  if (out.empty()) throw Error("empty matrix");
  for (const auto& r : out)
    if (r.size() != out.front().size()) throw Error("matrix rows differ in length");
  return out;
}

inline std::uint64_t parse_count(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) throw Error("expected a non-negative integer");
  return std::stoull(s);
}

inline bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw Error("expected true or false");
}

/// One point per non-empty line, coordinates separated by spaces or commas;
/// lines starting with a letter are headers.
inline std::vector<Vec> read_point_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read point file '" + path.string() + "'");
  std::vector<Vec> out;
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    boost::trim(line);
    if (line.empty() || std::isalpha(static_cast<unsigned char>(line[0])) || line[0] == '#') continue;
    try {
      out.emplace_back(parse_numbers(line));
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace detail

/// Parses the sectioned key-value configuration. Every failure names the line
/// and field it comes from.
inline RunConfig parse_config(std::string_view text, const std::string& source = "<config>",
                              const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  ConfigReader cfg(text, source);
  cfg.only_sections({"domain", "target", "operators", "game", "probe", "run"});
  cfg.only_keys("domain", {"shape", "norm", "lo", "hi", "center", "radius"});
  cfg.only_keys("target", {"grid_step", "lo", "hi", "points"});
  cfg.only_keys("game", {"rounds", "adversary", "initial_radius", "replay", "gap_budget", "sphere_samples"});
  cfg.only_keys("probe", {"per_round", "budget", "ladder_ratio", "ladder_steps", "inject_alpha", "dini_direction",
                          "dini_min_round"});
  cfg.only_keys("run", {"seed", "out"});

  // [domain]
  const std::string norm_text = cfg.get("domain", "norm").value_or("euclidean");
  const NormKind norm = cfg.convert("domain", "norm", norm_text, [](const std::string& s) { return parse_norm_kind(s); });
  const std::string shape = cfg.get("domain", "shape").value_or("box");
  if (shape != "box" && shape != "ball") cfg.fail("domain", "shape", "expected box or ball, got '" + shape + "'");
  RunConfig rc([&] {
    if (shape == "box") {
      const auto lo = cfg.convert("domain", "lo", cfg.require("domain", "lo"), parse_numbers);
      const auto hi = cfg.convert("domain", "hi", cfg.require("domain", "hi"), parse_numbers);
      return cfg.convert("domain", "hi", "", [&](const std::string&) { return Domain::box(Vec(lo), Vec(hi), norm); });
    }
    const auto c = cfg.convert("domain", "center", cfg.require("domain", "center"), parse_numbers);
    const auto r = cfg.convert("domain", "radius", cfg.require("domain", "radius"), parse_decimal);
    return cfg.convert("domain", "radius", "", [&](const std::string&) { return Domain::ball(Vec(c), r, norm); });
  }());
  const std::size_t d = rc.domain.dim();

  // [target]
  if (const auto pts = cfg.get("target", "points")) {
    if (cfg.get("target", "grid_step")) cfg.fail("target", "points", "give either points or grid_step, not both");
    const auto path = base_dir / *pts;
    rc.target.points = cfg.convert("target", "points", *pts, [&](const std::string&) { return read_point_file(path); });
    for (const auto& p : rc.target.points)
      if (p.size() != d) cfg.fail("target", "points", "point dimension does not match the domain");
  } else {
    const auto step = cfg.convert("target", "grid_step", cfg.require("target", "grid_step"), parse_rational);
    if (step <= 0) cfg.fail("target", "grid_step", "must be positive");
    std::vector<Rational> lo, hi;
    if (const auto s = cfg.get("target", "lo")) lo = cfg.convert("target", "lo", *s, parse_rationals);
    if (const auto s = cfg.get("target", "hi")) hi = cfg.convert("target", "hi", *s, parse_rationals);
    if (lo.empty() || hi.empty()) {
      if (!rc.domain.is_box()) cfg.fail("target", "grid_step", "ball domains need explicit lo and hi");
      const auto src = parse_rationals(cfg.require("domain", "lo"));
      const auto srch = parse_rationals(cfg.require("domain", "hi"));
      if (lo.empty()) lo = src;
      if (hi.empty()) hi = srch;
    }
    if (lo.size() != d || hi.size() != d) cfg.fail("target", "lo", "grid corners must match the domain dimension");
    rc.target = TargetSet::open_grid(lo, hi, step);
  }

  // [operators]: every key except codomain_norm is an operator id.
  const auto* ops = cfg.section("operators");
  if (!ops) cfg.fail("operators", "", "missing section");
  NormKind out_norm = NormKind::euclidean;
  if (const auto s = cfg.get("operators", "codomain_norm"))
    out_norm = cfg.convert("operators", "codomain_norm", *s, [](const std::string& t) { return parse_norm_kind(t); });
  for (const auto& [key, v] : *ops) {
    if (key == "codomain_norm") continue;
    const auto rows = cfg.convert("operators", key, v.data(), parse_matrix);
    std::vector<Real> entries;
    for (const auto& r : rows) entries.insert(entries.end(), r.begin(), r.end());
    LinearMap L = cfg.convert("operators", key, "", [&](const std::string&) {
      return LinearMap(rows.size(), rows.front().size(), entries, norm, out_norm);
    });
    if (L.cols() != d) cfg.fail("operators", key, "operator has " + std::to_string(L.cols()) + " columns, domain has dimension " + std::to_string(d));
    if (!rc.operators.empty() && L.rows() != rc.operators.front().rows()) cfg.fail("operators", key, "operators disagree on the codomain dimension");
    if (!(L.op_norm() < 1)) cfg.fail("operators", key, "operator norm must be < 1 (got " + to_display(L.op_norm(), 6) + ")");
    rc.operator_ids.push_back(key);
    rc.operators.push_back(std::move(L));
  }
  if (rc.operators.empty()) cfg.fail("operators", "", "operator dictionary is empty");

  // [game]
  if (const auto s = cfg.get("game", "rounds")) {
    rc.rounds = static_cast<int>(cfg.convert("game", "rounds", *s, parse_count));
    if (rc.rounds < 1) cfg.fail("game", "rounds", "must be at least 1");
  }
  if (const auto s = cfg.get("game", "adversary"))
    rc.adversary = cfg.convert("game", "adversary", *s, [](const std::string& t) { return parse_adversary_kind(t); });
  if (const auto s = cfg.get("game", "replay")) rc.replay_path = (base_dir / *s).string();
  if (rc.adversary == AdversaryKind::replay && rc.replay_path.empty()) cfg.fail("game", "adversary", "replay needs a replay transcript");
  if (const auto s = cfg.get("game", "initial_radius")) {
    rc.initial_radius = cfg.convert("game", "initial_radius", *s, parse_decimal);
    if (!(rc.initial_radius > 0)) cfg.fail("game", "initial_radius", "must be positive");
  }
  if (const auto s = cfg.get("game", "gap_budget")) rc.perturb.gap_budget = cfg.convert("game", "gap_budget", *s, parse_count);
  if (const auto s = cfg.get("game", "sphere_samples"))
    rc.perturb.patch.sphere_samples = cfg.convert("game", "sphere_samples", *s, parse_count);

  // [probe]
  ProbeSpec& p = rc.probe;
  if (const auto s = cfg.get("probe", "per_round")) {
    p.per_round = cfg.convert("probe", "per_round", *s, parse_count);
    if (p.per_round < 1) cfg.fail("probe", "per_round", "must be at least 1");
  }
  if (const auto s = cfg.get("probe", "budget")) {
    p.budget = cfg.convert("probe", "budget", *s, parse_count);
    if (p.budget < 2 * d + 1) cfg.fail("probe", "budget", "must be at least 2d+1");
  }
  if (const auto s = cfg.get("probe", "ladder_ratio")) {
    p.ladder_ratio = cfg.convert("probe", "ladder_ratio", *s, parse_decimal);
    if (!(p.ladder_ratio > 0 && p.ladder_ratio < 1)) cfg.fail("probe", "ladder_ratio", "must lie in (0,1)");
  }
  if (const auto s = cfg.get("probe", "ladder_steps")) {
    p.ladder_steps = cfg.convert("probe", "ladder_steps", *s, parse_count);
    if (p.ladder_steps < 1) cfg.fail("probe", "ladder_steps", "must be at least 1");
  }
  if (const auto s = cfg.get("probe", "inject_alpha")) p.inject_alpha = cfg.convert("probe", "inject_alpha", *s, parse_bool);
  if (const auto s = cfg.get("probe", "dini_direction")) {
    p.dini_direction = Vec(cfg.convert("probe", "dini_direction", *s, parse_numbers));
    if (p.dini_direction.size() != d) cfg.fail("probe", "dini_direction", "dimension does not match the domain");
  }
  if (const auto s = cfg.get("probe", "dini_min_round"))
    p.dini_min_round = static_cast<int>(cfg.convert("probe", "dini_min_round", *s, parse_count));

  // [run]
  if (const auto s = cfg.get("run", "seed")) rc.seed = cfg.convert("run", "seed", *s, parse_count);
  if (const auto s = cfg.get("run", "out")) rc.out_dir = *s;
  return rc;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), path.parent_path());
}

}  // namespace lipforge
