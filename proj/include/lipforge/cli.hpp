#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "lipforge/config.hpp"
#include "lipforge/transcript.hpp"
#include "lipforge/verify.hpp"

namespace lipforge::cli {

namespace fs = std::filesystem;

/// Exit codes: contracts held, a contract failed, bad input.
inline constexpr int kOk = 0;
inline constexpr int kFailed = 1;
inline constexpr int kBadInput = 2;

struct CommonOptions {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 1;
  bool plot = false;
};

/// LIPFORGE_LOG ∈ {quiet, info, debug}; unset means info.
inline void configure_logging() {
  const char* v = std::getenv("LIPFORGE_LOG");
  const std::string level = v ? v : "info";
  if (level == "quiet")
    spdlog::set_level(spdlog::level::off);
  else if (level == "debug")
    spdlog::set_level(spdlog::level::debug);
  else if (level == "info")
    spdlog::set_level(spdlog::level::info);
  else
    throw Error("LIPFORGE_LOG must be quiet, info or debug (got '" + level + "')");
}

inline std::string read_file(const fs::path& p, const std::string& what = "artifact") {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(what + " not found: " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

/// "lipforge-fun/1" or "lipforge-game/1", or an error naming the mismatch.
inline std::string schema_of(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error&) {
    throw Error("malformed artifact");
  }
  if (!doc.is_object() || !doc.contains("schema") || !doc["schema"].is_string())
    throw Error("malformed artifact: missing schema");
  return doc["schema"].get<std::string>();
}

// ---------------------------------------------------------------- plotting

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (log10 scale, log10 value)
};

inline double log10_of(const Real& x) {
  if (!(x > 0)) return -40.0;
  return std::max(-40.0, static_cast<double>(log10(x)));
}

/// Log-log line chart of dq value against scale.
inline std::string svg_plot(const std::vector<Series>& series, const std::string& title) {
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x), x1 = std::max(x1, x);
      y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-9) x1 = x0 + 1;
  if (y1 - y0 < 1e-9) y1 = y0 + 1;
  const double w = 720, h = 480, m = 60;
  auto px = [&](double x) { return m + (x - x0) / (x1 - x0) * (w - 2 * m); };
  auto py = [&](double y) { return h - m - (y - y0) / (y1 - y0) * (h - 2 * m); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">" << title << "</text>\n"
     << "<line x1=\"" << m << "\" y1=\"" << h - m << "\" x2=\"" << w - m << "\" y2=\"" << h - m << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << h - m << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << w / 2 << "\" y=\"" << h - 15 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">log10 scale ["
     << x0 << ", " << x1 << "]</text>\n"
     << "<text x=\"15\" y=\"" << h / 2 << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 15 " << h / 2
     << ")\">log10 dq [" << y0 << ", " << y1 << "]</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* c = colors[i % 8];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"";
    for (const auto& [x, y] : series[i].points) os << px(x) << "," << py(y) << " ";
    os << "\"/>\n<text x=\"" << w - m + 4 << "\" y=\"" << m + 14 * i << "\" fill=\"" << c
       << "\" font-family=\"sans-serif\" font-size=\"10\">" << series[i].label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------- construct

struct ConstructResult {
  GameTranscript transcript;
  fs::path transcript_path;
  fs::path artifact_path;
  fs::path nets_path;
};

inline GameSetup setup_from(const RunConfig& rc) {
  GameSetup setup = rc.setup();
  if (rc.adversary == AdversaryKind::replay) {
    const auto loaded = read_transcript(read_file(rc.replay_path, "replay transcript"));
    for (const auto& rec : loaded.transcript.rounds) setup.replay.push_back(rec.move);
  }
  return setup;
}

/// Plays the configured game and writes transcript.json, g_K.json and nets.csv.
inline ConstructResult construct(RunConfig rc, const CommonOptions& opt, std::ostream& os) {
  if (opt.seed) rc.seed = *opt.seed;
  const fs::path out = opt.out ? fs::path(*opt.out) : fs::path(rc.out_dir);
  const GameSetup setup = setup_from(rc);
  spdlog::info("construct: {} rounds, {} operators, |G| = {}", setup.rounds, setup.operators.size(),
               setup.target.points.size());
  GameTranscript t = run_game(setup);
  ConstructResult res{std::move(t), out / "transcript.json", out / "g_K.json", out / "nets.csv"};
  write_file(res.transcript_path, write_transcript(res.transcript, setup.perturb));
  write_file(res.artifact_path, serialize(res.transcript.final_function(), res.transcript.domain));
  NetFamily nets;
  for (const auto& rec : res.transcript.rounds) nets.levels.push_back(rec.gamma);
  std::ostringstream csv;
  write_net_csv(csv, nets);
  write_file(res.nets_path, csv.str());
  os << "rounds " << res.transcript.rounds.size() << "\n";
  os << "tail bound s_K = " << to_display(res.transcript.tail_bound(), 12) << "\n";
  os << "wrote " << res.transcript_path.string() << ", " << res.artifact_path.string() << ", "
     << res.nets_path.string() << "\n";
  return res;
}

// ---------------------------------------------------------------- probe

struct ProbeOptions {
  std::string artifact;
  std::optional<std::string> transcript;
  std::vector<std::string> points;  // without a transcript: probe points
  std::optional<std::string> op;    // without a transcript: the operator, rows split by ';'
  ProbeSpec spec;
};

struct ProbeSummary {
  std::size_t witnesses = 0;
  std::size_t meeting_bound = 0;
  std::size_t dini_tested = 0;
  std::size_t dini_fired = 0;
  Real max_dq{0};
};

inline Vec dini_direction(const ProbeSpec& spec, std::size_t d) {
  return spec.dini_direction.size() == d ? spec.dini_direction : Vec::unit(d, 0);
}

inline ScaleLadder witness_ladder(const Vec& x, const Domain& domain, const ProbeSpec& spec,
                                  const std::vector<Real>& inject, std::uint64_t seed) {
  const Real margin = domain.dist_to_boundary(x);
  ScaleLadder l = ScaleLadder::geometric(margin / 2, spec.ladder_ratio, spec.ladder_steps, spec.budget, seed);
  if (spec.inject_alpha) {
    std::vector<Real> fit;
    for (const auto& a : inject)
      if (a < margin) fit.push_back(a);
    l = l.with(fit);
  }
  return l;
}

inline std::string describe_ladder(const ScaleLadder& l) {
  return std::to_string(l.radii.size()) + " scales from " + to_display(l.radii.front(), 6) + " to " +
         to_display(l.radii.back(), 6);
}

/// Probes an artifact: at transcript witnesses (the 4/k bound and Dini
/// certificates) or at given points against a given operator.
inline ProbeSummary probe(const ProbeOptions& po, const CommonOptions& opt, std::ostream& os) {
  const auto art = deserialize(read_file(po.artifact));
  const fs::path out = opt.out ? fs::path(*opt.out) : fs::path("out");
  const std::uint64_t seed = opt.seed.value_or(1);
  const ProbeSpec& spec = po.spec;
  ProbeSummary sum;
  std::vector<ProbeRow> rows;
  std::vector<Series> plot;
  std::ostringstream profile_csv;
  std::vector<ProbeRow> profile_rows;

  if (po.transcript) {
    const std::string text = read_file(*po.transcript, "transcript");
    const std::string schema = schema_of(text);
    if (schema != kGameSchema) throw Error("schema mismatch: expected " + std::string(kGameSchema) + ", got '" + schema + "'");
    LoadedTranscript loaded = read_transcript(text);
    GameTranscript& t = loaded.transcript;
    if (t.rounds.empty()) throw Error("transcript has no rounds");
    if (art.f.in_dim() != t.domain.dim() || art.f.out_dim() != t.operators.front().rows())
      throw Error("schema mismatch: artifact dimensions do not match the transcript");
    // Probe the artifact as g_K.
    t.rounds.back().g = art.f;
    const auto ws = witnesses(t, spec.per_round, seed);
    const auto checks = ordered_map(ws.size(), opt.jobs, [&](std::size_t i) { return check_witness(t, ws[i], spec.budget, seed); });
    for (const auto& c : checks) {
      rows.push_back({c.witness.x, "L" + std::to_string(c.witness.op + 1), c.witness.alpha, c.value});
      sum.meeting_bound += c.passed;
      sum.max_dq = std::max(sum.max_dq, c.value);
    }
    sum.witnesses = ws.size();

    const auto alphas = transcript_scales(t);
    std::ostringstream certs;
    if (art.f.out_dim() == 1) {
      const Vec v = dini_direction(spec, t.domain.dim());
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < ws.size(); ++i)
        if (ws[i].k >= spec.dini_min_round) idx.push_back(i);
      const auto reports = ordered_map(idx.size(), opt.jobs, [&](std::size_t j) {
        const Witness& w = ws[idx[j]];
        return dini_empty_certificate(art.f, w.x, v, witness_ladder(w.x, t.domain, spec, alphas, seed), t.domain);
      });
      for (std::size_t j = 0; j < idx.size(); ++j) {
        const Witness& w = ws[idx[j]];
        const auto& r = reports[j];
        ++sum.dini_tested;
        sum.dini_fired += r.fires;
        certs << "certificate dini-empty\n  round " << w.k << "\n  x";
        for (const auto& c : w.x) certs << " " << to_display(c);
        certs << "\n  direction";
        for (const auto& c : v) certs << " " << to_display(c);
        certs << "\n  lower_dini_plus " << to_display(r.plus.value) << "\n  lower_dini_minus " << to_display(r.minus.value)
              << "\n  tolerance " << kDiniTolerance << "\n  ladder " << describe_ladder(ScaleLadder{r.plus.scales})
              << "\n  fires " << (r.fires ? "true" : "false") << "\n\n";
      }
    }
    write_file(out / "certificates.txt", certs.str());

    // Ladder profiles at the first center of each round, for the plot.
    for (const auto& rec : t.rounds) {
      if (rec.gamma.empty()) continue;
      const Vec& x = rec.gamma.front();
      const auto ladder = witness_ladder(x, t.domain, spec, alphas, seed);
      const auto prof = dq_profile(art.f, x, t.operators[rec.op], ladder, t.domain);
      Series s{"round " + std::to_string(rec.k), {}};
      for (std::size_t i = 0; i < prof.scales.size(); ++i) {
        profile_rows.push_back({x, "L" + std::to_string(rec.op + 1), prof.scales[i], prof.values[i]});
        s.points.emplace_back(log10_of(prof.scales[i]), log10_of(prof.values[i]));
      }
      plot.push_back(std::move(s));
    }
  } else {
    if (!po.op) throw Error("probe without a transcript needs --op");
    const auto domain = art.domain ? *art.domain : throw Error("artifact has no domain; probe needs one");
    const auto m = detail::parse_matrix(*po.op);
    std::vector<Real> entries;
    for (const auto& r : m) entries.insert(entries.end(), r.begin(), r.end());
    const LinearMap L(m.size(), m.front().size(), entries, domain.norm_kind(), NormKind::euclidean);
    std::vector<Vec> pts;
    for (const auto& p : po.points) pts.emplace_back(detail::parse_numbers(p));
    if (pts.empty()) {
      const auto [lo, hi] = domain.bounds();
      pts.push_back((lo + hi) / Real(2));
    }
    for (const auto& x : pts) {
      const auto ladder = witness_ladder(x, domain, spec, {}, seed);
      const auto prof = dq_profile(art.f, x, L, ladder, domain);
      Series s{"x" + std::to_string(plot.size() + 1), {}};
      for (std::size_t i = 0; i < prof.scales.size(); ++i) {
        rows.push_back({x, "L", prof.scales[i], prof.values[i]});
        sum.max_dq = std::max(sum.max_dq, prof.values[i]);
        s.points.emplace_back(log10_of(prof.scales[i]), log10_of(prof.values[i]));
      }
      plot.push_back(std::move(s));
    }
  }

  std::vector<std::pair<std::string, std::string>> summary;
  if (po.transcript) {
    summary.emplace_back("witnesses", std::to_string(sum.witnesses));
    summary.emplace_back("meeting_4_over_k", std::to_string(sum.meeting_bound));
    summary.emplace_back("dini_tested", std::to_string(sum.dini_tested));
    summary.emplace_back("dini_fired", std::to_string(sum.dini_fired));
  }
  summary.emplace_back("max_dq", to_display(sum.max_dq));
  std::ostringstream csv;
  write_probe_csv(csv, rows, summary);
  write_file(out / "probe.csv", csv.str());
  if (!profile_rows.empty()) {
    write_probe_csv(profile_csv, profile_rows);
    write_file(out / "profile.csv", profile_csv.str());
  }
  if (opt.plot) write_file(out / "probe.svg", svg_plot(plot, "dq value against scale"));

  if (po.transcript) {
    const double frac = sum.witnesses ? 100.0 * static_cast<double>(sum.meeting_bound) / static_cast<double>(sum.witnesses) : 100.0;
    os << "witnesses meeting 4/k + 1e-9: " << sum.meeting_bound << "/" << sum.witnesses << " (" << frac << "%)\n";
    if (sum.dini_tested)
      os << "dini certificates fired: " << sum.dini_fired << "/" << sum.dini_tested << "\n";
  }
  os << "max dq: " << to_display(sum.max_dq, 6) << "\n";
  return sum;
}

// ---------------------------------------------------------------- verify

inline VerifyReport verify(const std::optional<std::string>& artifact, const CommonOptions& opt, std::ostream& os) {
  const std::uint64_t seed = opt.seed.value_or(1);
  VerifyReport report;
  if (!artifact) {
    report = self_test(opt.jobs, seed);
  } else {
    const std::string text = read_file(*artifact);
    const std::string schema = schema_of(text);
    if (schema == kGameSchema) {
      report = verify_transcript(read_transcript(text).transcript, opt.jobs, seed);
    } else if (schema == kFunctionSchema) {
      auto art = deserialize(text);
      const Domain domain = art.domain ? *art.domain
                                       : Domain::box(Vec(art.f.in_dim()), Vec(std::vector<Real>(art.f.in_dim(), Real(1))),
                                                     NormKind::euclidean);
      report = verify_function(art.f, domain, opt.jobs, seed);
    } else {
      throw Error("unknown schema version '" + schema + "'");
    }
  }
  report.print(os);
  if (!report.passed()) os << "first failing invariant: " << report.first_failure() << "\n";
  return report;
}

// ---------------------------------------------------------------- eval, net

/// Evaluates the artifact on n points per axis over the domain's bounding box
/// (points outside a ball domain are skipped).
inline std::string eval_grid(const std::string& artifact, std::size_t n) {
  if (n < 2) throw Error("eval: grid needs at least 2 points per axis");
  const auto art = deserialize(read_file(artifact));
  const std::size_t d = art.f.in_dim();
  const Domain domain = art.domain ? *art.domain
                                   : Domain::box(Vec(d), Vec(std::vector<Real>(d, Real(1))), NormKind::euclidean);
  const auto [lo, hi] = domain.bounds();
  std::ostringstream os;
  for (std::size_t i = 1; i <= d; ++i) os << "x" << i << ",";
  for (std::size_t j = 1; j <= art.f.out_dim(); ++j) os << "y" << j << (j == art.f.out_dim() ? "\n" : ",");
  std::vector<std::size_t> idx(d, 0);
  for (;;) {
    Vec x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = lo[i] + (hi[i] - lo[i]) * Real(idx[i]) / Real(n - 1);
    if (domain.contains(x)) {
      const Vec y = art.f(x);
      for (const auto& c : x) os << to_display(c) << ",";
      for (std::size_t j = 0; j < y.size(); ++j) os << to_display(y[j]) << (j + 1 == y.size() ? "\n" : ",");
    }
    std::size_t i = d;
    while (i > 0) {
      --i;
      if (++idx[i] < n) break;
      idx[i] = 0;
      if (i == 0) return os.str();
    }
  }
}

inline std::string net_csv(const RunConfig& rc) {
  std::ostringstream os;
  write_net_csv(os, nested_nets(rc.target, rc.domain, rc.rounds));
  return os.str();
}

}  // namespace lipforge::cli
