#include <catch_amalgamated.hpp>

#include <iomanip>

#include "lipforge/cli.hpp"

using namespace lipforge;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;
namespace fs = std::filesystem;

namespace {

constexpr const char* kQuick = R"([domain]
lo = 0 0
hi = 1 1

[target]
grid_step = 1/10

[operators]
L1 = 0.5 0
L2 = -0.5 0

[game]
rounds = 4
adversary = jitter

[run]
seed = 7
)";

// Fresh directory under the test's working directory.
fs::path scratch(const std::string& name) {
  const fs::path p = fs::path("cli_scratch") / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

cli::CommonOptions out_to(const fs::path& p) {
  cli::CommonOptions opt;
  opt.out = p.string();
  return opt;
}

std::string with_line(const std::string& text, const std::string& from, const std::string& to) {
  std::string s = text;
  s.replace(s.find(from), from.size(), to);
  return s;
}

}  // namespace

TEST_CASE("config parsing", "[cli]") {
  const auto rc = parse_config(kQuick);
  CHECK(rc.rounds == 4);
  CHECK(rc.adversary == AdversaryKind::jitter);
  CHECK(rc.seed == 7);
  CHECK(rc.operator_ids == std::vector<std::string>{"L1", "L2"});
  CHECK(rc.target.points.size() == 9 * 9);
  CHECK(rc.operators[1].at(0, 0) == -0.5);
}

TEST_CASE("config diagnostics name the line and field", "[cli]") {
  const std::string q = kQuick;
  CHECK_THROWS_WITH(parse_config(with_line(q, "L2 = -0.5 0", "L2 = 1.2 0"), "q.ini"),
                    StartsWith("q.ini:10: [operators] L2: operator norm must be < 1"));
  CHECK_THROWS_WITH(parse_config(with_line(q, "rounds = 4", "rouns = 4"), "q.ini"),
                    StartsWith("q.ini:13: [game] rouns: unknown field"));
  CHECK_THROWS_WITH(parse_config(with_line(q, "[run]", "[runs]"), "q.ini"),
                    StartsWith("q.ini:16: [runs]: unknown section"));
  CHECK_THROWS_WITH(parse_config(with_line(q, "grid_step = 1/10", ""), "q.ini"),
                    ContainsSubstring("[target] grid_step: missing field"));
  CHECK_THROWS_WITH(parse_config(with_line(q, "L1 = 0.5 0", "L1 = 0.5 0 0"), "q.ini"),
                    StartsWith("q.ini:9: [operators] L1: operator has 3 columns"));
  CHECK_THROWS_WITH(parse_config(with_line(q, "jitter", "greedy"), "q.ini"),
                    StartsWith("q.ini:14: [game] adversary: unknown adversary"));
  CHECK_THROWS_WITH(load_config("cli_scratch/none.ini"), ContainsSubstring("config not found"));
}

TEST_CASE("construct is deterministic to the byte", "[cli]") {
  std::ostringstream log;
  const auto a = cli::construct(parse_config(kQuick), out_to(scratch("a")), log);
  const auto b = cli::construct(parse_config(kQuick), out_to(scratch("b")), log);
  for (const auto* name : {"transcript.json", "g_K.json", "nets.csv"}) {
    const std::string ta = cli::read_file(fs::path("cli_scratch/a") / name);
    CHECK(!ta.empty());
    CHECK(ta == cli::read_file(fs::path("cli_scratch/b") / name));
  }
  CHECK(a.transcript.rounds.size() == 4);
  CHECK_THAT(log.str(), ContainsSubstring("tail bound s_K"));
  // The seed override changes the jitter moves.
  auto opt = out_to(scratch("c"));
  opt.seed = 8;
  cli::construct(parse_config(kQuick), opt, log);
  CHECK(cli::read_file("cli_scratch/c/transcript.json") != cli::read_file("cli_scratch/a/transcript.json"));
}

TEST_CASE("missing artifacts are reported", "[cli]") {
  std::ostringstream os;
  cli::ProbeOptions po;
  po.artifact = "cli_scratch/no_such.json";
  CHECK_THROWS_WITH(cli::probe(po, {}, os), ContainsSubstring("artifact not found"));
  CHECK_THROWS_WITH(cli::verify(std::string("cli_scratch/no_such.json"), {}, os), ContainsSubstring("artifact not found"));
  const auto dir = scratch("bad");
  cli::write_file(dir / "x.json", "{\"schema\":\"lipforge-fun/9\"}");
  CHECK_THROWS_WITH(cli::verify((dir / "x.json").string(), {}, os), ContainsSubstring("unknown schema version"));
}

TEST_CASE("probing a linear artifact gives zero dq", "[cli]") {
  const auto dir = scratch("lin");
  const auto eu = NormKind::euclidean;
  // Same decimals as the --op text; binary 0.3 would differ from it by ~1e-17.
  const LinearMap A(1, 2, {detail::parse_decimal("0.3"), detail::parse_decimal("-0.6")}, eu, eu);
  cli::write_file(dir / "lin.json", serialize(LipFun::linear(A), Domain::box(Vec{0, 0}, Vec{1, 1}, eu)));
  cli::ProbeOptions po;
  po.artifact = (dir / "lin.json").string();
  po.points = {"0.5 0.5", "0.2 0.7"};
  po.op = "0.3 -0.6";
  std::ostringstream os;
  const auto sum = cli::probe(po, out_to(dir), os);
  // Zero up to the working-precision rounding of Az − Ax − A(z − x).
  CHECK(sum.max_dq <= 1e-25);
  CHECK(fs::exists(dir / "probe.csv"));
  po.op = "0.3 -0.5";
  CHECK(abs(cli::probe(po, out_to(dir), os).max_dq - 0.1) <= 1e-15);
}

TEST_CASE("verify passes a transcript and catches a corrupted artifact", "[cli]") {
  const auto dir = scratch("v");
  std::ostringstream os;
  cli::construct(parse_config(kQuick), out_to(dir), os);
  CHECK(cli::verify((dir / "transcript.json").string(), {}, os).passed());
  CHECK(cli::verify((dir / "g_K.json").string(), {}, os).passed());

  cli::ProbeOptions po;
  po.artifact = (dir / "g_K.json").string();
  po.transcript = (dir / "transcript.json").string();
  const auto sum = cli::probe(po, out_to(dir), os);
  CHECK(sum.witnesses > 0);
  CHECK(sum.meeting_bound == sum.witnesses);

  // The last single-row affine node is a local linear piece h(z) = T(z − x) + g0(x);
  // moving its base opens a seam at the patch sphere.
  json doc = json::parse(cli::read_file(dir / "g_K.json"));
  json* target = nullptr;
  for (auto& n : doc["nodes"])
    if (n["kind"] == "affine" && n["map"]["rows"] == 1) target = &n;
  REQUIRE(target != nullptr);
  std::string& base = (*target)["base"][0].get_ref<std::string&>();
  const auto at = base.find('@');
  const std::string bits = at == std::string::npos ? "" : base.substr(at);
  std::ostringstream moved;
  moved << std::setprecision(17) << std::stod(base.substr(0, at)) + 1e-6 << bits;
  base = moved.str();
  cli::write_file(dir / "corrupt.json", doc.dump());
  std::ostringstream vos;
  const auto report = cli::verify((dir / "corrupt.json").string(), {}, vos);
  CHECK_FALSE(report.passed());
  const std::string first = report.first_failure();
  CHECK((first.starts_with("continuity") || first.starts_with("lipschitz")));
  CHECK_THAT(vos.str(), ContainsSubstring("first failing invariant"));
}

TEST_CASE("eval grid and net export", "[cli]") {
  const auto dir = scratch("e");
  const auto eu = NormKind::euclidean;
  cli::write_file(dir / "n.json", serialize(LipFun::norm_of(2, eu), Domain::box(Vec{0, 0}, Vec{1, 1}, eu)));
  const std::string grid = cli::eval_grid((dir / "n.json").string(), 2);
  CHECK_THAT(grid, ContainsSubstring("x1,x2,y1"));
  CHECK(std::count(grid.begin(), grid.end(), '\n') == 5);
  const std::string nets = cli::net_csv(parse_config(kQuick));
  CHECK_THAT(nets, StartsWith("k,x1,x2\n1,5e-1,5e-1\n"));
}
