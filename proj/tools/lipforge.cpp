// lipforge command-line front end.

#include <iostream>

#include <CLI11.hpp>

#include "lipforge/cli.hpp"

using namespace lipforge;

namespace {

void add_common(CLI::App* cmd, cli::CommonOptions& opt) {
  cmd->add_option("--out", opt.out, "output directory");
  cmd->add_option("--seed", opt.seed, "sampling seed");
  cmd->add_option("--jobs", opt.jobs, "worker threads for verification fan-out")->check(CLI::PositiveNumber);
  cmd->add_flag("--plot", opt.plot, "also write SVG plots");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Construct and probe badly non-differentiable 1-Lipschitz maps"};
  app.require_subcommand(1);
  cli::CommonOptions opt;

  std::string config_path;
  auto* construct = app.add_subcommand("construct", "play the game and write transcript, g_K and nets");
  construct->add_option("--config", config_path, "run configuration")->required();
  add_common(construct, opt);

  cli::ProbeOptions po;
  std::optional<std::string> probe_config;
  std::optional<std::size_t> per_round, budget, steps;
  std::optional<std::string> ratio;
  bool no_inject = false;
  auto* probe = app.add_subcommand("probe", "difference-quotient and Dini probes of an artifact");
  probe->add_option("artifact", po.artifact, "function artifact (g_K.json)")->required();
  probe->add_option("--transcript", po.transcript, "game transcript supplying witnesses");
  probe->add_option("--config", probe_config, "take probe settings from a run configuration");
  probe->add_option("--point", po.points, "probe point (without a transcript), coordinates split by spaces");
  probe->add_option("--op", po.op, "operator rows split by ';' (without a transcript)");
  probe->add_option("--per-round", per_round, "witnesses per net center");
  probe->add_option("--budget", budget, "samples per dq evaluation");
  probe->add_option("--ladder-steps", steps, "geometric ladder length");
  probe->add_option("--ladder-ratio", ratio, "geometric ladder ratio in (0,1)");
  probe->add_flag("--no-inject", no_inject, "do not add transcript scales to the ladder");
  add_common(probe, opt);

  std::optional<std::string> verify_artifact;
  auto* verify = app.add_subcommand("verify", "run the invariant suites (self-test without an artifact)");
  verify->add_option("artifact", verify_artifact, "function artifact or transcript");
  add_common(verify, opt);

  std::string eval_artifact;
  std::size_t grid = 11;
  auto* eval = app.add_subcommand("eval", "evaluate an artifact on a point grid");
  eval->add_option("artifact", eval_artifact, "function artifact")->required();
  eval->add_option("--grid", grid, "points per axis");
  add_common(eval, opt);

  std::string net_config;
  auto* net = app.add_subcommand("net", "write the nested nets of a configuration");
  net->add_option("--config", net_config, "run configuration")->required();
  add_common(net, opt);

  CLI11_PARSE(app, argc, argv);

  try {
    cli::configure_logging();
    if (*construct) {
      cli::construct(load_config(config_path), opt, std::cout);
      return cli::kOk;
    }
    if (*probe) {
      if (probe_config) po.spec = load_config(*probe_config).probe;
      if (per_round) po.spec.per_round = *per_round;
      if (budget) po.spec.budget = *budget;
      if (steps) po.spec.ladder_steps = *steps;
      if (ratio) po.spec.ladder_ratio = detail::parse_decimal(*ratio);
      if (no_inject) po.spec.inject_alpha = false;
      const auto sum = cli::probe(po, opt, std::cout);
      return sum.meeting_bound == sum.witnesses ? cli::kOk : cli::kFailed;
    }
    if (*verify) return cli::verify(verify_artifact, opt, std::cout).passed() ? cli::kOk : cli::kFailed;
    if (*eval) {
      const std::string csv = cli::eval_grid(eval_artifact, grid);
      if (opt.out)
        cli::write_file(*opt.out, csv);
      else
        std::cout << csv;
      return cli::kOk;
    }
    if (*net) {
      RunConfig rc = load_config(net_config);
      const std::string csv = cli::net_csv(rc);
      if (opt.out)
        cli::write_file(std::filesystem::path(*opt.out) / "nets.csv", csv);
      else
        std::cout << csv;
      return cli::kOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kBadInput;
  }
  return cli::kOk;
}
