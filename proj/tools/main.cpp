// ifenn: data generation, training, evaluation and hybrid FEM runs.

#include <iostream>

#include "CLI11.hpp"
#include "ifenn/cli.hpp"

int main(int argc, char** argv) {
  using namespace ifenn::cli;
  CLI::App app{"Hybrid finite element / operator network toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  CommandArgs args;
  auto add = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-p,--preset", args.preset, "cube, tube, excavation or a *-paper profile")->capture_default_str();
    sub->add_option("-c,--config", args.config_file, "settings file (key = value with [section] headers)");
    sub->add_option("-s,--set", args.overrides, "override section.key=value (repeatable)");
    sub->add_option("-o,--output", args.output_root, "root of the timestamped run directories")
        ->capture_default_str();
    sub->add_option("--run-dir", args.run_dir, "explicit run directory");
    sub->add_option("-j,--threads", args.threads, "worker threads (data.threads)");
    return sub;
  };

  auto* gen = add("generate", "sample load cases and label them with the coupled solver");
  gen->add_option("-d,--dataset", args.dataset, "output dataset path (default: run directory)");

  auto* tr = add("train", "train the operator network on a dataset");
  tr->add_option("-d,--dataset", args.dataset, "dataset file")->required();
  tr->add_option("-m,--checkpoint", args.checkpoint, "output checkpoint path (default: run directory)");

  auto* ev = add("eval", "test-split metrics and the p10 / p50 / p90 cases");
  ev->add_option("-d,--dataset", args.dataset, "dataset file")->required();
  ev->add_option("-m,--checkpoint", args.checkpoint, "checkpoint")->required();

  auto* hy = add("ifenn", "hybrid run (network field + mechanics-only solver) against the coupled solver");
  hy->add_option("-d,--dataset", args.dataset, "dataset (for percentile cases and the case seed)");
  hy->add_option("-m,--checkpoint", args.checkpoint, "checkpoint");
  hy->add_option("--case", args.case_spec, "case id or p10 / p50 / p90");
  hy->add_flag("--oracle-model", args.oracle_model, "feed the coupled solver's own field instead of a network");

  auto* fe = add("fem", "coupled solver run with VTK output");
  fe->add_option("--case", args.case_spec, "case id");
  fe->add_option("-d,--dataset", args.dataset, "dataset (for the case seed)");

  auto* st = add("stability", "teacher-forcing switch study");
  st->add_option("-d,--dataset", args.dataset, "dataset (for percentile cases and the case seed)");
  st->add_option("-m,--checkpoint", args.checkpoint, "checkpoint")->required();
  st->add_option("--case", args.case_spec, "case id or p10 / p50 / p90");

  auto* be = add("bench", "per-step timing of the coupled and mechanics-only solvers");
  be->add_option("-m,--checkpoint", args.checkpoint, "checkpoint (default: oracle field)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  args.command = app.get_subcommands().front()->get_name();
  return run_command(args, std::cout, std::cerr);
}
