#include <CLI11.hpp>

#include <iostream>

#include "gridfrt/cli/commands.hpp"
#include "gridfrt/core_model.hpp"

using namespace gridfrt;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Synthetic grid generation, fault ride-through assessment and surrogate training"};
  app.set_version_flag("--version", GRIDFRT_VERSION);
  app.require_subcommand(1);

  cli::CommonOptions common;
  std::string config_file;
  app.add_option("--seed", common.seed, "Master RNG seed")->capture_default_str();
  app.add_option("--config", config_file, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--jobs", common.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--out", common.out, "Output directory");
  app.add_flag("--force", common.force, "Overwrite a previous run in --out");

  std::optional<int> n_grids;
  auto* generate = app.add_subcommand("generate", "Synthesize and validate grids");
  generate->add_option("--n-grids", n_grids, "Number of grids");

  fs::path grids, results, dataset, case_dataset, case_file, assess_dir;
  std::optional<long> n_samples;
  std::optional<fs::path> curve_file, train_dir, plot_dataset;
  std::vector<std::string> models;

  auto* assess = app.add_subcommand("assess", "Estimate per-bus ride-through probabilities");
  assess->add_option("--grids", grids, "Directory of grid files")->required();
  assess->add_option("--samples", n_samples, "Perturbations per bus");
  assess->add_option("--curve", curve_file, "Ride-through curve JSON")->check(CLI::ExistingFile);

  auto* adapt = app.add_subcommand("adapt-case", "Convert a test case into a grid");
  adapt->add_option("--case", case_file, "Case file")->required()->check(CLI::ExistingFile);

  auto* ds = app.add_subcommand("dataset", "Build the graph dataset from grids and results");
  ds->add_option("--grids", grids, "Directory of grid files")->required();
  ds->add_option("--results", results, "results.csv from assess")->required()->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "Train surrogate models");
  train->add_option("--dataset", dataset, "dataset.jsonl or its directory")->required();
  train->add_option("--models", models, "linreg, gbt, tag, tag_reg (default all)")->delimiter(',');

  auto* eval = app.add_subcommand("eval", "Generalization table on held-out grids and a test case");
  eval->add_option("--dataset", dataset, "Training dataset")->required();
  eval->add_option("--case-dataset", case_dataset, "Dataset of the test case")->required();
  eval->add_option("--models", models, "linreg, gbt, tag, tag_reg (default all)")->delimiter(',');

  auto* plot = app.add_subcommand("plotdata", "Export figure data");
  plot->add_option("--assess", assess_dir, "Output directory of assess")->required();
  plot->add_option("--train", train_dir, "Output directory of train");
  plot->add_option("--dataset", plot_dataset, "Dataset used for training");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  if (!config_file.empty()) common.config = config_file;

  try {
    if (*generate) cli::cmd_generate(common, n_grids);
    else if (*assess) cli::cmd_assess(common, grids, n_samples, curve_file);
    else if (*adapt) cli::cmd_adapt_case(common, case_file);
    else if (*ds) cli::cmd_dataset(common, grids, results);
    else if (*train) cli::cmd_train(common, dataset, models);
    else if (*eval) cli::cmd_eval(common, dataset, case_dataset, models);
    else if (*plot) cli::cmd_plotdata(common, assess_dir, train_dir, plot_dataset);
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const GridError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
