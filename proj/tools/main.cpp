#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "experiments.hpp"
#include "ngcn/errors.hpp"

namespace ex = ngcn::experiments;

namespace {

struct Common {
  ex::DataSource source;
  ex::ModelChoice model;
  ngcn::TrainSpec train;
  std::string out;
  std::string csv;
};

void add_data_flags(CLI::App* app, Common& c) {
  app->add_option("--dataset", c.source.name, "Dataset name under the data root, or sbm-smoke");
  app->add_option("--dataset-dir", c.source.dataset_dir, "Dataset directory (overrides --dataset)");
  app->add_option("--data-root", c.source.data_root, "Root holding <name>/ directories [$NGCN_DATA_ROOT]");
}

void add_model_flags(CLI::App* app, Common& c) {
  app->add_option("--model", c.model.model, "gcn | sage | dcnn | ngcn | nsage")
      ->check(CLI::IsMember({"gcn", "sage", "dcnn", "ngcn", "nsage"}));
  app->add_option("--combiner", c.model.combiner, "fc | attn")->check(CLI::IsMember({"fc", "attn"}));
  app->add_option("--K", c.model.K, "Walk powers per model (default 6)")->check(CLI::PositiveNumber);
  app->add_option("--r", c.model.r, "Replicas per power (default 4)")->check(CLI::PositiveNumber);
  app->add_option("--layers", c.model.layers, "Layers per module (default 2)")->check(CLI::PositiveNumber);
  app->add_option("--hidden-dim", c.model.hidden_dim, "Hidden width")->check(CLI::PositiveNumber);
  app->add_flag("--intermediate-supervision", c.model.intermediate_supervision,
                "Add a loss term per module (attention only)");
}

void add_train_flags(CLI::App* app, Common& c, int default_runs) {
  c.train.runs = default_runs;
  app->add_option("--lr", c.train.lr, "Adam learning rate")->capture_default_str();
  app->add_option("--steps", c.train.steps, "Training steps")->capture_default_str();
  app->add_option("--dropout", c.train.dropout, "Dropout rate")->capture_default_str();
  app->add_option("--l2", c.train.l2, "L2 coefficient")->capture_default_str();
  app->add_option("--seed", c.train.seed, "First seed; run i uses seed + i")->capture_default_str();
  app->add_option("--runs", c.train.runs, "Runs (seeds) per configuration")->capture_default_str();
  app->add_option("--jobs", c.train.jobs, "Concurrent runs")->capture_default_str();
}

void add_output_flags(CLI::App* app, Common& c, bool csv) {
  app->add_option("--out", c.out, "Write the JSON report here (default: stdout)");
  if (csv) app->add_option("--csv", c.csv, "Also write a CSV table here");
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ngcn::DataError(path, 0, "cannot open for writing");
  f << text;
  if (!f) throw ngcn::DataError(path, 0, "write failed");
}

void emit(const ex::Report& report, const Common& c, std::string (*csv)(const ex::Json&)) {
  const std::string json = report.to_json().dump(2) + "\n";
  if (c.out.empty()) {
    std::cout << json;
  } else {
    write_file(c.out, json);
  }
  if (!c.csv.empty() && csv) write_file(c.csv, csv(report.body));
}

void print_train_summary(const ex::Report& report) {
  const auto& r = report.body.at("results");
  std::cerr << report.body.at("metric").get<std::string>() << ": best-val run " << r.at("best_run")
            << " test " << r.at("test_of_best") << ", mean " << r.at("test_mean") << " +- " << r.at("test_std")
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"N-GCN experiments: train, sweep K x r, perturb features, vary labels, deepen baselines"};
  app.require_subcommand(1);

  Common train_c, sweep_c, perturb_c, scarcity_c, depth_c;
  ex::SweepOptions sweep_o;
  ex::PerturbOptions perturb_o;
  ex::ScarcityOptions scarcity_o;
  ex::DepthOptions depth_o;

  auto* train = app.add_subcommand("train", "Repeated runs of one configuration");
  add_data_flags(train, train_c);
  add_model_flags(train, train_c);
  add_train_flags(train, train_c, 20);
  add_output_flags(train, train_c, false);

  auto* sweep = app.add_subcommand("sweep", "Grid over K and r");
  add_data_flags(sweep, sweep_c);
  add_model_flags(sweep, sweep_c);
  sweep_c.model.model = "ngcn";
  add_train_flags(sweep, sweep_c, 20);
  add_output_flags(sweep, sweep_c, true);
  sweep->add_option("--K-list", sweep_o.Ks, "K values")->delimiter(',')->capture_default_str();
  sweep->add_option("--r-list", sweep_o.rs, "r values")->delimiter(',')->capture_default_str();

  auto* perturb = app.add_subcommand("perturb", "Random feature removal");
  add_data_flags(perturb, perturb_c);
  add_model_flags(perturb, perturb_c);
  add_train_flags(perturb, perturb_c, 10);
  add_output_flags(perturb, perturb_c, true);
  perturb->add_option("--fractions", perturb_o.fractions, "Removal fractions")->delimiter(',');
  perturb->add_option("--models", perturb_o.models, "Model labels, e.g. gcn,ngcn-a")->delimiter(',');

  auto* scarcity = app.add_subcommand("scarcity", "Training labels per class");
  add_data_flags(scarcity, scarcity_c);
  add_model_flags(scarcity, scarcity_c);
  add_train_flags(scarcity, scarcity_c, 10);
  add_output_flags(scarcity, scarcity_c, true);
  scarcity->add_option("--per-class", scarcity_o.per_class, "Labels per class")->delimiter(',');
  scarcity->add_option("--models", scarcity_o.models, "Model labels, e.g. nsage-fc,ngcn-a")->delimiter(',');

  auto* depth = app.add_subcommand("depth", "Deeper GCN and SAGE baselines");
  add_data_flags(depth, depth_c);
  add_train_flags(depth, depth_c, 20);
  add_output_flags(depth, depth_c, true);
  depth->add_option("--depths", depth_o.hidden_layers, "Hidden layer counts")->delimiter(',');
  depth->add_option("--models", depth_o.models, "gcn and/or sage")->delimiter(',');
  depth->add_option("--hidden-dim", depth_o.hidden_dim, "Hidden width")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) {
      const auto report = ex::cmd_train(train_c.source, train_c.model, train_c.train);
      print_train_summary(report);
      emit(report, train_c, nullptr);
    } else if (*sweep) {
      emit(ex::cmd_sweep(sweep_c.source, sweep_c.model, sweep_c.train, sweep_o), sweep_c, ex::sweep_csv);
    } else if (*perturb) {
      emit(ex::cmd_perturb(perturb_c.source, perturb_c.model, perturb_c.train, perturb_o), perturb_c,
           ex::perturb_csv);
    } else if (*scarcity) {
      emit(ex::cmd_scarcity(scarcity_c.source, scarcity_c.model, scarcity_c.train, scarcity_o), scarcity_c,
           ex::scarcity_csv);
    } else if (*depth) {
      emit(ex::cmd_depth(depth_c.source, depth_c.train, depth_o), depth_c, ex::depth_csv);
    }
  } catch (const ngcn::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
