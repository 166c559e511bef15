#include "experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "ngcn/errors.hpp"
#include "ngcn/parallel.hpp"

namespace ngcn::experiments {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string metric_name(Task task) { return task == Task::single_label ? "accuracy" : "micro_f1"; }

Json header(const std::string& command, const DataSource& source, const Dataset& dataset) {
  Json j;
  j["report_version"] = kReportVersion;
  j["command"] = command;
  Json data = source.to_json();
  data["manifest"] = to_json(manifest_of(dataset));
  data["task"] = to_string(dataset.task);
  j["config"]["dataset"] = data;
  j["metric"] = metric_name(dataset.task);
  return j;
}

bool is_multi_power(const std::string& model) { return model == "ngcn" || model == "nsage"; }

// One grid cell: a spec trained on `runs` seeds. Either every run shares
// `inputs`, or each seed gets its own dataset variant from `make_dataset`.
struct Cell {
  ModelSpec spec;
  const ModelInputs* inputs = nullptr;
  std::function<Dataset(std::uint64_t)> make_dataset;
};

struct CellRuns {
  std::vector<TrainResult> runs;
  std::vector<double> seconds;
};

// All (cell, seed) pairs run concurrently up to train_spec.jobs; results are
// stored by index.
std::vector<CellRuns> run_cells(const std::vector<Cell>& cells, const TrainSpec& train_spec,
                                const Dataset& dataset) {
  train_spec.validate();
  const auto runs = static_cast<std::size_t>(train_spec.runs);
  std::vector<CellRuns> out(cells.size());
  for (auto& c : out) {
    c.runs.resize(runs);
    c.seconds.assign(runs, 0.0);
  }
  parallel_for(cells.size() * runs, train_spec.jobs, [&](std::size_t idx) {
    const std::size_t c = idx / runs;
    const std::size_t i = idx % runs;
    const auto start = Clock::now();
    TrainSpec one = train_spec;
    one.seed = train_spec.seed + i;
    one.runs = 1;
    one.jobs = 1;
    if (cells[c].make_dataset) {
      out[c].runs[i] = train(cells[c].spec, one, cells[c].make_dataset(one.seed));
    } else {
      out[c].runs[i] = train(cells[c].spec, one, dataset, *cells[c].inputs);
    }
    out[c].seconds[i] = seconds_since(start);
  });
  return out;
}

std::vector<double> test_metrics(const std::vector<TrainResult>& runs) {
  std::vector<double> tests;
  for (const auto& run : runs) tests.push_back(run.test_metric);
  return tests;
}

Json attention_summary(const std::vector<TrainResult>& runs, const ModelSpec& spec) {
  if (spec.combiner != Combiner::attention) return nullptr;
  std::vector<double> mean(static_cast<std::size_t>(spec.K), 0.0);
  for (const auto& run : runs) {
    const auto per_power = attention_per_power(run.best_attention, spec.K, spec.r);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += per_power[k] / static_cast<double>(runs.size());
  }
  return mean;
}

// Attention mass on walk powers >= 2 (module index k with first_power + k >= 2).
double mass_beyond_one_hop(const std::vector<double>& per_power, int first_power) {
  double mass = 0.0;
  for (std::size_t k = 0; k < per_power.size(); ++k)
    if (first_power + static_cast<int>(k) >= 2) mass += per_power[k];
  return mass;
}

template <class T>
std::string join(const std::vector<T>& xs, char sep) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? std::string(1, sep) : "") << xs[i];
  return os.str();
}

std::string num(const Json& v) {
  if (v.is_null()) return "";
  return v.dump();
}

}  // namespace

std::filesystem::path DataSource::resolve() const {
  if (!dataset_dir.empty()) return dataset_dir;
  if (name.empty()) throw ConfigError("no dataset given (use --dataset or --dataset-dir)");
  std::string root = data_root;
  if (root.empty()) {
    if (const char* env = std::getenv("NGCN_DATA_ROOT")) root = env;
  }
  if (root.empty()) throw DataError("dataset '" + name + "' needs --data-root or NGCN_DATA_ROOT");
  return std::filesystem::path(root) / name;
}

bool DataSource::available() const {
  if (dataset_dir.empty() && name == kSbmSmoke) return true;
  try {
    return std::filesystem::exists(resolve() / "meta.json");
  } catch (const std::exception&) {
    return false;
  }
}

Json DataSource::to_json() const {
  Json j;
  j["name"] = name;
  if (!dataset_dir.empty()) j["dataset_dir"] = dataset_dir;
  return j;
}

Dataset sbm_smoke_dataset() {
  Dataset d = generate_sbm(SbmConfig{});
  d.name = kSbmSmoke;
  return d;
}

Dataset load_source(const DataSource& source) {
  if (source.dataset_dir.empty() && source.name == kSbmSmoke) return sbm_smoke_dataset();
  return load_dataset(source.resolve());
}

ModelSpec ModelChoice::to_spec(Task task) const {
  if (hidden_dim < 1) throw ConfigError("hidden width must be >= 1");
  if (layers && *layers < 1) throw ConfigError("layers must be >= 1");
  if (model == "gcn" || model == "sage") {
    if (K.value_or(1) != 1 || r.value_or(1) != 1) throw ConfigError(model + " takes K = r = 1");
    if (combiner) throw ConfigError(model + " has no combiner; use ngcn or nsage");
    if (intermediate_supervision) throw ConfigError("intermediate supervision needs the attention combiner");
    const int L = layers.value_or(2);
    return model == "gcn" ? ModelSpec::gcn(L, hidden_dim) : ModelSpec::sage(L, hidden_dim);
  }
  if (model == "dcnn") {
    if (r.value_or(1) != 1) throw ConfigError("dcnn takes r = 1");
    if (layers.value_or(1) != 1) throw ConfigError("dcnn modules have one layer");
    if (combiner && *combiner != "fc") throw ConfigError("dcnn uses the fc combiner");
    if (intermediate_supervision) throw ConfigError("intermediate supervision needs the attention combiner");
    ModelSpec s = ModelSpec::dcnn(K.value_or(6));
    s.module_output_dim = hidden_dim;
    return s;
  }
  if (!is_multi_power(model)) throw ConfigError("unknown model '" + model + "'");
  const std::string comb = combiner.value_or("fc");
  Combiner c;
  if (comb == "fc") {
    c = Combiner::fc;
  } else if (comb == "attn") {
    c = Combiner::attention;
  } else {
    throw ConfigError("unknown combiner '" + comb + "' (fc | attn)");
  }
  if (intermediate_supervision && c != Combiner::attention)
    throw ConfigError("intermediate supervision needs the attention combiner");
  const int k = K.value_or(6);
  const int rr = r.value_or(4);
  ModelSpec s = model == "ngcn" ? ModelSpec::ngcn(k, rr, c) : ModelSpec::nsage(k, rr, c);
  s.layers = layers.value_or(2);
  s.hidden_dim = hidden_dim;
  s.intermediate_supervision = intermediate_supervision;
  if (task == Task::multi_label) s.per_module_softmax = false;
  return s;
}

std::string ModelChoice::label() const {
  if (!is_multi_power(model)) return model;
  return model + (combiner.value_or("fc") == "attn" ? "-a" : "-fc");
}

ModelChoice parse_model_label(const std::string& label, const ModelChoice& base) {
  ModelChoice m = base;
  m.combiner.reset();
  const auto dash = label.find('-');
  m.model = label.substr(0, dash);
  if (dash != std::string::npos) {
    const std::string suffix = label.substr(dash + 1);
    if (!is_multi_power(m.model)) throw ConfigError("model label '" + label + "' takes no combiner suffix");
    if (suffix == "fc") {
      m.combiner = "fc";
    } else if (suffix == "a" || suffix == "attn") {
      m.combiner = "attn";
    } else {
      throw ConfigError("unknown combiner suffix in '" + label + "'");
    }
  } else if (!is_multi_power(m.model) && m.model != "gcn" && m.model != "sage" && m.model != "dcnn") {
    throw ConfigError("unknown model label '" + label + "'");
  }
  if (!is_multi_power(m.model)) {
    // Baselines ignore the grid values given for the multi-power models.
    m.K.reset();
    m.r.reset();
    m.intermediate_supervision = false;
    if (m.model == "dcnn") m.layers.reset();
  } else if (!m.combiner) {
    m.combiner = "fc";
  }
  if (m.combiner != std::optional<std::string>("attn")) m.intermediate_supervision = false;
  return m;
}

Json to_json(const ModelSpec& spec) {
  Json j;
  j["base"] = to_string(spec.base);
  j["K"] = spec.K;
  j["r"] = spec.r;
  j["layers"] = spec.layers;
  j["hidden_dim"] = spec.hidden_dim;
  j["combiner"] = to_string(spec.combiner);
  j["normalization"] = to_string(spec.normalization);
  j["first_power"] = spec.first_power;
  j["module_output_dim"] = spec.module_output_dim;
  j["module_output_relu"] = spec.module_output_relu;
  j["per_module_softmax"] = spec.per_module_softmax;
  j["intermediate_supervision"] = spec.intermediate_supervision;
  return j;
}

Json to_json(const TrainSpec& spec) {
  Json j;
  j["lr"] = spec.lr;
  j["steps"] = spec.steps;
  j["dropout"] = spec.dropout;
  j["l2"] = spec.l2;
  j["seed"] = spec.seed;
  j["runs"] = spec.runs;
  return j;
}

Json to_json(const DatasetManifest& manifest) {
  Json j;
  j["format"] = manifest.format;
  j["n"] = manifest.n;
  j["e"] = manifest.e;
  j["c"] = manifest.c;
  j["f"] = manifest.f;
  return j;
}

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  for (double x : xs) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(xs.size()));
  return s;
}

std::vector<double> attention_per_power(const std::vector<double>& m, int K, int r) {
  if (K < 1 || r < 1 || m.size() != static_cast<std::size_t>(K) * static_cast<std::size_t>(r))
    throw ConfigError("attention_per_power: expected K * r weights");
  std::vector<double> out(static_cast<std::size_t>(K), 0.0);
  for (std::size_t j = 0; j < m.size(); ++j) out[j / static_cast<std::size_t>(r)] += m[j];
  return out;
}

Json Report::to_json() const {
  Json j = body;
  j["timing"] = timing;
  return j;
}

TrainOutcome run_repeated(const ModelSpec& spec, const TrainSpec& train_spec, const Dataset& dataset) {
  train_spec.validate();
  const ModelInputs inputs = prepare_inputs(dataset, spec.normalization);
  const auto runs = static_cast<std::size_t>(train_spec.runs);
  std::vector<TrainResult> results(runs);
  TrainOutcome out;
  out.seconds.assign(runs, 0.0);
  parallel_for(runs, train_spec.jobs, [&](std::size_t i) {
    const auto start = Clock::now();
    TrainSpec one = train_spec;
    one.seed = train_spec.seed + i;
    results[i] = train(spec, one, dataset, inputs);
    out.seconds[i] = seconds_since(start);
  });
  out.result = aggregate_runs(std::move(results));
  return out;
}

Json repeated_json(const RepeatedResult& r, const ModelSpec& spec, std::uint64_t seed) {
  Json j;
  j["best_run"] = r.best_run;
  j["best_val"] = r.runs[r.best_run].best_val_metric;
  j["test_of_best"] = r.best_test();
  j["test_mean"] = r.mean_test;
  j["test_std"] = r.std_test;
  Json runs = Json::array();
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    const TrainResult& t = r.runs[i];
    Json row;
    row["seed"] = seed + i;
    row["best_val"] = t.best_val_metric;
    row["test"] = t.test_metric;
    row["step_of_best"] = t.step_of_best;
    row["final_loss"] = t.loss_history.empty() ? 0.0 : t.loss_history.back();
    runs.push_back(row);
  }
  j["runs"] = runs;
  if (spec.combiner == Combiner::attention) {
    const auto& m = r.runs[r.best_run].best_attention;
    j["attention"]["m"] = m;
    j["attention"]["per_power"] = attention_per_power(m, spec.K, spec.r);
  }
  return j;
}

Report cmd_train(const DataSource& source, const ModelChoice& model, const TrainSpec& train_spec) {
  const auto start = Clock::now();
  const Dataset dataset = load_source(source);
  const ModelSpec spec = model.to_spec(dataset.task);
  spec.validate(dataset.num_classes());
  const TrainOutcome outcome = run_repeated(spec, train_spec, dataset);

  Report report;
  report.body = header("train", source, dataset);
  report.body["config"]["model"] = to_json(spec);
  report.body["config"]["model"]["label"] = model.label();
  report.body["config"]["train"] = to_json(train_spec);
  report.body["results"] = repeated_json(outcome.result, spec, train_spec.seed);
  report.timing["run_seconds"] = outcome.seconds;
  report.timing["total_seconds"] = seconds_since(start);
  return report;
}

Report cmd_sweep(const DataSource& source, const ModelChoice& model, const TrainSpec& train_spec,
                 const SweepOptions& grid) {
  if (!is_multi_power(model.model)) throw ConfigError("sweep needs model ngcn or nsage");
  if (grid.Ks.empty() || grid.rs.empty()) throw ConfigError("sweep grid is empty");
  const auto start = Clock::now();
  const Dataset dataset = load_source(source);

  Report report;
  report.body = header("sweep", source, dataset);
  report.body["config"]["grid"]["K"] = grid.Ks;
  report.body["config"]["grid"]["r"] = grid.rs;
  report.body["config"]["train"] = to_json(train_spec);

  // Normalization does not depend on K or r, so inputs are shared by all cells.
  ModelChoice probe = model;
  probe.K = grid.Ks.front();
  probe.r = grid.rs.front();
  const ModelSpec probe_spec = probe.to_spec(dataset.task);
  const ModelInputs inputs = prepare_inputs(dataset, probe_spec.normalization);
  report.body["config"]["model"] = to_json(probe_spec);
  report.body["config"]["model"]["label"] = model.label();

  std::vector<Cell> grid_cells;
  for (int K : grid.Ks) {
    for (int r : grid.rs) {
      ModelChoice choice = model;
      choice.K = K;
      choice.r = r;
      Cell cell{choice.to_spec(dataset.task), &inputs, {}};
      cell.spec.validate(dataset.num_classes());
      grid_cells.push_back(std::move(cell));
    }
  }
  const std::vector<CellRuns> results = run_cells(grid_cells, train_spec, dataset);

  Json cells = Json::array();
  Json cell_seconds = Json::array();
  std::size_t best_cell = 0;
  double best_val = -1.0;
  for (std::size_t c = 0; c < grid_cells.size(); ++c) {
    const RepeatedResult result = aggregate_runs(results[c].runs);
    std::vector<double> vals;
    for (const auto& run : result.runs) vals.push_back(run.best_val_metric);
    const Summary v = summarize(vals);
    Json cell;
    cell["K"] = grid_cells[c].spec.K;
    cell["r"] = grid_cells[c].spec.r;
    cell["val_mean"] = v.mean;
    cell["val_std"] = v.std;
    cell["test_mean"] = result.mean_test;
    cell["test_std"] = result.std_test;
    cell["best_val"] = result.runs[result.best_run].best_val_metric;
    cell["test_of_best"] = result.best_test();
    if (v.mean > best_val) {
      best_val = v.mean;
      best_cell = c;
    }
    cells.push_back(cell);
    cell_seconds.push_back(results[c].seconds);
  }
  report.body["results"]["cells"] = cells;
  report.body["results"]["selected"] = cells[best_cell];
  report.timing["run_seconds"] = cell_seconds;
  report.timing["total_seconds"] = seconds_since(start);
  return report;
}

Report cmd_perturb(const DataSource& source, const ModelChoice& base, const TrainSpec& train_spec,
                   const PerturbOptions& options) {
  train_spec.validate();
  if (options.fractions.empty() || options.models.empty()) throw ConfigError("perturb needs fractions and models");
  for (double f : options.fractions)
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("removal fractions must be in [0, 1]");
  const auto start = Clock::now();
  const Dataset dataset = load_source(source);

  Report report;
  report.body = header("perturb", source, dataset);
  report.body["config"]["models"] = options.models;
  report.body["config"]["fractions"] = options.fractions;
  report.body["config"]["train"] = to_json(train_spec);

  std::vector<Cell> cells;
  std::vector<std::pair<std::string, double>> keys;
  for (const auto& label : options.models) {
    const ModelChoice choice = parse_model_label(label, base);
    const ModelSpec spec = choice.to_spec(dataset.task);
    spec.validate(dataset.num_classes());
    report.body["config"]["model_specs"][choice.label()] = to_json(spec);
    for (double fraction : options.fractions) {
      cells.push_back({spec, nullptr, [&dataset, fraction](std::uint64_t s) {
                         return remove_features(dataset, fraction, s);
                       }});
      keys.emplace_back(choice.label(), fraction);
    }
  }
  const std::vector<CellRuns> results = run_cells(cells, train_spec, dataset);

  Json rows = Json::array();
  Json row_seconds = Json::array();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::vector<double> tests = test_metrics(results[c].runs);
    const Summary t = summarize(tests);
    Json row;
    row["model"] = keys[c].first;
    row["fraction"] = keys[c].second;
    row["test_mean"] = t.mean;
    row["test_std"] = t.std;
    row["tests"] = tests;
    row["attention_per_power"] = attention_summary(results[c].runs, cells[c].spec);
    if (!row["attention_per_power"].is_null()) {
      row["attention_mass_power_ge_2"] =
          mass_beyond_one_hop(row["attention_per_power"].get<std::vector<double>>(), cells[c].spec.first_power);
    } else {
      row["attention_mass_power_ge_2"] = nullptr;
    }
    rows.push_back(row);
    row_seconds.push_back(results[c].seconds);
  }
  report.body["results"]["rows"] = rows;
  report.timing["run_seconds"] = row_seconds;
  report.timing["total_seconds"] = seconds_since(start);
  return report;
}

Report cmd_scarcity(const DataSource& source, const ModelChoice& base, const TrainSpec& train_spec,
                    const ScarcityOptions& options) {
  train_spec.validate();
  if (options.per_class.empty() || options.models.empty()) throw ConfigError("scarcity needs counts and models");
  const auto start = Clock::now();
  const Dataset dataset = load_source(source);
  if (dataset.task != Task::single_label) throw ConfigError("label scarcity needs a single_label dataset");

  Report report;
  report.body = header("scarcity", source, dataset);
  report.body["config"]["models"] = options.models;
  report.body["config"]["per_class"] = options.per_class;
  report.body["config"]["train"] = to_json(train_spec);

  std::vector<Cell> cells;
  std::vector<std::pair<std::string, std::size_t>> keys;
  for (const auto& label : options.models) {
    const ModelChoice choice = parse_model_label(label, base);
    const ModelSpec spec = choice.to_spec(dataset.task);
    spec.validate(dataset.num_classes());
    report.body["config"]["model_specs"][choice.label()] = to_json(spec);
    for (std::size_t count : options.per_class) {
      cells.push_back({spec, nullptr, [&dataset, count](std::uint64_t s) {
                         return subsample_train_labels(dataset, count, s);
                       }});
      keys.emplace_back(choice.label(), count);
    }
  }
  const std::vector<CellRuns> results = run_cells(cells, train_spec, dataset);

  Json rows = Json::array();
  Json row_seconds = Json::array();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::vector<double> tests = test_metrics(results[c].runs);
    const Summary t = summarize(tests);
    Json row;
    row["model"] = keys[c].first;
    row["per_class"] = keys[c].second;
    row["test_mean"] = t.mean;
    row["test_std"] = t.std;
    row["tests"] = tests;
    rows.push_back(row);
    row_seconds.push_back(results[c].seconds);
  }
  report.body["results"]["rows"] = rows;
  report.timing["run_seconds"] = row_seconds;
  report.timing["total_seconds"] = seconds_since(start);
  return report;
}

Report cmd_depth(const DataSource& source, const TrainSpec& train_spec, const DepthOptions& options) {
  if (options.hidden_layers.empty() || options.models.empty()) throw ConfigError("depth needs depths and models");
  const auto start = Clock::now();
  const Dataset dataset = load_source(source);

  Report report;
  report.body = header("depth", source, dataset);
  report.body["config"]["models"] = options.models;
  report.body["config"]["hidden_layers"] = options.hidden_layers;
  report.body["config"]["hidden_dim"] = options.hidden_dim;
  report.body["config"]["train"] = to_json(train_spec);

  const ModelInputs sym = prepare_inputs(dataset, Normalization::symmetric);
  const ModelInputs rw = prepare_inputs(dataset, Normalization::random_walk);
  std::vector<Cell> cells;
  std::vector<std::pair<std::string, int>> keys;
  for (const auto& label : options.models) {
    if (label != "gcn" && label != "sage") throw ConfigError("depth compares gcn and sage only");
    for (int hidden : options.hidden_layers) {
      if (hidden < 0) throw ConfigError("hidden layer count must be >= 0");
      ModelChoice choice;
      choice.model = label;
      choice.layers = hidden + 1;
      choice.hidden_dim = options.hidden_dim;
      const ModelSpec spec = choice.to_spec(dataset.task);
      spec.validate(dataset.num_classes());
      cells.push_back({spec, spec.normalization == Normalization::symmetric ? &sym : &rw, {}});
      keys.emplace_back(label, hidden);
    }
  }
  const std::vector<CellRuns> results = run_cells(cells, train_spec, dataset);

  Json rows = Json::array();
  Json row_seconds = Json::array();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const RepeatedResult result = aggregate_runs(results[c].runs);
    const int hidden = keys[c].second;
    std::vector<std::string> dims(static_cast<std::size_t>(hidden), std::to_string(options.hidden_dim));
    dims.push_back(std::to_string(dataset.num_classes()));
    Json row;
    row["model"] = keys[c].first;
    row["hidden_layers"] = hidden;
    row["dims"] = join(dims, 'x');
    row["spec"] = to_json(cells[c].spec);
    row["test_of_best"] = result.best_test();
    row["test_mean"] = result.mean_test;
    row["test_std"] = result.std_test;
    rows.push_back(row);
    row_seconds.push_back(results[c].seconds);
  }
  report.body["results"]["rows"] = rows;
  report.timing["run_seconds"] = row_seconds;
  report.timing["total_seconds"] = seconds_since(start);
  return report;
}

std::string sweep_csv(const Json& body) {
  std::ostringstream os;
  os << "K,r,val_mean,val_std,test_mean,test_std,best_val,test_of_best\n";
  for (const auto& c : body.at("results").at("cells")) {
    os << c["K"] << ',' << c["r"] << ',' << num(c["val_mean"]) << ',' << num(c["val_std"]) << ','
       << num(c["test_mean"]) << ',' << num(c["test_std"]) << ',' << num(c["best_val"]) << ','
       << num(c["test_of_best"]) << '\n';
  }
  return os.str();
}

std::string perturb_csv(const Json& body) {
  std::ostringstream os;
  os << "model,fraction,test_mean,test_std,attention_per_power,attention_mass_power_ge_2\n";
  for (const auto& row : body.at("results").at("rows")) {
    std::string per_power;
    if (!row["attention_per_power"].is_null())
      per_power = join(row["attention_per_power"].get<std::vector<double>>(), ';');
    os << row["model"].get<std::string>() << ',' << num(row["fraction"]) << ',' << num(row["test_mean"]) << ','
       << num(row["test_std"]) << ',' << per_power << ',' << num(row["attention_mass_power_ge_2"]) << '\n';
  }
  return os.str();
}

std::string scarcity_csv(const Json& body) {
  std::ostringstream os;
  os << "model,per_class,test_mean,test_std\n";
  for (const auto& row : body.at("results").at("rows")) {
    os << row["model"].get<std::string>() << ',' << row["per_class"] << ',' << num(row["test_mean"]) << ','
       << num(row["test_std"]) << '\n';
  }
  return os.str();
}

std::string depth_csv(const Json& body) {
  std::ostringstream os;
  os << "model,hidden_layers,dims,test_of_best,test_mean,test_std\n";
  for (const auto& row : body.at("results").at("rows")) {
    os << row["model"].get<std::string>() << ',' << row["hidden_layers"] << ','
       << row["dims"].get<std::string>() << ',' << num(row["test_of_best"]) << ',' << num(row["test_mean"])
       << ',' << num(row["test_std"]) << '\n';
  }
  return os.str();
}

}  // namespace ngcn::experiments
