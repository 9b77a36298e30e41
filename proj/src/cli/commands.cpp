#include "gridfrt/cli/commands.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <sstream>

#include "gridfrt/cli/case_adapter.hpp"
#include "gridfrt/format.hpp"
#include "gridfrt/grid_io.hpp"
#include "gridfrt/parallel.hpp"
#include "gridfrt/surrogate/dataset.hpp"
#include "gridfrt/surrogate/metrics.hpp"

namespace gridfrt::cli {

namespace fs = std::filesystem;

namespace {

RunConfig resolve_config(const CommonOptions& o) { return o.config ? load_config(*o.config) : RunConfig{}; }

/// Refuses to reuse a run directory without --force; with --force the
/// artifacts listed by the previous manifest are removed first.
void prepare_out(const CommonOptions& o) {
  if (o.out.empty()) throw UsageError("--out is required");
  const fs::path manifest = o.out / "manifest.json";
  if (fs::exists(manifest)) {
    if (!o.force) throw UsageError(o.out.string() + " already holds a run; pass --force to overwrite it");
    const auto old = read_json_file(manifest);
    for (const auto& a : old.value("artifacts", nlohmann::json::array())) fs::remove(o.out / a.get<std::string>());
    fs::remove(manifest);
  }
  fs::create_directories(o.out);
}

std::string grid_file_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "grid_%04d", id);
  return buf;
}

fs::path op_path_for(const fs::path& grid_path) {
  fs::path p = grid_path;
  p.replace_extension(".op.json");
  return p;
}

RunManifest new_manifest(const std::string& command, const CommonOptions& o, const RunConfig& cfg) {
  RunManifest m;
  m.command = command;
  m.seed = o.seed;
  m.config = config_to_json(cfg);
  return m;
}

void log(const std::string& cmd, const std::string& msg) { std::cerr << "[" << cmd << "] " << msg << '\n'; }

std::optional<NormalFormLabel> label_of(const Bus& b) {
  if (b.kind == BusKind::NormalForm && b.params) return b.params->label;
  return std::nullopt;
}

std::string group_of(BusKind kind, const std::optional<NormalFormLabel>& label) {
  return label ? std::string(to_string(*label)) : std::string(to_string(kind));
}

}  // namespace

std::vector<std::pair<int, fs::path>> list_grids(const fs::path& dir) {
  fs::path root = dir;
  if (fs::is_directory(dir / "grids")) root = dir / "grids";
  if (!fs::is_directory(root)) throw GridError("grid directory " + dir.string() + " does not exist");
  static const std::regex pattern(R"(grid_(\d+)\.json)");
  std::vector<std::pair<int, fs::path>> out;
  for (const auto& entry : fs::directory_iterator(root)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) out.emplace_back(std::stoi(m[1]), entry.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw GridError("no grid_NNNN.json files in " + root.string());
  return out;
}

void cmd_generate(const CommonOptions& o, std::optional<int> n_grids) {
  RunConfig cfg = resolve_config(o);
  if (n_grids) {
    if (*n_grids < 1) throw UsageError("--n-grids must be positive");
    cfg.n_grids = *n_grids;
  }
  prepare_out(o);

  struct Slot {
    std::optional<synthesis::SynthesizedGrid> grid;
    std::vector<synthesis::Rejection> trace;
    std::string error;
  };
  std::vector<Slot> slots(cfg.n_grids);
  parallel_for(slots.size(), o.jobs, [&](std::size_t i) {
    try {
      slots[i].grid = synthesis::synthesize_grid(cfg.synthesis, synthesis::derive_seed(o.seed, i));
      slots[i].trace = slots[i].grid->trace;
    } catch (const synthesis::SynthesisError& e) {
      slots[i].trace = e.trace();
      slots[i].error = e.what();
    }
  });

  RunManifest m = new_manifest("generate", o, cfg);
  std::ostringstream rej;
  rej << "grid_id,attempt,seed,stage,reason\n";
  int accepted = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    for (const auto& r : slots[i].trace) {
      rej << i << ',' << r.attempt << ',' << r.seed << ',' << r.stage << ",\"" << r.reason << "\"\n";
    }
    if (!slots[i].grid) {
      rej << i << ",-1,," << "exhausted" << ",\"" << slots[i].error << "\"\n";
      log("generate", "grid " + std::to_string(i) + " rejected: " + slots[i].error);
      continue;
    }
    const std::string name = grid_file_name(static_cast<int>(i));
    write_grid(o.out / "grids" / (name + ".json"), slots[i].grid->grid);
    write_json_file(o.out / "grids" / (name + ".op.json"), operating_point_to_json(slots[i].grid->op));
    m.artifacts.push_back("grids/" + name + ".json");
    m.artifacts.push_back("grids/" + name + ".op.json");
    ++accepted;
  }
  write_text_file(o.out / "rejections.csv", rej.str());
  m.artifacts.push_back("rejections.csv");
  write_manifest(o.out, m);
  log("generate", std::to_string(accepted) + "/" + std::to_string(cfg.n_grids) + " grids accepted");
  if (accepted == 0) throw NumericalError("no grid passed validation");
}

void cmd_assess(const CommonOptions& o, const fs::path& grids, std::optional<long> n_samples,
                const std::optional<fs::path>& curve_file) {
  RunConfig cfg = resolve_config(o);
  if (n_samples) {
    if (*n_samples < 1) throw UsageError("--samples must be positive");
    cfg.assess.n_samples = *n_samples;
  }
  if (curve_file) cfg.curve = frt::read_curve(*curve_file);
  cfg.curve.validate();
  const auto files = list_grids(grids);
  prepare_out(o);

  std::vector<frt::ResultRow> rows;
  std::ostringstream samples;
  samples << "grid_id,bus_id,bus_kind,sample_idx,v_mag,v_angle,freq_offset,outcome,delta_p,delta_q,t_stop\n";
  std::vector<std::string> failed;
  for (std::size_t gi = 0; gi < files.size(); ++gi) {
    const auto& [id, path] = files[gi];
    const fs::path op_path = op_path_for(path);
    if (!fs::exists(op_path)) {
      failed.push_back(path.filename().string() + ": missing operating point sidecar");
      log("assess", failed.back());
      continue;
    }
    Grid grid;
    OperatingPoint op;
    try {
      grid = read_grid(path);
      op = operating_point_from_json(read_json_file(op_path), grid.size());
    } catch (const GridError& e) {
      failed.push_back(path.filename().string() + ": " + e.what());
      log("assess", failed.back());
      continue;
    }
    const auto assessed = frt::assess_grid(grid, op, cfg.curve, cfg.assess, o.jobs);
    for (const auto& a : assessed) {
      const Bus& b = grid.buses[a.result.bus_id];
      rows.push_back({id, b.kind, label_of(b), a.result});
      for (const auto& s : a.samples) {
        samples << id << ',' << b.id << ',' << group_of(b.kind, label_of(b)) << ',' << s.sample_idx << ','
                << fmt_num(s.spec.v_mag) << ',' << fmt_num(s.spec.v_angle) << ',' << fmt_num(s.spec.freq_offset)
                << ',' << frt::to_string(s.outcome) << ',' << fmt_num(s.delta_p) << ',' << fmt_num(s.delta_q) << ','
                << fmt_num(s.t_stop) << '\n';
      }
    }
    log("assess", "grid " + std::to_string(gi + 1) + "/" + std::to_string(files.size()) + " done");
  }
  if (rows.empty()) throw GridError("no grid could be assessed");

  frt::write_results_csv(o.out / "results.csv", rows);
  write_text_file(o.out / "samples.csv", samples.str());

  // Per-group histogram of bus probabilities, 10 bins on [0, 1].
  std::map<std::string, std::array<long, 10>> hist;
  std::map<std::string, std::vector<double>> by_group;
  std::map<std::string, long> outcomes;
  for (const auto& r : rows) {
    const std::string g = group_of(r.kind, r.label);
    auto& h = hist[g];
    h[std::min(9, static_cast<int>(r.result.p_frt * 10.0))] += 1;
    by_group[g].push_back(r.result.p_frt);
  }
  std::ostringstream hs;
  hs << "group,bin_lo,bin_hi,count\n";
  for (const auto& [g, h] : hist) {
    for (int k = 0; k < 10; ++k) hs << g << ',' << fmt_num(k / 10.0) << ',' << fmt_num((k + 1) / 10.0) << ',' << h[k] << '\n';
  }
  write_text_file(o.out / "histogram.csv", hs.str());

  nlohmann::json summary;
  summary["n_grids"] = files.size() - failed.size();
  summary["n_buses"] = rows.size();
  summary["failed_grids"] = failed;
  long init_failed = 0, integ_failed = 0, total = 0, survived = 0;
  for (const auto& r : rows) {
    init_failed += r.result.n_init_failed;
    integ_failed += r.result.n_integ_failed;
    total += r.result.v_total;
    survived += r.result.v_star;
  }
  summary["samples"] = {{"total", total},
                        {"survived", survived},
                        {"init_failed", init_failed},
                        {"integration_failed", integ_failed}};
  for (const auto& [g, v] : by_group) {
    double mean = 0.0;
    for (double x : v) mean += x / static_cast<double>(v.size());
    summary["mean_p_frt"][g] = {{"n_buses", v.size()}, {"mean", mean}};
  }
  if (by_group.count("NF3") && by_group.count("NF1")) {
    const auto t = frt::mann_whitney_greater(by_group["NF3"], by_group["NF1"]);
    summary["nf3_vs_nf1"] = {{"mean_nf3", t.mean_a}, {"mean_nf1", t.mean_b}, {"u", t.u},
                             {"z", t.z},          {"p_value", t.p_value}, {"nf3_higher_at_0.05", t.p_value < 0.05}};
  }
  write_json_file(o.out / "summary.json", summary);

  RunManifest m = new_manifest("assess", o, cfg);
  m.inputs = {{"grids", grids.string()}};
  m.artifacts = {"results.csv", "samples.csv", "histogram.csv", "summary.json"};
  write_manifest(o.out, m);
}

void cmd_adapt_case(const CommonOptions& o, const fs::path& case_file) {
  const RunConfig cfg = resolve_config(o);
  const TestCase tc = read_case(case_file);
  const AdaptedCase ac = adapt_case(tc, cfg.synthesis, cfg.transformer_length_km, o.seed);
  prepare_out(o);
  const std::string name = grid_file_name(0);
  write_grid(o.out / "grids" / (name + ".json"), ac.grid);
  write_json_file(o.out / "grids" / (name + ".op.json"), operating_point_to_json(ac.op));
  std::ostringstream map;
  map << "bus_id,original_id,bus_kind,nf_label\n";
  for (const auto& b : ac.grid.buses) {
    const auto label = label_of(b);
    map << b.id << ',' << ac.original_ids[b.id] << ',' << to_string(b.kind) << ','
        << (label ? std::string(to_string(*label)) : std::string()) << '\n';
  }
  write_text_file(o.out / "bus_map.csv", map.str());
  RunManifest m = new_manifest("adapt-case", o, cfg);
  m.inputs = {{"case", case_file.string()}};
  m.artifacts = {"grids/" + name + ".json", "grids/" + name + ".op.json", "bus_map.csv"};
  write_manifest(o.out, m);
  int non_slack = 0;
  for (const auto& b : ac.grid.buses) non_slack += b.kind != BusKind::Slack;
  log("adapt-case", std::to_string(ac.grid.size()) + " buses, " + std::to_string(non_slack) + " non-slack");
}

void cmd_dataset(const CommonOptions& o, const fs::path& grids, const fs::path& results) {
  const RunConfig cfg = resolve_config(o);
  const auto files = list_grids(grids);
  const auto rows = frt::read_results_csv(results);
  std::map<int, std::map<int, double>> labels;
  for (const auto& r : rows) labels[r.grid_id][r.result.bus_id] = r.result.p_frt;

  std::vector<surrogate::DatasetRecord> records;
  for (const auto& [id, path] : files) {
    const auto it = labels.find(id);
    if (it == labels.end()) {
      log("dataset", path.filename().string() + " has no results, skipped");
      continue;
    }
    const Grid grid = read_grid(path);
    std::vector<std::optional<double>> y(grid.size());
    for (const auto& [bus, p] : it->second) {
      if (bus < 0 || bus >= grid.size()) throw GridError("results reference bus " + std::to_string(bus) + " outside grid");
      y[bus] = p;
    }
    records.push_back(surrogate::make_record(grid_file_name(id), grid, y));
  }
  if (records.empty()) throw GridError("no grid has results; run assess first");
  prepare_out(o);
  surrogate::write_jsonl(o.out / "dataset.jsonl", records);
  RunManifest m = new_manifest("dataset", o, cfg);
  m.inputs = {{"grids", grids.string()}, {"results", results.string()}};
  m.artifacts = {"dataset.jsonl"};
  write_manifest(o.out, m);
  log("dataset", std::to_string(records.size()) + " records");
}

namespace {

std::vector<surrogate::ModelKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<surrogate::ModelKind> kinds;
  if (names.empty()) {
    return {surrogate::ModelKind::LinReg, surrogate::ModelKind::Gbt, surrogate::ModelKind::Tag,
            surrogate::ModelKind::TagReg};
  }
  for (const auto& n : names) {
    try {
      kinds.push_back(surrogate::model_kind_from_string(n));
    } catch (const GridError& e) {
      throw UsageError(e.what());
    }
  }
  return kinds;
}

std::vector<surrogate::DatasetRecord> load_dataset(const fs::path& p) {
  const fs::path file = fs::is_directory(p) ? p / "dataset.jsonl" : p;
  if (!fs::exists(file)) throw GridError("dataset " + file.string() + " not found; run the dataset command first");
  return surrogate::read_jsonl(file);
}

nlohmann::json split_to_json(const surrogate::Split& s, const std::vector<surrogate::DatasetRecord>& recs) {
  auto ids = [&](const std::vector<int>& idx) {
    std::vector<std::string> out;
    for (int i : idx) out.push_back(recs[i].grid_id);
    return out;
  };
  return {{"train", ids(s.train)}, {"val", ids(s.val)}, {"test", ids(s.test)}};
}

surrogate::Split checked_split(const RunConfig& cfg, std::uint64_t seed, int n) {
  const auto split = surrogate::split_by_grid(n, seed, cfg.val_fraction, cfg.test_fraction);
  if (split.train.empty() || split.val.empty() || split.test.empty()) {
    throw GridError("dataset too small for a train/val/test split (" + std::to_string(n) + " grids)");
  }
  return split;
}

}  // namespace

void cmd_train(const CommonOptions& o, const fs::path& dataset, const std::vector<std::string>& models) {
  const RunConfig cfg = resolve_config(o);
  const auto kinds = parse_kinds(models);
  const auto records = load_dataset(dataset);
  const auto split = checked_split(cfg, o.seed, static_cast<int>(records.size()));
  const auto train = surrogate::select(records, split.train);
  const auto val = surrogate::select(records, split.val);
  const auto test = surrogate::select(records, split.test);
  prepare_out(o);

  RunManifest m = new_manifest("train", o, cfg);
  m.inputs = {{"dataset", dataset.string()}};
  std::ostringstream metrics;
  metrics << "model,split,r2,rho,mse,n\n";
  for (auto kind : kinds) {
    std::vector<surrogate::EpochRecord> history;
    const auto model = surrogate::train_model(kind, train, val, cfg.train, o.seed, &history);
    const std::string name(surrogate::to_string(kind));
    write_json_file(o.out / "models" / (name + ".json"), model->to_json());
    m.artifacts.push_back("models/" + name + ".json");
    if (!history.empty()) {
      std::ostringstream h;
      h << "epoch,train_mse,val_mse\n";
      for (const auto& e : history) h << e.epoch << ',' << fmt_num(e.train_mse) << ',' << fmt_num(e.val_mse) << '\n';
      write_text_file(o.out / ("history_" + name + ".csv"), h.str());
      m.artifacts.push_back("history_" + name + ".csv");
    }
    for (const auto& [split_name, set] : {std::pair{"train", &train}, std::pair{"val", &val}, std::pair{"test", &test}}) {
      const auto mt = surrogate::evaluate(*model, *set);
      metrics << surrogate::display_name(kind) << ',' << split_name << ',' << fmt_num(mt.r2) << ',' << fmt_num(mt.rho)
              << ',' << fmt_num(mt.mse) << ',' << mt.n << '\n';
    }
    log("train", name + " done");
  }
  write_text_file(o.out / "metrics.csv", metrics.str());
  write_json_file(o.out / "split.json", split_to_json(split, records));
  m.artifacts.push_back("metrics.csv");
  m.artifacts.push_back("split.json");
  write_manifest(o.out, m);
}

void cmd_eval(const CommonOptions& o, const fs::path& dataset, const fs::path& case_dataset,
              const std::vector<std::string>& models) {
  const RunConfig cfg = resolve_config(o);
  const auto kinds = parse_kinds(models);
  const auto records = load_dataset(dataset);
  const auto case_records = load_dataset(case_dataset);
  const auto split = checked_split(cfg, o.seed, static_cast<int>(records.size()));
  prepare_out(o);
  const auto rows = surrogate::generalization_report(kinds, surrogate::select(records, split.train),
                                                     surrogate::select(records, split.val),
                                                     surrogate::select(records, split.test), case_records, cfg.train,
                                                     cfg.train_seeds);
  surrogate::write_report_csv(o.out / "generalization.csv", rows);
  std::ostringstream runs;
  runs << "model,run,test_r2,test_rho,case_r2,case_rho\n";
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.test_runs.size(); ++k) {
      runs << surrogate::display_name(r.kind) << ',' << k << ',' << fmt_num(r.test_runs[k].r2) << ','
           << fmt_num(r.test_runs[k].rho) << ',' << fmt_num(r.case_runs[k].r2) << ',' << fmt_num(r.case_runs[k].rho)
           << '\n';
    }
  }
  write_text_file(o.out / "runs.csv", runs.str());
  RunManifest m = new_manifest("eval", o, cfg);
  m.inputs = {{"dataset", dataset.string()}, {"case_dataset", case_dataset.string()}};
  m.artifacts = {"generalization.csv", "runs.csv"};
  write_manifest(o.out, m);
}

void cmd_plotdata(const CommonOptions& o, const fs::path& assess_dir, const std::optional<fs::path>& train_dir,
                  const std::optional<fs::path>& dataset) {
  const RunConfig cfg = resolve_config(o);
  const fs::path results = assess_dir / "results.csv";
  const fs::path samples = assess_dir / "samples.csv";
  if (!fs::exists(results) || !fs::exists(samples)) {
    throw GridError("assessment outputs missing in " + assess_dir.string() + "; run assess first");
  }
  if (train_dir.has_value() != dataset.has_value()) throw UsageError("--train and --dataset must be given together");
  const auto rows = frt::read_results_csv(results);
  prepare_out(o);
  RunManifest m = new_manifest("plotdata", o, cfg);
  m.inputs = {{"assess", assess_dir.string()}};

  std::ostringstream hist;
  hist << "grid_id,bus_id,group,p_frt,std_err\n";
  for (const auto& r : rows) {
    hist << r.grid_id << ',' << r.result.bus_id << ',' << group_of(r.kind, r.label) << ',' << fmt_num(r.result.p_frt)
         << ',' << fmt_num(r.result.std_err) << '\n';
  }
  write_text_file(o.out / "histogram.csv", hist.str());
  m.artifacts.push_back("histogram.csv");

  // ΔP/ΔQ outcome map from the per-sample log.
  std::ifstream is(samples);
  std::string line;
  std::getline(is, line);
  std::ostringstream outcomes;
  outcomes << "grid_id,bus_id,group,delta_p,delta_q,survived\n";
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) f.push_back(c);
    if (f.size() != 11) throw GridError(samples.string() + ": malformed row");
    if (f[7] == "init_failed") continue;  // no post-clearance state exists
    outcomes << f[0] << ',' << f[1] << ',' << f[2] << ',' << f[8] << ',' << f[9] << ',' << (f[7] == "survived" ? 1 : 0)
             << '\n';
  }
  write_text_file(o.out / "outcomes.csv", outcomes.str());
  m.artifacts.push_back("outcomes.csv");

  if (train_dir) {
    const auto records = load_dataset(*dataset);
    const auto split_json = read_json_file(*train_dir / "split.json");
    const auto test_ids = split_json.at("test").get<std::vector<std::string>>();
    std::vector<std::pair<std::string, std::unique_ptr<surrogate::Model>>> models;
    for (const char* name : {"linreg", "gbt", "tag", "tag_reg"}) {
      const fs::path p = *train_dir / "models" / (std::string(name) + ".json");
      if (fs::exists(p)) models.emplace_back(name, surrogate::model_from_json(read_json_file(p)));
    }
    if (models.empty()) throw GridError("no trained models in " + train_dir->string());
    std::ostringstream sc;
    sc << "grid_id,bus_id,label";
    for (const auto& [name, model] : models) sc << ",pred_" << name;
    sc << '\n';
    for (const auto& rec : records) {
      if (std::find(test_ids.begin(), test_ids.end(), rec.grid_id) == test_ids.end()) continue;
      std::vector<Eigen::VectorXd> preds;
      for (const auto& [name, model] : models) preds.push_back(model->predict(rec));
      for (int i = 0; i < rec.size(); ++i) {
        if (!rec.mask[i]) continue;
        sc << rec.grid_id << ',' << i << ',' << fmt_num(rec.labels(i));
        for (const auto& p : preds) sc << ',' << fmt_num(p(i));
        sc << '\n';
      }
    }
    write_text_file(o.out / "scatter.csv", sc.str());
    m.artifacts.push_back("scatter.csv");
    m.inputs["train"] = train_dir->string();
    m.inputs["dataset"] = dataset->string();
  }
  write_manifest(o.out, m);
}

}  // namespace gridfrt::cli
