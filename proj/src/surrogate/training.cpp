#include "gridfrt/surrogate/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gridfrt/format.hpp"
#include "gridfrt/grid_io.hpp"
#include "gridfrt/surrogate/metrics.hpp"

namespace gridfrt::surrogate {

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::LinReg: return "linreg";
    case ModelKind::Gbt: return "gbt";
    case ModelKind::Tag: return "tag";
    case ModelKind::TagReg: return "tag_reg";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view s) {
  for (ModelKind k : {ModelKind::LinReg, ModelKind::Gbt, ModelKind::Tag, ModelKind::TagReg}) {
    if (s == to_string(k)) return k;
  }
  throw GridError("unknown model kind '" + std::string(s) + "' (expected linreg, gbt, tag or tag_reg)");
}

std::string_view display_name(ModelKind k) {
  switch (k) {
    case ModelKind::LinReg: return "linreg";
    case ModelKind::Gbt: return "GBT";
    case ModelKind::Tag: return "TAG";
    case ModelKind::TagReg: return "TAGreg";
  }
  return "?";
}

std::unique_ptr<Model> model_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "linreg") return std::make_unique<LinearRegression>(LinearRegression::from_json(j));
  if (kind == "gbt") return std::make_unique<GradientBoosting>(GradientBoosting::from_json(j));
  if (kind == "tag" || kind == "tag_reg") return std::make_unique<TagModel>(TagModel::from_json(j));
  throw GridError("unknown model kind '" + kind + "'");
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"gbt",
           {{"n_trees", c.gbt.n_trees},
            {"max_depth", c.gbt.max_depth},
            {"learning_rate", c.gbt.learning_rate},
            {"min_samples_leaf", c.gbt.min_samples_leaf}}},
          {"tag", tag_config_to_json(c.tag)},
          {"tag_reg", tag_config_to_json(c.tag_reg)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("gbt")) {
    const auto& g = j.at("gbt");
    c.gbt.n_trees = g.value("n_trees", c.gbt.n_trees);
    c.gbt.max_depth = g.value("max_depth", c.gbt.max_depth);
    c.gbt.learning_rate = g.value("learning_rate", c.gbt.learning_rate);
    c.gbt.min_samples_leaf = g.value("min_samples_leaf", c.gbt.min_samples_leaf);
  }
  if (j.contains("tag")) c.tag = tag_config_from_json(j.at("tag"));
  if (j.contains("tag_reg")) c.tag_reg = tag_config_from_json(j.at("tag_reg"));
  return c;
}

std::unique_ptr<Model> train_model(ModelKind kind, const std::vector<DatasetRecord>& train,
                                   const std::vector<DatasetRecord>& val, const TrainConfig& cfg,
                                   std::uint64_t seed, std::vector<EpochRecord>* history) {
  if (train.empty()) throw std::invalid_argument("empty training set");
  switch (kind) {
    case ModelKind::LinReg: {
      const auto [x, y] = pooled_rows(train);
      return std::make_unique<LinearRegression>(LinearRegression::fit(x, y));
    }
    case ModelKind::Gbt: {
      const auto [x, y] = pooled_rows(train);
      return std::make_unique<GradientBoosting>(GradientBoosting::fit(x, y, cfg.gbt));
    }
    case ModelKind::Tag: return std::make_unique<TagModel>(train_tag(train, val, cfg.tag, seed, "tag", history));
    case ModelKind::TagReg:
      return std::make_unique<TagModel>(train_tag(train, val, cfg.tag_reg, seed, "tag_reg", history));
  }
  throw std::logic_error("unhandled model kind");
}

Metrics evaluate(const Model& model, std::span<const DatasetRecord> records) {
  std::vector<double> y;
  std::vector<double> y_hat;
  for (const auto& r : records) {
    const Eigen::VectorXd p = model.predict(r);
    for (int i = 0; i < r.size(); ++i) {
      if (!r.mask[i]) continue;
      y.push_back(r.labels(i));
      y_hat.push_back(p(i));
    }
  }
  if (y.size() < 2) throw std::invalid_argument("metrics need at least two labelled buses");
  // Constant labels or predictions leave R^2 / rho undefined; report NaN
  // instead of aborting the whole run.
  const auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Metrics m;
  m.n = y.size();
  m.r2 = constant(y) ? nan : r2_score(y, y_hat);
  m.rho = constant(y) || constant(y_hat) ? nan : spearman_rho(y, y_hat);
  m.mse = mean_squared_error(y, y_hat);
  return m;
}

namespace {

std::pair<Metrics, Metrics> mean_and_std(const std::vector<Metrics>& runs) {
  Metrics mean;
  Metrics sd;
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    mean.r2 += r.r2 / n;
    mean.rho += r.rho / n;
    mean.mse += r.mse / n;
  }
  mean.n = runs.empty() ? 0 : runs.front().n;
  if (runs.size() > 1) {
    for (const auto& r : runs) {
      sd.r2 += (r.r2 - mean.r2) * (r.r2 - mean.r2);
      sd.rho += (r.rho - mean.rho) * (r.rho - mean.rho);
      sd.mse += (r.mse - mean.mse) * (r.mse - mean.mse);
    }
    sd.r2 = std::sqrt(sd.r2 / (n - 1.0));
    sd.rho = std::sqrt(sd.rho / (n - 1.0));
    sd.mse = std::sqrt(sd.mse / (n - 1.0));
  }
  sd.n = mean.n;
  return {mean, sd};
}

}  // namespace

std::vector<ReportRow> generalization_report(std::span<const ModelKind> kinds,
                                             const std::vector<DatasetRecord>& train,
                                             const std::vector<DatasetRecord>& val,
                                             const std::vector<DatasetRecord>& test,
                                             const std::vector<DatasetRecord>& case_records,
                                             const TrainConfig& cfg, std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw std::invalid_argument("at least one training seed is required");
  std::vector<ReportRow> rows;
  for (ModelKind kind : kinds) {
    ReportRow row;
    row.kind = kind;
    const std::size_t repeats = is_stochastic(kind) ? seeds.size() : 1;
    for (std::size_t s = 0; s < repeats; ++s) {
      const auto model = train_model(kind, train, val, cfg, seeds[s]);
      row.test_runs.push_back(evaluate(*model, test));
      row.case_runs.push_back(evaluate(*model, case_records));
    }
    auto [tm, ts] = mean_and_std(row.test_runs);
    auto [cm, cs] = mean_and_std(row.case_runs);
    row.test_mean = tm;
    row.case_mean = cm;
    if (is_stochastic(kind)) {
      row.test_std = ts;
      row.case_std = cs;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_report_csv(const std::filesystem::path& path, std::span<const ReportRow> rows) {
  std::ostringstream os;
  os << "model,test_r2,test_r2_std,case_r2,case_r2_std,test_rho,test_rho_std,case_rho,case_rho_std\n";
  auto opt = [](const std::optional<Metrics>& m, double Metrics::*field) {
    return m ? fmt_num((*m).*field) : std::string();
  };
  for (const auto& r : rows) {
    os << display_name(r.kind) << ',' << fmt_num(r.test_mean.r2) << ',' << opt(r.test_std, &Metrics::r2) << ','
       << fmt_num(r.case_mean.r2) << ',' << opt(r.case_std, &Metrics::r2) << ',' << fmt_num(r.test_mean.rho) << ','
       << opt(r.test_std, &Metrics::rho) << ',' << fmt_num(r.case_mean.rho) << ',' << opt(r.case_std, &Metrics::rho)
       << '\n';
  }
  write_text_file(path, os.str());
}

}  // namespace gridfrt::surrogate
