#include "gridfrt/surrogate/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "gridfrt/grid_io.hpp"
#include "gridfrt/surrogate/features.hpp"

namespace gridfrt::surrogate {

int DatasetRecord::labelled() const {
  return static_cast<int>(std::count(mask.begin(), mask.end(), char{1}));
}

void DatasetRecord::validate() const {
  const int n = size();
  if (features.cols() != kNumFeatures) throw GridError(grid_id + ": expected 8 features per bus");
  if (labels.size() != n || static_cast<int>(mask.size()) != n) throw GridError(grid_id + ": row count mismatch");
  if (labelled() != n - 1) throw GridError(grid_id + ": mask must exclude exactly one bus");
  for (int i = 0; i < n; ++i) {
    if (mask[i] && !(labels(i) >= 0.0 && labels(i) <= 1.0)) throw GridError(grid_id + ": label outside [0, 1]");
  }
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw GridError(grid_id + ": edge endpoint out of range");
  }
}

DatasetRecord make_record(std::string grid_id, const Grid& grid, std::span<const std::optional<double>> labels) {
  if (static_cast<int>(labels.size()) != grid.size()) throw GridError("one label slot per bus required");
  DatasetRecord r;
  r.grid_id = std::move(grid_id);
  for (const auto& l : grid.lines) r.edges.emplace_back(l.from, l.to);
  r.features = build_features(grid);
  r.labels = Eigen::VectorXd::Zero(grid.size());
  r.mask.assign(grid.size(), 0);
  for (const auto& b : grid.buses) {
    const bool slack = b.kind == BusKind::Slack;
    if (slack == labels[b.id].has_value()) {
      throw GridError(r.grid_id + ": bus " + std::to_string(b.id) +
                      (slack ? " is the slack and must be unlabelled" : " has no label"));
    }
    if (!slack) {
      r.labels(b.id) = *labels[b.id];
      r.mask[b.id] = 1;
    }
  }
  r.validate();
  return r;
}

namespace {

nlohmann::json record_to_json(const DatasetRecord& r) {
  nlohmann::json j;
  j["grid_id"] = r.grid_id;
  auto edges = nlohmann::json::array();
  for (const auto& [a, b] : r.edges) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  auto feats = nlohmann::json::array();
  for (int i = 0; i < r.size(); ++i) {
    std::vector<double> row(r.features.cols());
    for (Eigen::Index c = 0; c < r.features.cols(); ++c) row[c] = r.features(i, c);
    feats.push_back(row);
  }
  j["features"] = std::move(feats);
  j["labels"] = std::vector<double>(r.labels.data(), r.labels.data() + r.labels.size());
  std::vector<int> mask(r.mask.begin(), r.mask.end());
  j["mask"] = mask;
  return j;
}

DatasetRecord record_from_json(const nlohmann::json& j) {
  DatasetRecord r;
  r.grid_id = j.at("grid_id").get<std::string>();
  for (const auto& e : j.at("edges")) r.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  const auto& feats = j.at("features");
  const auto n = static_cast<Eigen::Index>(feats.size());
  r.features.resize(n, kNumFeatures);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = feats[i].get<std::vector<double>>();
    if (row.size() != static_cast<std::size_t>(kNumFeatures)) throw GridError(r.grid_id + ": bad feature row");
    for (int c = 0; c < kNumFeatures; ++c) r.features(i, c) = row[c];
  }
  const auto labels = j.at("labels").get<std::vector<double>>();
  r.labels = Eigen::Map<const Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  for (int m : j.at("mask").get<std::vector<int>>()) r.mask.push_back(m ? 1 : 0);
  r.validate();
  return r;
}

}  // namespace

void write_jsonl(const std::filesystem::path& path, std::span<const DatasetRecord> records) {
  std::ostringstream os;
  for (const auto& r : records) os << record_to_json(r).dump() << '\n';
  write_text_file(path, os.str());
}

std::vector<DatasetRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw GridError("cannot read dataset " + path.string());
  std::vector<DatasetRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw GridError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

Split split_by_grid(int n_records, std::uint64_t seed, double val_frac, double test_frac) {
  if (n_records < 0 || val_frac < 0.0 || test_frac < 0.0 || val_frac + test_frac >= 1.0) {
    throw std::invalid_argument("invalid split fractions");
  }
  std::vector<int> idx(n_records);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (int i = n_records - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[i], idx[j]);
  }
  int n_test = static_cast<int>(std::lround(n_records * test_frac));
  int n_val = static_cast<int>(std::lround(n_records * val_frac));
  if (n_records >= 3) {
    n_test = std::max(n_test, 1);
    n_val = std::max(n_val, 1);
  }
  Split s;
  s.test.assign(idx.begin(), idx.begin() + n_test);
  s.val.assign(idx.begin() + n_test, idx.begin() + n_test + n_val);
  s.train.assign(idx.begin() + n_test + n_val, idx.end());
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

std::vector<DatasetRecord> select(std::span<const DatasetRecord> records, std::span<const int> indices) {
  std::vector<DatasetRecord> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(records[i]);
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> pooled_rows(std::span<const DatasetRecord> records) {
  int rows = 0;
  for (const auto& r : records) rows += r.labelled();
  Eigen::MatrixXd x(rows, kNumFeatures);
  Eigen::VectorXd y(rows);
  int k = 0;
  for (const auto& r : records) {
    for (int i = 0; i < r.size(); ++i) {
      if (!r.mask[i]) continue;
      x.row(k) = r.features.row(i);
      y(k) = r.labels(i);
      ++k;
    }
  }
  return {std::move(x), std::move(y)};
}

}  // namespace gridfrt::surrogate
