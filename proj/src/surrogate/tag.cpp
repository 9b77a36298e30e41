#include "gridfrt/surrogate/tag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gridfrt::surrogate {

GraphOps GraphOps::build(int n, const std::vector<std::pair<int, int>>& edges, int max_hops) {
  if (max_hops < 0) throw std::invalid_argument("hop count must be non-negative");
  GraphOps ops;
  ops.n = n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n) throw std::invalid_argument("edge endpoint out of range");
    if (i == j) continue;
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  Eigen::VectorXd d_inv_sqrt(n);
  for (int i = 0; i < n; ++i) {
    const double deg = a.row(i).sum();
    d_inv_sqrt(i) = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  ops.hop.resize(max_hops + 1);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  for (int z = 1; z <= max_hops; ++z) {
    power = power * a;
    ops.hop[z] = d_inv_sqrt.asDiagonal() * power * d_inv_sqrt.asDiagonal();
  }
  return ops;
}

namespace {

// hop * h with every output entry summed in ascending order of its terms, so
// relabelling the nodes permutes the result bit for bit.
Eigen::MatrixXd propagate(const Eigen::MatrixXd& hop, const Eigen::MatrixXd& h) {
  Eigen::MatrixXd out(hop.rows(), h.cols());
  std::vector<int> nz;
  std::vector<double> terms;
  for (Eigen::Index i = 0; i < hop.rows(); ++i) {
    nz.clear();
    for (Eigen::Index j = 0; j < hop.cols(); ++j) {
      if (hop(i, j) != 0.0) nz.push_back(static_cast<int>(j));
    }
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
      terms.clear();
      for (int j : nz) terms.push_back(hop(i, j) * h(j, c));
      std::sort(terms.begin(), terms.end());
      double sum = 0.0;
      for (double t : terms) sum += t;
      out(i, c) = sum;
    }
  }
  return out;
}

// a * b accumulated row by row in a fixed order; blocked GEMM rounds
// differently depending on where a row sits in the matrix.
Eigen::MatrixXd row_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> br = b;
  Eigen::MatrixXd out(a.rows(), b.cols());
  Eigen::RowVectorXd acc(b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    acc.setZero();
    for (Eigen::Index k = 0; k < a.cols(); ++k) acc += a(i, k) * br.row(k);
    out.row(i) = acc;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd tag_layer(const GraphOps& ops, const Eigen::MatrixXd& x, const std::vector<Eigen::MatrixXd>& theta,
                          const Eigen::RowVectorXd* bias) {
  if (theta.empty()) throw std::invalid_argument("TAG layer needs at least the hop-0 block");
  const int hops = static_cast<int>(theta.size()) - 1;
  if (hops > ops.max_hops()) throw std::invalid_argument("TAG layer uses more hops than the graph operators provide");
  if (x.rows() != ops.n) throw std::invalid_argument("feature rows do not match the graph size");
  for (const auto& t : theta) {
    if (t.rows() != x.cols()) throw std::invalid_argument("feature width does not match the parameter block");
  }
  Eigen::MatrixXd out = row_product(x, theta[0]);
  for (int z = 1; z <= hops; ++z) out += propagate(ops.hop[z], row_product(x, theta[z]));
  if (bias) out.rowwise() += *bias;
  return out;
}

long TagArchitecture::parameter_count() const {
  long count = 0;
  int in = in_features;
  for (int l = 0; l < layers; ++l) {
    count += static_cast<long>(hops + 1) * in * hidden + hidden;
    in = hidden;
  }
  if (dense > 0) {
    count += static_cast<long>(in) * dense + dense;
    in = dense;
  }
  return count + in + 1;
}

TagConfig TagConfig::preset_named(const std::string& name) {
  TagConfig c;
  c.preset = name;
  if (name == "desk" || name == "desk_reg") {
    c.arch = {kNumFeatures, 2, 32, 3, 0, name == "desk" ? 0.35 : 0.43};
    c.batch_graphs = 32;
    c.learning_rate = 1e-2;
  } else if (name == "full" || name == "full_reg") {
    c.arch = {kNumFeatures, 3, 304, 3, 500, name == "full" ? 0.35 : 0.43};
    c.batch_graphs = 700;
    c.learning_rate = 1e-3;
  } else {
    throw GridError("unknown TAG preset '" + name + "'");
  }
  return c;
}

nlohmann::json tag_config_to_json(const TagConfig& c) {
  return {{"preset", c.preset},
          {"layers", c.arch.layers},
          {"hidden", c.arch.hidden},
          {"hops", c.arch.hops},
          {"dense", c.arch.dense},
          {"dropout", c.arch.dropout},
          {"batch_graphs", c.batch_graphs},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay}};
}

TagConfig tag_config_from_json(const nlohmann::json& j) {
  TagConfig c = TagConfig::preset_named(j.value("preset", std::string("desk")));
  c.arch.layers = j.value("layers", c.arch.layers);
  c.arch.hidden = j.value("hidden", c.arch.hidden);
  c.arch.hops = j.value("hops", c.arch.hops);
  c.arch.dense = j.value("dense", c.arch.dense);
  c.arch.dropout = j.value("dropout", c.arch.dropout);
  c.batch_graphs = j.value("batch_graphs", c.batch_graphs);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  if (c.arch.layers < 1 || c.arch.hidden < 1 || c.arch.hops < 0 || c.arch.dense < 0 || c.arch.dropout < 0.0 ||
      c.arch.dropout >= 1.0 || c.batch_graphs < 1 || c.max_epochs < 1 || !(c.learning_rate > 0.0)) {
    throw GridError("invalid TAG configuration");
  }
  return c;
}

namespace {

Eigen::MatrixXd glorot(int in, int out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Eigen::MatrixXd m(in, out);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = u(rng);
  }
  return m;
}

// Forward intermediates of one graph, kept for the backward pass.
struct Tape {
  std::vector<Eigen::MatrixXd> inputs;                   // input of every layer (TAG then dense)
  std::vector<std::vector<Eigen::MatrixXd>> propagated;  // hop[z] * input per TAG layer
  std::vector<Eigen::MatrixXd> pre;                      // pre-activations of hidden layers
  std::vector<Eigen::MatrixXd> drop;                     // dropout scale per hidden layer (empty: none)
  Eigen::VectorXd out;
};

Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(1.0 - p);
  Eigen::MatrixXd m(rows, cols);
  const double scale = 1.0 / (1.0 - p);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = keep(rng) ? scale : 0.0;
  }
  return m;
}

Tape run_forward(const TagNetwork& net, const GraphOps& ops, const Eigen::MatrixXd& x, bool train,
                 std::mt19937_64* rng) {
  const auto& arch = net.arch();
  if (x.cols() != arch.in_features) throw std::invalid_argument("feature width does not match the network");
  if (x.rows() != ops.n) throw std::invalid_argument("feature rows do not match the graph size");
  if (ops.max_hops() < arch.hops) throw std::invalid_argument("graph operators have too few hops");
  const bool use_dropout = train && arch.dropout > 0.0;
  if (use_dropout && !rng) throw std::invalid_argument("dropout needs a random generator");

  Tape tape;
  Eigen::MatrixXd h = x;
  auto activate = [&](Eigen::MatrixXd pre) {
    Eigen::MatrixXd a = pre.cwiseMax(0.0);
    tape.pre.push_back(std::move(pre));
    if (use_dropout) {
      tape.drop.push_back(dropout_mask(a.rows(), a.cols(), arch.dropout, *rng));
      a = a.cwiseProduct(tape.drop.back());
    } else {
      tape.drop.emplace_back();
    }
    return a;
  };
  for (const auto& layer : net.tag) {
    tape.inputs.push_back(h);
    std::vector<Eigen::MatrixXd> prop(layer.theta.size());
    prop[0] = h;
    Eigen::MatrixXd pre = row_product(h, layer.theta[0]);
    for (std::size_t z = 1; z < layer.theta.size(); ++z) {
      prop[z] = propagate(ops.hop[z], h);
      pre += row_product(prop[z], layer.theta[z]);
    }
    pre.rowwise() += layer.b;
    tape.propagated.push_back(std::move(prop));
    h = activate(std::move(pre));
  }
  for (std::size_t d = 0; d < net.dense.size(); ++d) {
    tape.inputs.push_back(h);
    Eigen::MatrixXd pre = row_product(h, net.dense[d].w);
    pre.rowwise() += net.dense[d].b;
    if (d + 1 < net.dense.size()) {
      h = activate(std::move(pre));
    } else {
      tape.out = pre.col(0);
    }
  }
  return tape;
}

void add_block(std::vector<double>& grad, std::size_t& off, const Eigen::MatrixXd& g) {
  for (Eigen::Index i = 0; i < g.size(); ++i) grad[off + i] += g.data()[i];
  off += static_cast<std::size_t>(g.size());
}

}  // namespace

TagNetwork::TagNetwork(const TagArchitecture& arch, std::uint64_t seed) : arch_(arch) {
  if (arch.layers < 1 || arch.hidden < 1 || arch.hops < 0 || arch.in_features < 1) {
    throw std::invalid_argument("invalid TAG architecture");
  }
  std::mt19937_64 rng(seed);
  int in = arch.in_features;
  for (int l = 0; l < arch.layers; ++l) {
    TagLayerParams p;
    for (int z = 0; z <= arch.hops; ++z) p.theta.push_back(glorot(in, arch.hidden, rng));
    p.b = Eigen::RowVectorXd::Zero(arch.hidden);
    tag.push_back(std::move(p));
    in = arch.hidden;
  }
  if (arch.dense > 0) {
    dense.push_back({glorot(in, arch.dense, rng), Eigen::RowVectorXd::Zero(arch.dense)});
    in = arch.dense;
  }
  dense.push_back({glorot(in, 1, rng), Eigen::RowVectorXd::Zero(1)});
}

Eigen::VectorXd TagNetwork::forward(const GraphOps& ops, const Eigen::MatrixXd& x, bool train,
                                    std::mt19937_64* rng) const {
  return run_forward(*this, ops, x, train, rng).out;
}

double TagNetwork::accumulate_gradient(const GraphOps& ops, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const std::vector<char>& mask, std::vector<double>& grad, bool train,
                                       std::mt19937_64* rng) const {
  if (grad.size() != size()) throw std::invalid_argument("gradient buffer has the wrong size");
  const Tape tape = run_forward(*this, ops, x, train, rng);
  Eigen::VectorXd err = tape.out - y;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    if (!mask[i]) err(i) = 0.0;
  }
  const double sse = err.squaredNorm();

  // Offsets of every block in the flat layout.
  std::vector<std::size_t> tag_off;
  std::size_t off = 0;
  for (const auto& layer : tag) {
    tag_off.push_back(off);
    for (const auto& t : layer.theta) off += static_cast<std::size_t>(t.size());
    off += static_cast<std::size_t>(layer.b.size());
  }
  std::vector<std::size_t> dense_off;
  for (const auto& d : dense) {
    dense_off.push_back(off);
    off += static_cast<std::size_t>(d.w.size() + d.b.size());
  }

  const std::size_t n_tag = tag.size();
  Eigen::MatrixXd g = 2.0 * err;  // d SSE / d out, n×1
  for (std::size_t d = dense.size(); d-- > 0;) {
    const std::size_t input_idx = n_tag + d;
    if (d + 1 < dense.size()) {
      const std::size_t hidden_idx = n_tag + d;  // pre/drop index of this dense layer
      if (tape.drop[hidden_idx].size()) g = g.cwiseProduct(tape.drop[hidden_idx]);
      g = g.cwiseProduct((tape.pre[hidden_idx].array() > 0.0).cast<double>().matrix());
    }
    std::size_t o = dense_off[d];
    add_block(grad, o, tape.inputs[input_idx].transpose() * g);
    add_block(grad, o, g.colwise().sum());
    g = g * dense[d].w.transpose();
  }
  for (std::size_t l = n_tag; l-- > 0;) {
    if (tape.drop[l].size()) g = g.cwiseProduct(tape.drop[l]);
    g = g.cwiseProduct((tape.pre[l].array() > 0.0).cast<double>().matrix());
    std::size_t o = tag_off[l];
    const auto& theta = tag[l].theta;
    for (std::size_t z = 0; z < theta.size(); ++z) add_block(grad, o, tape.propagated[l][z].transpose() * g);
    add_block(grad, o, g.colwise().sum());
    if (l == 0) break;
    Eigen::MatrixXd gin = g * theta[0].transpose();
    for (std::size_t z = 1; z < theta.size(); ++z) gin.noalias() += ops.hop[z].transpose() * (g * theta[z].transpose());
    g = std::move(gin);
  }
  return sse;
}

std::size_t TagNetwork::size() const {
  std::size_t n = 0;
  for (const auto& layer : tag) {
    for (const auto& t : layer.theta) n += static_cast<std::size_t>(t.size());
    n += static_cast<std::size_t>(layer.b.size());
  }
  for (const auto& d : dense) n += static_cast<std::size_t>(d.w.size() + d.b.size());
  return n;
}

std::vector<double> TagNetwork::parameters() const {
  std::vector<double> flat;
  flat.reserve(size());
  auto push = [&](const auto& m) { flat.insert(flat.end(), m.data(), m.data() + m.size()); };
  for (const auto& layer : tag) {
    for (const auto& t : layer.theta) push(t);
    push(layer.b);
  }
  for (const auto& d : dense) {
    push(d.w);
    push(d.b);
  }
  return flat;
}

void TagNetwork::set_parameters(const std::vector<double>& flat) {
  if (flat.size() != size()) throw std::invalid_argument("parameter vector has the wrong size");
  std::size_t off = 0;
  auto pull = [&](auto& m) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + m.size()), m.data());
    off += static_cast<std::size_t>(m.size());
  };
  for (auto& layer : tag) {
    for (auto& t : layer.theta) pull(t);
    pull(layer.b);
  }
  for (auto& d : dense) {
    pull(d.w);
    pull(d.b);
  }
}

Eigen::VectorXd TagModel::predict(const DatasetRecord& record) const {
  const GraphOps ops = GraphOps::build(record.size(), record.edges, net_.arch().hops);
  return net_.forward(ops, std_.transform(record.features)).cwiseMax(0.0).cwiseMin(1.0);
}

nlohmann::json TagModel::to_json() const {
  return {{"kind", kind_},
          {"config", tag_config_to_json(cfg_)},
          {"standardizer", standardizer_to_json(std_)},
          {"parameters", net_.parameters()}};
}

TagModel TagModel::from_json(const nlohmann::json& j) {
  TagConfig cfg = tag_config_from_json(j.at("config"));
  TagNetwork net(cfg.arch, 0);
  net.set_parameters(j.at("parameters").get<std::vector<double>>());
  return TagModel(std::move(cfg), standardizer_from_json(j.at("standardizer")), std::move(net),
                  j.at("kind").get<std::string>());
}

TagModel train_tag(const std::vector<DatasetRecord>& train, const std::vector<DatasetRecord>& val,
                   const TagConfig& cfg, std::uint64_t seed, const std::string& kind_name,
                   std::vector<EpochRecord>* history) {
  if (train.empty() || val.empty()) throw std::invalid_argument("TAG training needs non-empty train and val sets");
  int rows = 0;
  for (const auto& r : train) rows += r.size();
  Eigen::MatrixXd all(rows, kNumFeatures);
  rows = 0;
  for (const auto& r : train) {
    all.middleRows(rows, r.size()) = r.features;
    rows += r.size();
  }
  const Standardizer std = Standardizer::fit(all);

  struct Prepared {
    GraphOps ops;
    Eigen::MatrixXd x;
    const DatasetRecord* rec;
  };
  auto prepare = [&](const std::vector<DatasetRecord>& set) {
    std::vector<Prepared> out;
    for (const auto& r : set) out.push_back({GraphOps::build(r.size(), r.edges, cfg.arch.hops), std.transform(r.features), &r});
    return out;
  };
  const auto tr = prepare(train);
  const auto va = prepare(val);

  TagNetwork net(cfg.arch, seed);
  double label_mean = 0.0;
  long labelled = 0;
  for (const auto& r : train) {
    for (int i = 0; i < r.size(); ++i) {
      if (r.mask[i]) label_mean += r.labels(i);
    }
    labelled += r.labelled();
  }
  net.dense.back().b(0) = label_mean / static_cast<double>(std::max(labelled, 1L));

  // Unnormalised adjacency powers grow with z, so the hop-z blocks get a
  // matching step size and initial scale: 1 / mean row-sum norm of hop[z].
  std::vector<double> hop_scale(cfg.arch.hops + 1, 1.0);
  for (int z = 1; z <= cfg.arch.hops; ++z) {
    double norm = 0.0;
    for (const auto& p : tr) norm += p.ops.hop[z].cwiseAbs().rowwise().sum().maxCoeff();
    hop_scale[z] = 1.0 / std::max(1.0, norm / static_cast<double>(tr.size()));
  }
  std::vector<double> step_scale;
  for (const auto& layer : net.tag) {
    for (std::size_t z = 0; z < layer.theta.size(); ++z) step_scale.insert(step_scale.end(), layer.theta[z].size(), hop_scale[z]);
    step_scale.insert(step_scale.end(), layer.b.size(), 1.0);
  }
  std::vector<double> params = net.parameters();
  const std::size_t np = params.size();
  step_scale.resize(np, 1.0);
  for (std::size_t i = 0; i < np; ++i) params[i] *= step_scale[i];
  net.set_parameters(params);

  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<double> m(np, 0.0), v(np, 0.0), grad(np);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  auto val_mse = [&]() {
    double sse = 0.0;
    long count = 0;
    for (const auto& p : va) {
      const Eigen::VectorXd out = net.forward(p.ops, p.x).cwiseMax(0.0).cwiseMin(1.0);
      for (int i = 0; i < p.rec->size(); ++i) {
        if (!p.rec->mask[i]) continue;
        sse += (out(i) - p.rec->labels(i)) * (out(i) - p.rec->labels(i));
        ++count;
      }
    }
    return sse / static_cast<double>(std::max(count, 1L));
  };

  std::vector<double> best = params;
  double best_val = val_mse();
  int since_best = 0;
  std::vector<std::size_t> order(tr.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    double epoch_sse = 0.0;
    long epoch_count = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_graphs)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_graphs));
      std::fill(grad.begin(), grad.end(), 0.0);
      long count = 0;
      for (std::size_t k = start; k < stop; ++k) {
        const auto& p = tr[order[k]];
        epoch_sse += net.accumulate_gradient(p.ops, p.x, p.rec->labels, p.rec->mask, grad, true, &rng);
        count += p.rec->labelled();
      }
      if (count == 0) continue;
      epoch_count += count;
      ++step;
      const double inv = 1.0 / static_cast<double>(count);
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < np; ++i) {
        const double gi = grad[i] * inv + cfg.weight_decay * params[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
        v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
        params[i] -= cfg.learning_rate * step_scale[i] * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
      net.set_parameters(params);
    }
    const double vm = val_mse();
    if (history) history->push_back({epoch, epoch_sse / static_cast<double>(std::max(epoch_count, 1L)), vm});
    if (vm < best_val) {
      best_val = vm;
      best = params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  net.set_parameters(best);
  return TagModel(cfg, std, std::move(net), kind_name);
}

}  // namespace gridfrt::surrogate
