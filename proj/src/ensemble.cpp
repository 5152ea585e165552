#include "landmark/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "landmark/errors.hpp"

namespace landmark {

namespace {

StepHazard leaf_hazard(const LandmarkDataset& ds, const std::vector<uint32_t>& members) {
  StepSurvivalCurve s = member_nelson_aalen(ds, members);
  StepHazard h;
  h.times = s.times;
  h.chf.resize(s.values.size());
  for (size_t k = 0; k < s.values.size(); ++k) h.chf[k] = -std::log(s.values[k]);
  return h;
}

double chf_at(const StepHazard& h, double t) {
  if (h.times.empty() || t < h.times.front()) return 0.0;
  size_t k = std::upper_bound(h.times.begin(), h.times.end(), t) - h.times.begin();
  return h.chf[k - 1];
}

}  // namespace

Ensemble fit(LandmarkDataset data, const EnsembleParams& params) {
  if (params.B == 0) throw DataError("ensemble requires B >= 1 trees");
  Ensemble ens;
  ens.data = std::move(data);
  ens.params = params;
  const size_t n = ens.data.n();
  ens.trees.reserve(params.B);
  ens.boot_count.reserve(params.B);
  for (size_t b = 0; b < params.B; ++b) {
    Rng rng(Rng::derive(params.seed, b));
    std::vector<uint32_t> count(n, 0);
    std::vector<uint32_t> members;
    members.reserve(n);
    if (params.bootstrap) {
      for (size_t i = 0; i < n; ++i) ++count[rng.uniform_int(n)];
      for (size_t i = 0; i < n; ++i)
        for (uint32_t c = 0; c < count[i]; ++c) members.push_back(static_cast<uint32_t>(i));
    } else {
      count.assign(n, 1);
      for (size_t i = 0; i < n; ++i) members.push_back(static_cast<uint32_t>(i));
    }
    ens.boot_count.push_back(std::move(count));
    ens.trees.push_back(grow(ens.data, std::move(members), params.tree, rng));
  }
  // per-leaf cumulative hazards for the hazard-averaging baseline
  ens.leaf_chf.resize(params.B);
  for (size_t b = 0; b < params.B; ++b) {
    const auto& tree = ens.trees[b];
    ens.leaf_chf[b].resize(tree.nodes.size());
    for (size_t id = 0; id < tree.nodes.size(); ++id)
      if (tree.is_leaf(id)) ens.leaf_chf[b][id] = leaf_hazard(ens.data, tree.nodes[id].members);
  }
  return ens;
}

std::vector<double> Ensemble::weights_at_risk(const std::vector<double>& x) const {
  std::vector<double> w(n(), 0.0);
  for (const auto& tree : trees) {
    size_t leaf = tree.route(x.data());
    // the member multiset holds each subject w_bi times
    for (uint32_t i : tree.nodes[leaf].members) w[i] += 1.0;
  }
  const double inv_b = 1.0 / static_cast<double>(trees.size());
  for (double& v : w) v *= inv_b;
  return w;
}

std::vector<double> Ensemble::subject_weights(const std::vector<double>& x) const {
  std::vector<double> w_risk = weights_at_risk(x);
  std::vector<double> w(data.n_total, 0.0);
  for (size_t i = 0; i < w_risk.size(); ++i) w[data.orig_index[i]] = w_risk[i];
  return w;
}

StepSurvivalCurve Ensemble::predict_survival(const std::vector<double>& x,
                                             PredictDiagnostics* diag) const {
  return predict_survival(x, params.mode, diag);
}

StepSurvivalCurve Ensemble::predict_survival(const std::vector<double>& x, EnsembleMode mode,
                                             PredictDiagnostics* diag) const {
  if (mode == EnsembleMode::Martingale) {
    std::vector<double> w = weights_at_risk(x);
    double total = 0.0;
    for (double v : w) total += v;
    if (total <= 0.0) {
      if (diag != nullptr) ++diag->all_zero_weight_queries;
      return {};
    }
    return weighted_nelson_aalen(data, w);
  }
  // hazard averaging on the union jump grid
  std::vector<const StepHazard*> hz;
  hz.reserve(trees.size());
  std::vector<double> grid;
  for (size_t b = 0; b < trees.size(); ++b) {
    size_t leaf = trees[b].route(x.data());
    const StepHazard& h = leaf_chf[b][leaf];
    hz.push_back(&h);
    grid.insert(grid.end(), h.times.begin(), h.times.end());
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  StepSurvivalCurve curve;
  const double inv_b = 1.0 / static_cast<double>(trees.size());
  for (double t : grid) {
    double avg = 0.0;
    for (const StepHazard* h : hz) avg += chf_at(*h, t);
    curve.times.push_back(t);
    curve.values.push_back(std::exp(-avg * inv_b));
  }
  return curve;
}

std::vector<double> Ensemble::oob_weights_at_risk(size_t i, const std::vector<double>& x) const {
  std::vector<double> w(n(), 0.0);
  size_t n_oob = 0;
  for (size_t b = 0; b < trees.size(); ++b) {
    if (boot_count[b][i] != 0) continue;
    ++n_oob;
    size_t leaf = trees[b].route(x.data());
    for (uint32_t k : trees[b].nodes[leaf].members) w[k] += 1.0;
  }
  if (n_oob == 0) return {};
  const double inv = 1.0 / static_cast<double>(n_oob);
  for (double& v : w) v *= inv;
  return w;
}

bool Ensemble::oob_survival(size_t i, StepSurvivalCurve& out, PredictDiagnostics* diag) const {
  std::vector<double> x(data.p());
  for (size_t c = 0; c < data.p(); ++c) x[c] = data.x(i, c);
  std::vector<double> w = oob_weights_at_risk(i, x);
  if (w.empty()) return false;  // in-bag in every tree
  double total = 0.0;
  for (double v : w) total += v;
  if (total <= 0.0) {
    if (diag != nullptr) ++diag->all_zero_weight_queries;
    out = {};
    return true;
  }
  out = weighted_nelson_aalen(data, w);
  return true;
}

// ---- serialization ----

namespace {

using nlohmann::json;

constexpr int kBundleVersion = 1;

json schema_to_json(const DataSchema& s) {
  return {{"z", s.z_names}, {"markers", s.marker_names}, {"events", s.event_names},
          {"K", s.n_occasions}};
}

DataSchema schema_from_json(const json& j) {
  DataSchema s;
  s.z_names = j.at("z").get<std::vector<std::string>>();
  s.marker_names = j.at("markers").get<std::vector<std::string>>();
  s.event_names = j.at("events").get<std::vector<std::string>>();
  s.n_occasions = j.at("K").get<size_t>();
  return s;
}

json tree_to_json(const SurvivalTree& t) {
  json nodes = json::array();
  for (const auto& nd : t.nodes) {
    json jn = {{"f", nd.feature}, {"c", nd.cutoff}, {"l", nd.left}, {"r", nd.right},
               {"s", nd.split_stat}};
    if (nd.feature < 0) jn["m"] = nd.members;
    nodes.push_back(std::move(jn));
  }
  return nodes;
}

SurvivalTree tree_from_json(const json& j, const TreeParams& params) {
  SurvivalTree t;
  t.params = params;
  for (const auto& jn : j) {
    TreeNode nd;
    nd.feature = jn.at("f").get<int>();
    nd.cutoff = jn.at("c").get<double>();
    nd.left = jn.at("l").get<int>();
    nd.right = jn.at("r").get<int>();
    nd.split_stat = jn.at("s").get<double>();
    if (nd.feature < 0) nd.members = jn.at("m").get<std::vector<uint32_t>>();
    t.nodes.push_back(std::move(nd));
  }
  return t;
}

}  // namespace

void save_bundle(const Ensemble& ens, const std::string& path) {
  json j;
  j["version"] = kBundleVersion;
  j["schema"] = schema_to_json(ens.data.schema);
  j["spec"] = {{"kind", ens.data.spec.kind == LandmarkSpec::Kind::Fixed ? "fixed" : "event"},
               {"a", ens.data.spec.a},
               {"event_j", ens.data.spec.event_j}};
  j["params"] = {{"B", ens.params.B},
                 {"min_node_size", ens.params.tree.min_node_size},
                 {"mtry", ens.params.tree.mtry},
                 {"mtry_by_variable", ens.params.tree.mtry_by_variable},
                 {"bootstrap", ens.params.bootstrap},
                 {"seed", ens.params.seed},
                 {"mode", ens.params.mode == EnsembleMode::Martingale ? "E1" : "E2"}};
  j["big_m"] = ens.data.big_m;
  j["tau0"] = ens.data.tau0;
  j["n_total"] = ens.data.n_total;
  j["orig_index"] = ens.data.orig_index;
  j["ids"] = ens.data.ids;
  j["y_l"] = ens.data.y_l;
  j["residual_time"] = ens.data.residual_time;
  j["event"] = ens.data.event;
  j["kept"] = ens.data.kept;
  j["X"] = ens.data.X;
  j["trees"] = json::array();
  for (const auto& t : ens.trees) j["trees"].push_back(tree_to_json(t));
  j["boot_count"] = ens.boot_count;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model bundle to " + path);
  out << j.dump() << '\n';
}

Ensemble load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model bundle " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw DataError("malformed model bundle " + path + ": " + e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != kBundleVersion)
    throw DataError("unsupported model bundle version in " + path);

  Ensemble ens;
  ens.data.schema = schema_from_json(j.at("schema"));
  const auto& js = j.at("spec");
  ens.data.spec.kind = js.at("kind").get<std::string>() == "fixed" ? LandmarkSpec::Kind::Fixed
                                                                   : LandmarkSpec::Kind::Event;
  ens.data.spec.a = js.at("a").get<double>();
  ens.data.spec.event_j = js.at("event_j").get<size_t>();
  const auto& jp = j.at("params");
  ens.params.B = jp.at("B").get<size_t>();
  ens.params.tree.min_node_size = jp.at("min_node_size").get<size_t>();
  ens.params.tree.mtry = jp.at("mtry").get<size_t>();
  ens.params.tree.mtry_by_variable = jp.value("mtry_by_variable", false);
  ens.params.bootstrap = jp.at("bootstrap").get<bool>();
  ens.params.seed = jp.at("seed").get<uint64_t>();
  ens.params.mode =
      jp.at("mode").get<std::string>() == "E1" ? EnsembleMode::Martingale : EnsembleMode::HazardAverage;
  ens.data.big_m = j.at("big_m").get<double>();
  ens.data.tau0 = j.at("tau0").get<double>();
  ens.data.n_total = j.at("n_total").get<size_t>();
  ens.data.orig_index = j.at("orig_index").get<std::vector<size_t>>();
  ens.data.ids = j.at("ids").get<std::vector<std::string>>();
  ens.data.y_l = j.at("y_l").get<std::vector<double>>();
  ens.data.residual_time = j.at("residual_time").get<std::vector<double>>();
  ens.data.event = j.at("event").get<std::vector<uint8_t>>();
  ens.data.kept = j.at("kept").get<std::vector<size_t>>();
  ens.data.X = j.at("X").get<std::vector<double>>();
  ens.data.all_features = feature_layout(ens.data.schema);

  ens.data.time_order.resize(ens.data.n());
  for (size_t i = 0; i < ens.data.n(); ++i) ens.data.time_order[i] = static_cast<uint32_t>(i);
  std::sort(ens.data.time_order.begin(), ens.data.time_order.end(), [&](uint32_t a, uint32_t b) {
    if (ens.data.residual_time[a] != ens.data.residual_time[b])
      return ens.data.residual_time[a] < ens.data.residual_time[b];
    return a < b;
  });

  for (const auto& jt : j.at("trees")) ens.trees.push_back(tree_from_json(jt, ens.params.tree));
  ens.boot_count = j.at("boot_count").get<std::vector<std::vector<uint32_t>>>();
  if (ens.trees.size() != ens.params.B || ens.boot_count.size() != ens.params.B)
    throw DataError("model bundle " + path + " has inconsistent tree count");

  ens.leaf_chf.resize(ens.trees.size());
  for (size_t b = 0; b < ens.trees.size(); ++b) {
    const auto& tree = ens.trees[b];
    ens.leaf_chf[b].resize(tree.nodes.size());
    for (size_t id = 0; id < tree.nodes.size(); ++id)
      if (tree.is_leaf(id)) ens.leaf_chf[b][id] = leaf_hazard(ens.data, tree.nodes[id].members);
  }
  return ens;
}

}  // namespace landmark
