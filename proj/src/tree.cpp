#include "landmark/tree.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "landmark/errors.hpp"

namespace landmark {

namespace {

// Per-node log-rank bookkeeping over the distinct event times of the node.
struct NodeTimes {
  std::vector<double> ev_times;  // distinct residual event times, ascending
  std::vector<double> d_total;   // events at ev_times[m]
  std::vector<double> n_total;   // members at risk at ev_times[m]

  void init(const LandmarkDataset& ds, const std::vector<uint32_t>& members) {
    ev_times.clear();
    for (uint32_t i : members)
      if (ds.event[i]) ev_times.push_back(ds.residual_time[i]);
    std::sort(ev_times.begin(), ev_times.end());
    ev_times.erase(std::unique(ev_times.begin(), ev_times.end()), ev_times.end());
    const size_t M = ev_times.size();
    d_total.assign(M, 0.0);
    n_total.assign(M, 0.0);
    for (uint32_t i : members) {
      double r = ds.residual_time[i];
      long m = pos(r);
      if (m >= 0) n_total[m] += 1.0;  // expanded to suffix counts below
      if (ds.event[i]) d_total[m] += 1.0;
    }
    for (long m = static_cast<long>(M) - 2; m >= 0; --m) n_total[m] += n_total[m + 1];
  }

  // largest m with ev_times[m] <= r, or -1
  long pos(double r) const {
    auto it = std::upper_bound(ev_times.begin(), ev_times.end(), r);
    return static_cast<long>(it - ev_times.begin()) - 1;
  }
};

double logrank_from_left_counts(const NodeTimes& nt, const std::vector<double>& d1,
                                const std::vector<double>& cnt_pos) {
  double oe = 0.0, var = 0.0, n1 = 0.0;
  for (long m = static_cast<long>(nt.ev_times.size()) - 1; m >= 0; --m) {
    n1 += cnt_pos[m];
    double n = nt.n_total[m], d = nt.d_total[m];
    double frac = n1 / n;
    oe += d1[m] - d * frac;
    if (n > 1.0) var += d * frac * (1.0 - frac) * (n - d) / (n - 1.0);
  }
  return var > 0.0 ? std::fabs(oe) / std::sqrt(var) : 0.0;
}

struct BestSplit {
  double stat = 0.0;
  size_t feature = 0;
  double cutoff = 0.0;
  bool found = false;
};

// Sweeps all candidate cutoffs (midpoints of consecutive distinct values)
// of one feature, keeping the running best.
void sweep_feature(const LandmarkDataset& ds, const std::vector<uint32_t>& members,
                   const NodeTimes& nt, size_t feature, size_t min_node_size,
                   BestSplit& best) {
  const size_t n = members.size(), M = nt.ev_times.size();
  if (M == 0) return;
  std::vector<uint32_t> order(members);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return ds.x(a, feature) < ds.x(b, feature);
  });
  std::vector<double> d1(M, 0.0), cnt_pos(M, 0.0);
  size_t moved = 0;
  while (moved < n) {
    double v = ds.x(order[moved], feature);
    // move the whole tied value group to the left child
    while (moved < n && ds.x(order[moved], feature) == v) {
      uint32_t i = order[moved];
      long m = nt.pos(ds.residual_time[i]);
      if (m >= 0) {
        cnt_pos[m] += 1.0;
        if (ds.event[i]) d1[m] += 1.0;
      }
      ++moved;
    }
    if (moved == n) break;  // no right child left
    if (moved < min_node_size || n - moved < min_node_size) continue;
    double cutoff = 0.5 * (v + ds.x(order[moved], feature));
    double stat = logrank_from_left_counts(nt, d1, cnt_pos);
    if (stat > best.stat ||
        (best.found && stat == best.stat &&
         (feature < best.feature || (feature == best.feature && cutoff < best.cutoff)))) {
      if (stat > 0.0) best = {stat, feature, cutoff, true};
    }
  }
}

struct Grower {
  const LandmarkDataset& ds;
  const TreeParams& params;
  Rng& rng;
  std::vector<TreeNode>& nodes;
  size_t mtry;
  std::vector<std::vector<size_t>> groups;  // empty -> columns are the candidates

  std::vector<size_t> sample_features() {
    if (groups.empty()) return sample_columns();
    const size_t g = groups.size();
    std::vector<size_t> pool(g);
    for (size_t c = 0; c < g; ++c) pool[c] = c;
    const size_t take = std::min(mtry, g);
    for (size_t i = 0; i < take; ++i) {
      size_t j = i + rng.uniform_int(g - i);
      std::swap(pool[i], pool[j]);
    }
    std::vector<size_t> chosen;
    for (size_t i = 0; i < take; ++i)
      chosen.insert(chosen.end(), groups[pool[i]].begin(), groups[pool[i]].end());
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  std::vector<size_t> sample_columns() {
    const size_t p = ds.p();
    if (mtry >= p) {
      std::vector<size_t> all(p);
      for (size_t c = 0; c < p; ++c) all[c] = c;
      return all;
    }
    std::vector<size_t> pool(p);
    for (size_t c = 0; c < p; ++c) pool[c] = c;
    for (size_t i = 0; i < mtry; ++i) {
      size_t j = i + rng.uniform_int(p - i);
      std::swap(pool[i], pool[j]);
    }
    std::vector<size_t> chosen(pool.begin(), pool.begin() + mtry);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  int build(std::vector<uint32_t>&& members) {
    int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (members.size() >= 2 * params.min_node_size) {
      NodeTimes nt;
      nt.init(ds, members);
      BestSplit best;
      for (size_t f : sample_features())
        sweep_feature(ds, members, nt, f, params.min_node_size, best);
      if (best.found) {
        std::vector<uint32_t> left, right;
        for (uint32_t i : members)
          (ds.x(i, best.feature) <= best.cutoff ? left : right).push_back(i);
        nodes[id].feature = static_cast<int>(best.feature);
        nodes[id].cutoff = best.cutoff;
        // stored on the chi-square scale, the split-complexity convention
        nodes[id].split_stat = best.stat * best.stat;
        members.clear();
        members.shrink_to_fit();
        int l = build(std::move(left));
        nodes[id].left = l;
        int r = build(std::move(right));
        nodes[id].right = r;
        return id;
      }
    }
    nodes[id].members = std::move(members);
    return id;
  }
};

}  // namespace

double logrank_two_sample(const std::vector<double>& time, const std::vector<uint8_t>& event,
                          const std::vector<uint8_t>& in_group1) {
  std::vector<double> ev;
  for (size_t i = 0; i < time.size(); ++i)
    if (event[i]) ev.push_back(time[i]);
  std::sort(ev.begin(), ev.end());
  ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
  double oe = 0.0, var = 0.0;
  for (double u : ev) {
    double n = 0, n1 = 0, d = 0, d1 = 0;
    for (size_t i = 0; i < time.size(); ++i) {
      if (time[i] >= u) {
        n += 1;
        if (in_group1[i]) n1 += 1;
      }
      if (event[i] && time[i] == u) {
        d += 1;
        if (in_group1[i]) d1 += 1;
      }
    }
    double frac = n1 / n;
    oe += d1 - d * frac;
    if (n > 1.0) var += d * frac * (1.0 - frac) * (n - d) / (n - 1.0);
  }
  return var > 0.0 ? std::fabs(oe) / std::sqrt(var) : 0.0;
}

std::optional<double> logrank_split_statistic(const LandmarkDataset& ds,
                                              const std::vector<uint32_t>& members,
                                              size_t feature, double cutoff,
                                              size_t min_node_size) {
  std::vector<double> time;
  std::vector<uint8_t> event, group;
  size_t n_left = 0;
  for (uint32_t i : members) {
    time.push_back(ds.residual_time[i]);
    event.push_back(ds.event[i]);
    bool left = ds.x(i, feature) <= cutoff;
    group.push_back(left ? 1 : 0);
    if (left) ++n_left;
  }
  if (n_left < min_node_size || members.size() - n_left < min_node_size) return std::nullopt;
  if (n_left == 0 || n_left == members.size()) return std::nullopt;
  return logrank_two_sample(time, event, group);
}

SurvivalTree grow(const LandmarkDataset& ds, std::vector<uint32_t> members,
                  const TreeParams& params, Rng& rng) {
  if (members.empty()) throw DataError("cannot grow a tree on an empty at-risk sample");
  SurvivalTree tree;
  tree.params = params;
  std::vector<std::vector<size_t>> groups;
  if (params.mtry_by_variable) groups = variable_groups(ds);
  const size_t n_candidates = params.mtry_by_variable ? groups.size() : ds.p();
  size_t mtry = params.mtry;
  if (mtry == 0)
    mtry = static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(n_candidates))));
  Grower grower{ds, params, rng, tree.nodes, std::min(mtry, n_candidates), std::move(groups)};
  grower.build(std::move(members));
  return tree;
}

SurvivalTree grow(const LandmarkDataset& ds, const TreeParams& params, uint64_t seed) {
  std::vector<uint32_t> members(ds.n());
  for (size_t i = 0; i < ds.n(); ++i) members[i] = static_cast<uint32_t>(i);
  Rng rng(seed);
  return grow(ds, std::move(members), params, rng);
}

namespace {

void collect_members(const SurvivalTree& tree, size_t id, std::vector<uint32_t>& out) {
  const TreeNode& nd = tree.nodes[id];
  if (tree.is_leaf(id)) {
    out.insert(out.end(), nd.members.begin(), nd.members.end());
    return;
  }
  collect_members(tree, nd.left, out);
  collect_members(tree, nd.right, out);
}

// Value of the optimally pruned branch at `id` for penalty alpha, i.e.
// max over subtrees of (sum of kept stats - alpha * #kept splits).
double branch_value(const SurvivalTree& tree, size_t id, double alpha) {
  if (tree.is_leaf(id)) return 0.0;
  const TreeNode& nd = tree.nodes[id];
  double v = nd.split_stat - alpha + branch_value(tree, nd.left, alpha) +
             branch_value(tree, nd.right, alpha);
  return std::max(0.0, v);
}

int copy_pruned(const SurvivalTree& src, size_t id, double alpha, SurvivalTree& dst) {
  int nid = static_cast<int>(dst.nodes.size());
  dst.nodes.emplace_back();
  if (!src.is_leaf(id) && branch_value(src, id, alpha) > 0.0) {
    const TreeNode& nd = src.nodes[id];
    dst.nodes[nid].feature = nd.feature;
    dst.nodes[nid].cutoff = nd.cutoff;
    dst.nodes[nid].split_stat = nd.split_stat;
    int l = copy_pruned(src, nd.left, alpha, dst);
    dst.nodes[nid].left = l;
    int r = copy_pruned(src, nd.right, alpha, dst);
    dst.nodes[nid].right = r;
  } else {
    collect_members(src, id, dst.nodes[nid].members);
  }
  return nid;
}

// Critical penalty values of the weakest-link sequence.
void critical_alphas(const SurvivalTree& tree, size_t id, double& g_sum, size_t& n_splits,
                     std::set<double>& out) {
  if (tree.is_leaf(id)) {
    g_sum = 0.0;
    n_splits = 0;
    return;
  }
  const TreeNode& nd = tree.nodes[id];
  double gl, gr;
  size_t sl, sr;
  critical_alphas(tree, nd.left, gl, sl, out);
  critical_alphas(tree, nd.right, gr, sr, out);
  g_sum = nd.split_stat + gl + gr;
  n_splits = 1 + sl + sr;
  out.insert(g_sum / static_cast<double>(n_splits));
}

// Sum of split statistics of `tree` re-evaluated on an independent member
// multiset routed from the root.
double goodness_on(const SurvivalTree& tree, size_t id, const LandmarkDataset& ds,
                   const std::vector<uint32_t>& members) {
  if (tree.is_leaf(id) || members.empty()) return 0.0;
  const TreeNode& nd = tree.nodes[id];
  std::vector<uint32_t> left, right;
  std::vector<double> time;
  std::vector<uint8_t> event, group;
  for (uint32_t i : members) {
    bool go_left = ds.x(i, nd.feature) <= nd.cutoff;
    (go_left ? left : right).push_back(i);
    time.push_back(ds.residual_time[i]);
    event.push_back(ds.event[i]);
    group.push_back(go_left ? 1 : 0);
  }
  double z = left.empty() || right.empty() ? 0.0 : logrank_two_sample(time, event, group);
  return z * z + goodness_on(tree, nd.left, ds, left) + goodness_on(tree, nd.right, ds, right);
}

}  // namespace

SurvivalTree prune_at_alpha(const SurvivalTree& tree, double alpha) {
  SurvivalTree out;
  out.params = tree.params;
  copy_pruned(tree, 0, alpha, out);
  return out;
}

SurvivalTree prune(const SurvivalTree& tree, const LandmarkDataset& ds, size_t folds,
                   uint64_t seed) {
  if (folds < 2) throw DataError("pruning requires at least 2 cross-validation folds");
  if (tree.n_splits() == 0) return tree;

  // candidate alphas: 0, the geometric means of consecutive weakest-link
  // critical values, and one value beyond the largest (root-only)
  std::set<double> crit;
  double g;
  size_t s;
  critical_alphas(tree, 0, g, s, crit);
  std::vector<double> cv(crit.begin(), crit.end());
  std::vector<double> alphas{0.0};
  for (size_t i = 0; i + 1 < cv.size(); ++i) alphas.push_back(std::sqrt(cv[i] * cv[i + 1]));
  alphas.push_back(cv.back());
  alphas.push_back(2.0 * cv.back());

  Rng rng(seed);
  std::vector<uint32_t> perm(ds.n());
  for (size_t i = 0; i < ds.n(); ++i) perm[i] = static_cast<uint32_t>(i);
  rng.shuffle(perm);

  std::vector<double> score(alphas.size(), 0.0);
  for (size_t f = 0; f < folds; ++f) {
    std::vector<uint32_t> train, test;
    for (size_t i = 0; i < perm.size(); ++i)
      (i % folds == f ? test : train).push_back(perm[i]);
    if (train.empty() || test.empty()) continue;
    Rng fold_rng(Rng::derive(seed, f + 1));
    SurvivalTree fold_tree = grow(ds, std::vector<uint32_t>(train), tree.params, fold_rng);
    for (size_t a = 0; a < alphas.size(); ++a) {
      SurvivalTree pruned = prune_at_alpha(fold_tree, alphas[a]);
      // held-out goodness penalized at 2 per split: a null split's validated
      // statistic has mean ~1, so an unpenalized score always favors alpha=0
      score[a] += goodness_on(pruned, 0, ds, test) -
                  2.0 * static_cast<double>(pruned.n_splits());
    }
  }
  size_t best = 0;
  for (size_t a = 1; a < alphas.size(); ++a)
    if (score[a] >= score[best]) best = a;  // ties -> larger alpha, smaller tree
  return prune_at_alpha(tree, alphas[best]);
}

StepSurvivalCurve member_nelson_aalen(const LandmarkDataset& ds,
                                      const std::vector<uint32_t>& members) {
  std::vector<uint32_t> order(members);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    return ds.residual_time[a] < ds.residual_time[b];
  });
  StepSurvivalCurve curve;
  double at_risk = static_cast<double>(order.size());
  double chf = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    double u = ds.residual_time[order[i]];
    double d = 0.0, removed = 0.0;
    while (i < order.size() && ds.residual_time[order[i]] == u) {
      if (ds.event[order[i]]) d += 1.0;
      removed += 1.0;
      ++i;
    }
    if (d > 0.0) {
      chf += d / at_risk;
      curve.times.push_back(u);
      curve.values.push_back(std::exp(-chf));
    }
    at_risk -= removed;
  }
  return curve;
}

StepSurvivalCurve weighted_nelson_aalen(const LandmarkDataset& ds,
                                        const std::vector<double>& weights) {
  double at_risk = 0.0;
  for (double w : weights) at_risk += w;
  StepSurvivalCurve curve;
  double chf = 0.0;
  size_t i = 0;
  const auto& order = ds.time_order;
  while (i < order.size()) {
    double u = ds.residual_time[order[i]];
    double d = 0.0, removed = 0.0;
    while (i < order.size() && ds.residual_time[order[i]] == u) {
      uint32_t idx = order[i];
      if (ds.event[idx]) d += weights[idx];
      removed += weights[idx];
      ++i;
    }
    if (d > 0.0 && at_risk > 0.0) {
      chf += d / at_risk;
      curve.times.push_back(u);
      curve.values.push_back(std::exp(-chf));
    }
    at_risk -= removed;
  }
  return curve;
}

StepSurvivalCurve node_survival(const SurvivalTree& tree, const LandmarkDataset& ds,
                                const std::vector<double>& query) {
  size_t leaf = tree.route(query.data());
  return member_nelson_aalen(ds, tree.nodes[leaf].members);
}

}  // namespace landmark
