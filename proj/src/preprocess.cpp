#include "landmark/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <tuple>

#include "landmark/errors.hpp"

namespace landmark {

std::vector<FeatureInfo> feature_layout(const DataSchema& schema) {
  std::vector<FeatureInfo> out;
  out.push_back({FeatureKind::LandmarkTime, 0, 0, 0, 0, "landmark_time"});
  for (size_t zi = 0; zi < schema.p_z(); ++zi)
    out.push_back({FeatureKind::Baseline, 0, 0, 0, zi, schema.z_names[zi]});
  for (size_t k = 0; k < schema.K(); ++k) {
    for (size_t m = 0; m < schema.q(); ++m) {
      std::string base = schema.marker_names[m] + "_t" + std::to_string(k + 1);
      out.push_back({FeatureKind::MarkerPlus, k, m, 0, 0, base + "_plus"});
      out.push_back({FeatureKind::MarkerMinus, k, m, 0, 0, base + "_minus"});
    }
  }
  for (size_t j = 0; j < schema.J(); ++j)
    out.push_back({FeatureKind::EventRatio, 0, 0, j, 0, schema.event_names[j] + "_ratio"});
  return out;
}

std::vector<double> transform(const LandmarkView& view, const std::vector<double>& z,
                              double big_m) {
  if (!view.at_risk) throw DataError("transform requires an at-risk landmark view");
  const size_t Kq = view.w_at.size(), J = view.u_at.size();
  if (J > 0 && view.t_l <= 0.0)
    throw DataError("landmark time 0 with intermediate events: ratio U_j/T_L undefined");
  std::vector<double> out;
  out.reserve(1 + z.size() + 2 * Kq + J);
  out.push_back(view.t_l);
  out.insert(out.end(), z.begin(), z.end());
  for (size_t l = 0; l < Kq; ++l) {
    double v = view.w_at[l];
    if (is_na(v)) {
      out.push_back(big_m);
      out.push_back(-big_m);
    } else {
      out.push_back(v);
      out.push_back(v);
    }
  }
  for (size_t j = 0; j < J; ++j) {
    double uj = view.u_at[j];
    out.push_back(is_na(uj) ? big_m : uj / view.t_l);
  }
  return out;
}

double choose_big_m(const std::vector<const LandmarkView*>& views,
                    const std::vector<const std::vector<double>*>& zs) {
  if (views.empty()) throw DataError("cannot choose sentinel M from an empty risk set");
  double max_abs = 0.0;
  for (size_t i = 0; i < views.size(); ++i) {
    const LandmarkView& v = *views[i];
    max_abs = std::max(max_abs, std::abs(v.t_l));
    for (double zv : *zs[i]) max_abs = std::max(max_abs, std::abs(zv));
    for (double wv : v.w_at)
      if (!is_na(wv)) max_abs = std::max(max_abs, std::abs(wv));
    for (double uv : v.u_at)
      if (!is_na(uv)) max_abs = std::max(max_abs, std::abs(uv / v.t_l));
  }
  return 10.0 * (1.0 + max_abs);
}

std::vector<std::string> LandmarkDataset::feature_names() const {
  std::vector<std::string> names;
  names.reserve(kept.size());
  for (size_t c : kept) names.push_back(all_features[c].name);
  return names;
}

LandmarkDataset build_dataset(const Cohort& cohort, const LandmarkSpec& spec, bool dedup) {
  LandmarkDataset ds;
  ds.schema = cohort.schema;
  ds.spec = spec;
  ds.n_total = cohort.records.size();
  ds.all_features = feature_layout(cohort.schema);

  std::vector<LandmarkView> views;
  for (size_t i = 0; i < cohort.records.size(); ++i) {
    LandmarkView v = landmark_view(cohort.records[i], cohort.schema, spec);
    if (!v.at_risk) continue;
    ds.orig_index.push_back(i);
    ds.ids.push_back(cohort.records[i].id);
    ds.y_l.push_back(v.t_l);
    ds.residual_time.push_back(v.residual_y);
    ds.event.push_back(v.delta ? 1 : 0);
    views.push_back(std::move(v));
  }
  if (views.empty()) throw DataError("empty landmark risk set");

  std::vector<const LandmarkView*> vp;
  std::vector<const std::vector<double>*> zp;
  for (size_t i = 0; i < views.size(); ++i) {
    vp.push_back(&views[i]);
    zp.push_back(&cohort.records[ds.orig_index[i]].z);
  }
  ds.big_m = choose_big_m(vp, zp);
  ds.tau0 = spec.tau0.value_or(*std::max_element(ds.y_l.begin(), ds.y_l.end()));

  const size_t n = views.size(), p_full = ds.all_features.size();
  std::vector<double> full(n * p_full);
  for (size_t i = 0; i < n; ++i) {
    auto row = transform(views[i], cohort.records[ds.orig_index[i]].z, ds.big_m);
    std::copy(row.begin(), row.end(), full.begin() + i * p_full);
  }

  // remove zero-variance columns, then exact duplicates (first kept);
  // neither removal changes any reachable partition
  for (size_t c = 0; c < p_full; ++c) {
    bool constant = true;
    for (size_t i = 1; i < n && constant; ++i)
      constant = full[i * p_full + c] == full[c];
    if (dedup && constant) continue;
    bool duplicate = false;
    if (dedup) {
      for (size_t prev : ds.kept) {
        bool same = true;
        for (size_t i = 0; i < n && same; ++i)
          same = full[i * p_full + c] == full[i * p_full + prev];
        if (same) {
          duplicate = true;
          break;
        }
      }
    }
    if (!duplicate) ds.kept.push_back(c);
  }

  ds.X.resize(n * ds.kept.size());
  for (size_t i = 0; i < n; ++i)
    for (size_t c = 0; c < ds.kept.size(); ++c)
      ds.X[i * ds.kept.size() + c] = full[i * p_full + ds.kept[c]];

  ds.time_order.resize(n);
  for (size_t i = 0; i < n; ++i) ds.time_order[i] = static_cast<uint32_t>(i);
  std::sort(ds.time_order.begin(), ds.time_order.end(), [&](uint32_t a, uint32_t b) {
    if (ds.residual_time[a] != ds.residual_time[b])
      return ds.residual_time[a] < ds.residual_time[b];
    return a < b;
  });
  return ds;
}

std::vector<std::vector<size_t>> variable_groups(const LandmarkDataset& ds) {
  std::vector<std::vector<size_t>> groups;
  // key: stable identity of the raw variable behind a column
  std::vector<std::tuple<int, size_t>> keys;
  for (size_t c = 0; c < ds.p(); ++c) {
    const FeatureInfo& f = ds.feature(c);
    std::tuple<int, size_t> key;
    switch (f.kind) {
      case FeatureKind::LandmarkTime: key = {0, 0}; break;
      case FeatureKind::Baseline: key = {1, f.z}; break;
      case FeatureKind::MarkerPlus:
      case FeatureKind::MarkerMinus: key = {2, f.m}; break;
      case FeatureKind::EventRatio: key = {3, f.j}; break;
    }
    size_t g = 0;
    for (; g < keys.size(); ++g)
      if (keys[g] == key) break;
    if (g == keys.size()) {
      keys.push_back(key);
      groups.emplace_back();
    }
    groups[g].push_back(c);
  }
  return groups;
}

std::vector<double> transform_query(const LandmarkDataset& ds, const LandmarkView& view,
                                    const std::vector<double>& z, size_t* clamped) {
  auto full = transform(view, z, ds.big_m);
  size_t n_clamped = 0;
  for (double& v : full) {
    if (v > ds.big_m) {
      v = ds.big_m;
      ++n_clamped;
    } else if (v < -ds.big_m) {
      v = -ds.big_m;
      ++n_clamped;
    }
  }
  if (clamped != nullptr) *clamped += n_clamped;
  std::vector<double> out(ds.kept.size());
  for (size_t c = 0; c < ds.kept.size(); ++c) out[c] = full[ds.kept[c]];
  return out;
}

void write_design_csv(const LandmarkDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write design matrix to " + path);
  out << "id,residual_time,event";
  for (const auto& name : ds.feature_names()) out << ',' << name;
  out << '\n';
  out.precision(17);
  for (size_t i = 0; i < ds.n(); ++i) {
    out << ds.ids[i] << ',' << ds.residual_time[i] << ',' << int(ds.event[i]);
    for (size_t c = 0; c < ds.p(); ++c) out << ',' << ds.x(i, c);
    out << '\n';
  }
}

}  // namespace landmark
