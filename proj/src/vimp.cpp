#include "landmark/vimp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "landmark/errors.hpp"
#include "landmark/rng.hpp"
#include "landmark/tree.hpp"

namespace landmark {

namespace {

std::string occasion_name(const DataSchema& schema, size_t m, size_t k) {
  return schema.marker_names[m] + "_t" + std::to_string(k + 1);
}

}  // namespace

std::vector<VimpVariable> list_variables(const LandmarkDataset& ds) {
  // kept position of every column in the full layout (-1 when dropped)
  std::vector<int> kept_pos(ds.all_features.size(), -1);
  for (size_t c = 0; c < ds.kept.size(); ++c) kept_pos[ds.kept[c]] = static_cast<int>(c);

  std::vector<size_t> all_rows(ds.n());
  for (size_t i = 0; i < ds.n(); ++i) all_rows[i] = i;

  std::vector<VimpVariable> vars;
  auto push_simple = [&](const std::string& name, size_t full_col, const std::string& scheme) {
    VimpVariable v;
    v.name = name;
    if (kept_pos[full_col] >= 0) v.columns.push_back(static_cast<size_t>(kept_pos[full_col]));
    v.eligible = all_rows;
    v.scheme = scheme;
    vars.push_back(std::move(v));
  };

  for (size_t f = 0; f < ds.all_features.size(); ++f) {
    const FeatureInfo& fi = ds.all_features[f];
    switch (fi.kind) {
      case FeatureKind::LandmarkTime:
        push_simple("landmark_time", f, "at-risk");
        break;
      case FeatureKind::Baseline:
        push_simple(ds.schema.z_names[fi.z], f, "at-risk");
        break;
      case FeatureKind::EventRatio:
        push_simple(ds.schema.event_names[fi.j], f, "ratio");
        break;
      case FeatureKind::MarkerPlus: {
        // owns the (plus, minus) pair; the minus twin follows in the layout
        VimpVariable v;
        v.name = occasion_name(ds.schema, fi.m, fi.k);
        int pc = kept_pos[f];
        int mc = kept_pos[f + 1];
        if (pc >= 0) v.columns.push_back(static_cast<size_t>(pc));
        if (mc >= 0) v.columns.push_back(static_cast<size_t>(mc));
        // shuffle only where the value was observed at the landmark
        if (pc >= 0) {
          for (size_t i = 0; i < ds.n(); ++i)
            if (ds.x(i, static_cast<size_t>(pc)) != ds.big_m) v.eligible.push_back(i);
        } else if (mc >= 0) {
          for (size_t i = 0; i < ds.n(); ++i)
            if (ds.x(i, static_cast<size_t>(mc)) != -ds.big_m) v.eligible.push_back(i);
        }
        v.scheme = "complete-cases";
        vars.push_back(std::move(v));
        break;
      }
      case FeatureKind::MarkerMinus:
        break;  // handled with its plus twin
    }
  }
  return vars;
}

namespace {

// Shared evaluation state: the OOB-scorable training subjects, their
// observed outcomes and the censoring model they induce.
struct OobScorer {
  const Ensemble& ens;
  VimpParams params;
  std::vector<size_t> scored;  // at-risk indices with at least one OOB tree
  size_t n_excluded = 0;
  std::vector<EvalSubject> eval;
  CensoringModel cens;
  double t_lo = 0.0, t_hi = 0.0;

  OobScorer(const Ensemble& e, const VimpParams& p) : ens(e), params(p) {
    const LandmarkDataset& ds = ens.data;
    for (size_t i = 0; i < ds.n(); ++i) {
      bool oob = false;
      for (size_t b = 0; b < ens.trees.size() && !oob; ++b)
        if (ens.boot_count[b][i] == 0) oob = true;
      if (oob)
        scored.push_back(i);
      else
        ++n_excluded;
    }
    if (scored.empty()) throw NumericError("no out-of-bag subjects; cannot score importance");
    eval.reserve(scored.size());
    for (size_t i : scored) {
      EvalSubject s;
      s.y = ds.y_l[i] + ds.residual_time[i];
      s.delta = ds.event[i] != 0;
      s.y_l = ds.y_l[i];
      eval.push_back(std::move(s));
    }
    cens = fit_censoring(eval, CensoringModel::Kind::KaplanMeier);
    t_lo = params.t_lo;
    t_hi = params.t_hi;
    if (!(t_hi > t_lo)) {
      // default interval: up to the largest residual event time
      t_lo = 0.0;
      t_hi = 0.0;
      for (size_t i = 0; i < ds.n(); ++i)
        if (ds.event[i]) t_hi = std::max(t_hi, ds.residual_time[i]);
      if (t_hi <= 0.0)
        for (double r : ds.residual_time) t_hi = std::max(t_hi, r);
      if (t_hi <= 0.0) throw NumericError("degenerate residual times; cannot score importance");
    }
  }

  // Integrated OOB concordance when the columns of each substitution are
  // taken from the donor row instead of the subject's own.
  std::optional<double> score(
      const std::vector<std::pair<const std::vector<size_t>*, const std::vector<size_t>*>>&
          substitutions) const {
    const LandmarkDataset& ds = ens.data;
    std::vector<StepSurvivalCurve> curves;
    curves.reserve(scored.size());
    std::vector<double> row(ds.p());
    for (size_t i : scored) {
      for (size_t c = 0; c < ds.p(); ++c) row[c] = ds.x(i, c);
      for (const auto& [cols, donor] : substitutions) {
        size_t d = (*donor)[i];
        if (d == i) continue;
        for (size_t c : *cols) row[c] = ds.x(d, c);
      }
      std::vector<double> w = ens.oob_weights_at_risk(i, row);
      curves.push_back(weighted_nelson_aalen(ds, w));
    }
    ConcordanceReport rep =
        integrated_concordance(curves, eval, cens, t_lo, t_hi, params.grid_size,
                               ConWeighting::Equal, ds.tau0, params.sc_floor);
    return rep.integrated;
  }
};

// identity donor map
std::vector<size_t> identity_donors(size_t n) {
  std::vector<size_t> d(n);
  for (size_t i = 0; i < n; ++i) d[i] = i;
  return d;
}

void fill_donors(const std::vector<size_t>& eligible, Rng& rng, std::vector<size_t>& donor) {
  std::vector<size_t> perm = rng.permutation(eligible.size());
  for (size_t a = 0; a < eligible.size(); ++a) donor[eligible[a]] = eligible[perm[a]];
}

VimpEntry run_vimp(const Ensemble& ens, const std::vector<VimpVariable>& members,
                   const std::string& label, const VimpParams& params) {
  OobScorer scorer(ens, params);
  VimpEntry out;
  out.name = label;
  out.scheme = members.size() == 1 ? members[0].scheme : "group";
  out.n_excluded_inbag = scorer.n_excluded;

  size_t n = ens.data.n();
  std::optional<double> base = scorer.score({});
  if (!base) {
    out.estimable = false;
    return out;
  }

  // members with identical eligible sets share one permutation
  std::map<std::vector<size_t>, std::vector<size_t>> donor_by_set;
  std::vector<std::pair<const std::vector<size_t>*, const std::vector<size_t>*>> subs;
  for (const VimpVariable& v : members) donor_by_set.emplace(v.eligible, identity_donors(n));
  for (const VimpVariable& v : members)
    subs.emplace_back(&v.columns, &donor_by_set.at(v.eligible));
  for (const VimpVariable& v : members) out.n_eligible = std::max(out.n_eligible, v.eligible.size());

  Rng rng(params.seed);
  out.drops.reserve(params.n_perm);
  for (size_t p = 0; p < params.n_perm; ++p) {
    for (auto& [eligible, donor] : donor_by_set) fill_donors(eligible, rng, donor);
    std::optional<double> perm_score = scorer.score(subs);
    if (!perm_score) {
      out.estimable = false;
      out.drops.clear();
      return out;
    }
    out.drops.push_back(*base - *perm_score);
  }

  double sum = 0.0;
  for (double d : out.drops) sum += d;
  out.mean_drop = out.drops.empty() ? 0.0 : sum / static_cast<double>(out.drops.size());
  if (out.drops.size() > 1) {
    double ss = 0.0;
    for (double d : out.drops) ss += (d - out.mean_drop) * (d - out.mean_drop);
    out.sd_drop = std::sqrt(ss / static_cast<double>(out.drops.size() - 1));
  }
  return out;
}

const VimpVariable& find_variable(const std::vector<VimpVariable>& vars,
                                  const std::string& name) {
  for (const VimpVariable& v : vars)
    if (v.name == name) return v;
  throw DataError("unknown variable for importance: " + name);
}

}  // namespace

VimpEntry permutation_importance(const Ensemble& ens, const std::string& variable,
                                 const VimpParams& params) {
  std::vector<VimpVariable> vars = list_variables(ens.data);
  return run_vimp(ens, {find_variable(vars, variable)}, variable, params);
}

VimpEntry grouped_importance(const Ensemble& ens, const std::vector<std::string>& group,
                             const VimpParams& params) {
  if (group.empty()) throw DataError("empty variable group");
  std::vector<VimpVariable> vars = list_variables(ens.data);
  std::vector<VimpVariable> members;
  std::string label;
  for (const std::string& g : group) {
    members.push_back(find_variable(vars, g));
    label += (label.empty() ? "" : "+") + g;
  }
  return run_vimp(ens, members, label, params);
}

std::vector<VimpEntry> vimp_all(const Ensemble& ens, const VimpParams& params) {
  std::vector<VimpEntry> out;
  for (const VimpVariable& v : list_variables(ens.data))
    out.push_back(run_vimp(ens, {v}, v.name, params));
  std::sort(out.begin(), out.end(), [](const VimpEntry& a, const VimpEntry& b) {
    if (a.mean_drop != b.mean_drop) return a.mean_drop > b.mean_drop;
    return a.name < b.name;
  });
  return out;
}

}  // namespace landmark
