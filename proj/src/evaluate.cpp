#include "landmark/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "landmark/errors.hpp"
#include "landmark/kernels.hpp"

namespace landmark {

namespace {

StepSurvivalCurve kaplan_meier(const std::vector<double>& time,
                               const std::vector<uint8_t>& event) {
  std::vector<size_t> order(time.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return time[a] < time[b]; });
  StepSurvivalCurve curve;
  double at_risk = static_cast<double>(order.size());
  double s = 1.0;
  size_t i = 0;
  while (i < order.size()) {
    double u = time[order[i]];
    double d = 0.0, removed = 0.0;
    while (i < order.size() && time[order[i]] == u) {
      if (event[order[i]]) d += 1.0;
      removed += 1.0;
      ++i;
    }
    if (d > 0.0) {
      s *= 1.0 - d / at_risk;
      curve.times.push_back(u);
      curve.values.push_back(std::max(s, 0.0));
    }
    at_risk -= removed;
  }
  // a terminal step to exactly 0 makes the curve leave (0,1]; clamp values
  // for use as weights, keeping the recorded jump
  for (double& v : curve.values) v = std::max(v, 0.0);
  return curve;
}

}  // namespace

CensoringModel fit_censoring(const std::vector<EvalSubject>& subjects,
                             CensoringModel::Kind kind, const CensoringForestParams& params) {
  if (subjects.empty()) throw DataError("cannot fit a censoring model on an empty sample");
  CensoringModel model;
  model.kind = kind;
  std::vector<double> y(subjects.size());
  std::vector<uint8_t> cens_event(subjects.size());
  for (size_t i = 0; i < subjects.size(); ++i) {
    y[i] = subjects[i].y;
    cens_event[i] = subjects[i].delta ? 0 : 1;  // censoring is the event
  }
  if (kind == CensoringModel::Kind::KaplanMeier) {
    model.km = kaplan_meier(y, cens_event);
    return model;
  }

  // forest on Z with roles of T and C swapped: a synthetic cohort with no
  // markers or intermediate events, landmark fixed at 0
  Cohort cohort;
  cohort.schema.n_occasions = 0;
  for (size_t zi = 0; zi < subjects[0].z.size(); ++zi)
    cohort.schema.z_names.push_back("z" + std::to_string(zi + 1));
  for (size_t i = 0; i < subjects.size(); ++i) {
    SubjectRecord rec;
    rec.id = std::to_string(i);
    rec.y = subjects[i].y;
    rec.delta = cens_event[i] != 0;
    rec.z = subjects[i].z;
    cohort.records.push_back(std::move(rec));
  }
  LandmarkDataset ds = build_dataset(cohort, LandmarkSpec::fixed(0.0));
  EnsembleParams ep;
  ep.B = params.B;
  ep.tree.min_node_size = params.min_node_size;
  ep.seed = params.seed;
  model.forest = std::make_shared<Ensemble>(fit(std::move(ds), ep));
  model.per_subject.resize(subjects.size());
  for (size_t i = 0; i < subjects.size(); ++i) {
    LandmarkView view;
    view.at_risk = true;
    view.t_l = 0.0;
    view.residual_y = subjects[i].y;
    auto x = transform_query(model.forest->data, view, subjects[i].z);
    model.per_subject[i] = model.forest->predict_survival(x, EnsembleMode::Martingale);
  }
  return model;
}

ConcordancePoint concordance_t(const std::vector<double>& scores,
                               const std::vector<EvalSubject>& subjects,
                               const CensoringModel& cens, double t, double tau0,
                               double sc_floor) {
  if (t <= 0.0) throw NumericError("concordance horizon t must be positive");
  const size_t n = subjects.size();
  ConcordancePoint pt;
  pt.t = t;
  double num = 0.0, den = 0.0;
  // j indexes the case (event within (0, t]), i the control (beyond t)
  for (size_t j = 0; j < n; ++j) {
    const auto& sj = subjects[j];
    if (!sj.delta || sj.y_l > tau0) continue;
    double rj = sj.y - sj.y_l;
    if (rj < 0.0 || rj > t) continue;
    double scj = cens.at_left(j, sj.y);
    for (size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      const auto& si = subjects[i];
      if (si.y_l > tau0) continue;
      if (!(si.y - si.y_l > t)) continue;
      double sci = cens.at_left(i, si.y_l + t);
      if (scj < sc_floor || sci < sc_floor) {
        ++pt.excluded_pairs;
        continue;
      }
      double w = 1.0 / (scj * sci);
      double d = scores[j] - scores[i];
      num += (d > 0.0 ? 1.0 : (d == 0.0 ? 0.5 : 0.0)) * w;
      den += w;
      ++pt.n_pairs;
    }
  }
  pt.denominator = den;
  if (den > 0.0) pt.con = num / den;
  return pt;
}

ConcordanceReport integrated_concordance(
    const std::function<std::vector<double>(double)>& score_at,
    const std::vector<EvalSubject>& subjects, const CensoringModel& cens, double t_lo,
    double t_hi, size_t grid_size, ConWeighting weighting, double tau0, double sc_floor) {
  if (!(t_lo < t_hi)) throw NumericError("concordance interval requires t_lo < t_hi");
  if (grid_size < 1) throw NumericError("concordance grid size must be >= 1");
  ConcordanceReport report;
  report.weighting = weighting;
  report.tau0 = tau0;
  double num = 0.0, den = 0.0;
  for (size_t jj = 1; jj <= grid_size; ++jj) {
    double t = t_lo + (t_hi - t_lo) * static_cast<double>(jj) / static_cast<double>(grid_size);
    auto pt = concordance_t(score_at(t), subjects, cens, t, tau0, sc_floor);
    report.excluded_pairs += pt.excluded_pairs;
    if (pt.con.has_value()) {
      double w = weighting == ConWeighting::Equal ? 1.0 : pt.denominator;
      num += w * *pt.con;
      den += w;
    }
    report.points.push_back(std::move(pt));
  }
  if (den > 0.0) report.integrated = num / den;
  return report;
}

ConcordanceReport integrated_concordance(const std::vector<StepSurvivalCurve>& predicted,
                                         const std::vector<EvalSubject>& subjects,
                                         const CensoringModel& cens, double t_lo, double t_hi,
                                         size_t grid_size, ConWeighting weighting, double tau0,
                                         double sc_floor) {
  auto score_at = [&](double t) {
    std::vector<double> g(predicted.size());
    for (size_t i = 0; i < predicted.size(); ++i) g[i] = 1.0 - predicted[i].at(t);
    return g;
  };
  return integrated_concordance(score_at, subjects, cens, t_lo, t_hi, grid_size, weighting,
                                tau0, sc_floor);
}

TruthMetrics truth_metrics(const std::vector<StepSurvivalCurve>& predicted,
                           const std::vector<std::vector<double>>& truth_on_grid,
                           const std::vector<double>& residual_event_time, double t0,
                           size_t grid_size) {
  if (t0 <= 0.0) throw NumericError("truth metrics require t0 > 0");
  if (predicted.size() != truth_on_grid.size() ||
      predicted.size() != residual_event_time.size())
    throw DataError("truth metrics: mismatched subject counts");
  const size_t np = grid_size + 1;
  const double dx = t0 / static_cast<double>(grid_size);
  std::vector<double> grid = uniform_grid(0.0, t0, np);
  std::vector<double> pred(np), indicator(np);
  TruthMetrics m;
  for (size_t i = 0; i < predicted.size(); ++i) {
    if (truth_on_grid[i].size() != np)
      throw DataError("truth metrics: truth curve not sampled on the metric grid");
    predicted[i].sample(grid, pred);
    m.imae += kernels::trapezoid_abs_diff(pred.data(), truth_on_grid[i].data(), np, dx);
    m.imse += kernels::trapezoid_sq_diff(pred.data(), truth_on_grid[i].data(), np, dx);
    for (size_t k = 0; k < np; ++k)
      indicator[k] = residual_event_time[i] >= grid[k] ? 1.0 : 0.0;
    m.ibs += kernels::trapezoid_sq_diff(pred.data(), indicator.data(), np, dx);
  }
  const double inv_n = 1.0 / static_cast<double>(predicted.size());
  m.imae *= inv_n;
  m.imse *= inv_n;
  m.ibs *= inv_n;
  return m;
}

}  // namespace landmark
