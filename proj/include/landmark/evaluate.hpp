#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "landmark/ensemble.hpp"
#include "landmark/step_curve.hpp"

namespace landmark {

// One at-risk subject of an evaluation sample.
struct EvalSubject {
  double y = 0.0;      // observed time
  bool delta = false;  // event indicator
  double y_l = 0.0;    // landmark time Y_L (residual time is y - y_l)
  std::vector<double> z;  // baseline covariates (conditional censoring model)
};

// Censoring survival function S_C(t | z): marginal Kaplan-Meier, or a
// survival forest on Z with the roles of T and C swapped.
struct CensoringModel {
  enum class Kind { KaplanMeier, Forest };
  Kind kind = Kind::KaplanMeier;
  StepSurvivalCurve km;
  std::shared_ptr<Ensemble> forest;
  std::vector<StepSurvivalCurve> per_subject;  // cached curves for the fit sample

  double at_left(size_t subject, double t) const {
    return kind == Kind::KaplanMeier ? km.at_left(t) : per_subject[subject].at_left(t);
  }
};

struct CensoringForestParams {
  size_t B = 100;
  size_t min_node_size = 15;
  uint64_t seed = 1;
};

CensoringModel fit_censoring(const std::vector<EvalSubject>& subjects,
                             CensoringModel::Kind kind,
                             const CensoringForestParams& params = {});

struct ConcordancePoint {
  double t = 0.0;
  std::optional<double> con;  // nullopt: no comparable pairs
  double denominator = 0.0;
  size_t n_pairs = 0;
  size_t excluded_pairs = 0;  // dropped by the S_C floor
};

// IPCW concordance at horizon t for per-subject scores g (higher = riskier):
// ordered-pair double sum with weights
// Delta_j I(0 <= Yj-YLj <= t < Yi-YLi, YLi <= tau0, YLj <= tau0)
//   / {S_C(Yj- | Zj) S_C((YLi+t)- | Zi)}.
ConcordancePoint concordance_t(const std::vector<double>& scores,
                               const std::vector<EvalSubject>& subjects,
                               const CensoringModel& cens, double t, double tau0,
                               double sc_floor = 0.05);

enum class ConWeighting { Equal, DenominatorProportional };

struct ConcordanceReport {
  std::vector<ConcordancePoint> points;
  std::optional<double> integrated;
  ConWeighting weighting = ConWeighting::Equal;
  double tau0 = 0.0;
  size_t excluded_pairs = 0;
};

// Concordance on the grid t_j = t_lo + (t_hi - t_lo) j / grid_size,
// j = 1..grid_size, integrated with the requested weighting. Scores at t
// come from score_at(t) (typically 1 - S_hat(t)).
ConcordanceReport integrated_concordance(
    const std::function<std::vector<double>(double)>& score_at,
    const std::vector<EvalSubject>& subjects, const CensoringModel& cens, double t_lo,
    double t_hi, size_t grid_size, ConWeighting weighting, double tau0,
    double sc_floor = 0.05);

// Convenience overload scoring by predicted risk 1 - S_i(t).
ConcordanceReport integrated_concordance(const std::vector<StepSurvivalCurve>& predicted,
                                         const std::vector<EvalSubject>& subjects,
                                         const CensoringModel& cens, double t_lo, double t_hi,
                                         size_t grid_size, ConWeighting weighting, double tau0,
                                         double sc_floor = 0.05);

struct TruthMetrics {
  double imae = 0.0;
  double imse = 0.0;
  double ibs = 0.0;
};

// IMAE/IMSE against the true curves and IBS against the observed residual
// event times, trapezoid-integrated on a uniform grid over [0, t0] with
// grid_size intervals.
TruthMetrics truth_metrics(const std::vector<StepSurvivalCurve>& predicted,
                           const std::vector<std::vector<double>>& truth_on_grid,
                           const std::vector<double>& residual_event_time, double t0,
                           size_t grid_size = 200);

}  // namespace landmark
