#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "landmark/errors.hpp"
#include "landmark/evaluate.hpp"
#include "landmark/rng.hpp"

using namespace landmark;

namespace {

// Independent pair-enumeration implementation of the IPCW concordance at t.
// Written from the estimator definition, not from the library code.
double brute_concordance(const std::vector<double>& g, const std::vector<EvalSubject>& s,
                         const CensoringModel& cens, double t, double tau0,
                         double sc_floor = 0.05) {
  double num = 0.0, den = 0.0;
  for (size_t j = 0; j < s.size(); ++j)
    for (size_t i = 0; i < s.size(); ++i) {
      if (i == j) continue;
      double rj = s[j].y - s[j].y_l, ri = s[i].y - s[i].y_l;
      bool keep = s[j].delta && rj >= 0.0 && rj <= t && ri > t && s[i].y_l <= tau0 &&
                  s[j].y_l <= tau0;
      if (!keep) continue;
      double scj = cens.at_left(j, s[j].y);
      double sci = cens.at_left(i, s[i].y_l + t);
      if (scj < sc_floor || sci < sc_floor) continue;
      double w = 1.0 / (scj * sci);
      num += w * (g[j] > g[i] ? 1.0 : (g[j] == g[i] ? 0.5 : 0.0));
      den += w;
    }
  return den > 0.0 ? num / den : -1.0;
}

struct RandomEval {
  std::vector<EvalSubject> subjects;
  std::vector<double> scores;
};

RandomEval random_eval(size_t n, uint64_t seed, bool censoring, bool with_ties) {
  Rng rng(seed);
  RandomEval re;
  for (size_t i = 0; i < n; ++i) {
    EvalSubject s;
    s.y_l = rng.uniform(0.0, 1.0);
    s.y = s.y_l + rng.exponential(1.0);
    s.delta = censoring ? rng.bernoulli(0.7) : true;
    re.subjects.push_back(s);
    double g = rng.uniform(0.0, 1.0);
    if (with_ties) g = std::round(g * 5.0) / 5.0;  // heavy ties
    re.scores.push_back(g);
  }
  return re;
}

}  // namespace

TEST_CASE("censoring Kaplan-Meier on a hand-worked three-subject sample") {
  // delta = 0 marks a censoring event for S_C: censorings at y = 1 and 3
  std::vector<EvalSubject> s = {{1.0, false, 0.0, {}}, {2.0, true, 0.0, {}},
                                {3.0, false, 0.0, {}}};
  CensoringModel cens = fit_censoring(s, CensoringModel::Kind::KaplanMeier);
  CHECK(cens.km.at_left(1.0) == 1.0);
  CHECK(cens.km.at(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(cens.km.at_left(3.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(cens.km.at(3.0) == 0.0);
}

TEST_CASE("concordance matches the brute-force pair enumeration") {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    RandomEval re = random_eval(5 + seed % 21, seed, true, seed % 2 == 0);
    CensoringModel cens = fit_censoring(re.subjects, CensoringModel::Kind::KaplanMeier);
    double tau0 = 0.0;
    for (const auto& s : re.subjects) tau0 = std::max(tau0, s.y_l);
    for (double t : {0.2, 0.5, 1.0, 2.0}) {
      auto pt = concordance_t(re.scores, re.subjects, cens, t, tau0);
      double expect = brute_concordance(re.scores, re.subjects, cens, t, tau0);
      if (expect < 0.0) {
        CHECK(!pt.con.has_value());
      } else {
        REQUIRE(pt.con.has_value());
        CHECK(*pt.con == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("zero censoring reduces to plain empirical pair concordance") {
  RandomEval re = random_eval(18, 3, false, false);
  CensoringModel cens = fit_censoring(re.subjects, CensoringModel::Kind::KaplanMeier);
  // no censoring events: S_C stays 1 and all IPCW weights are 1
  double t = 0.8, tau0 = 10.0;
  auto pt = concordance_t(re.scores, re.subjects, cens, t, tau0);
  double num = 0.0, den = 0.0;
  for (size_t j = 0; j < re.subjects.size(); ++j)
    for (size_t i = 0; i < re.subjects.size(); ++i) {
      if (i == j) continue;
      double rj = re.subjects[j].y - re.subjects[j].y_l;
      double ri = re.subjects[i].y - re.subjects[i].y_l;
      if (!(rj <= t && ri > t)) continue;
      num += re.scores[j] > re.scores[i] ? 1.0 : (re.scores[j] == re.scores[i] ? 0.5 : 0.0);
      den += 1.0;
    }
  REQUIRE(pt.con.has_value());
  CHECK(*pt.con == doctest::Approx(num / den).epsilon(1e-12));
}

TEST_CASE("perfectly ranked scores give 1, constant scores give one half") {
  RandomEval re = random_eval(15, 9, false, false);
  CensoringModel cens = fit_censoring(re.subjects, CensoringModel::Kind::KaplanMeier);
  // score by the negated residual time: earlier failures ranked riskier
  std::vector<double> perfect(re.subjects.size());
  for (size_t i = 0; i < perfect.size(); ++i)
    perfect[i] = -(re.subjects[i].y - re.subjects[i].y_l);
  auto pt = concordance_t(perfect, re.subjects, cens, 0.7, 10.0);
  REQUIRE(pt.con.has_value());
  CHECK(*pt.con == 1.0);

  std::vector<double> flat(re.subjects.size(), 0.42);
  auto half = concordance_t(flat, re.subjects, cens, 0.7, 10.0);
  REQUIRE(half.con.has_value());
  CHECK(*half.con == 0.5);
}

TEST_CASE("concordance is invariant to strictly increasing score transforms") {
  RandomEval re = random_eval(20, 17, true, true);
  CensoringModel cens = fit_censoring(re.subjects, CensoringModel::Kind::KaplanMeier);
  for (double t : {0.3, 0.9}) {
    auto base = concordance_t(re.scores, re.subjects, cens, t, 5.0);
    std::vector<double> affine(re.scores.size()), cube(re.scores.size());
    for (size_t i = 0; i < re.scores.size(); ++i) {
      affine[i] = 2.0 * re.scores[i] + 1.0;
      cube[i] = re.scores[i] * re.scores[i] * re.scores[i];
    }
    auto a = concordance_t(affine, re.subjects, cens, t, 5.0);
    auto c = concordance_t(cube, re.subjects, cens, t, 5.0);
    REQUIRE(base.con.has_value());
    CHECK(*a.con == *base.con);
    CHECK(*c.con == *base.con);
  }
}

TEST_CASE("negating tie-free scores complements the concordance") {
  RandomEval re = random_eval(16, 23, true, false);
  CensoringModel cens = fit_censoring(re.subjects, CensoringModel::Kind::KaplanMeier);
  std::vector<double> neg(re.scores.size());
  for (size_t i = 0; i < neg.size(); ++i) neg[i] = -re.scores[i];
  auto base = concordance_t(re.scores, re.subjects, cens, 0.6, 5.0);
  auto flip = concordance_t(neg, re.subjects, cens, 0.6, 5.0);
  REQUIRE(base.con.has_value());
  CHECK(*flip.con == doctest::Approx(1.0 - *base.con).epsilon(1e-12));
}

TEST_CASE("integrated concordance averages the grid points per its weighting") {
  RandomEval re = random_eval(22, 31, true, false);
  CensoringModel cens = fit_censoring(re.subjects, CensoringModel::Kind::KaplanMeier);
  auto score_at = [&](double) { return re.scores; };
  for (ConWeighting w : {ConWeighting::Equal, ConWeighting::DenominatorProportional}) {
    ConcordanceReport rep =
        integrated_concordance(score_at, re.subjects, cens, 0.0, 1.5, 10, w, 5.0);
    REQUIRE(rep.points.size() == 10);
    double num = 0.0, den = 0.0;
    for (const auto& pt : rep.points) {
      if (!pt.con.has_value()) continue;
      double wt = w == ConWeighting::Equal ? 1.0 : pt.denominator;
      num += wt * *pt.con;
      den += wt;
    }
    REQUIRE(rep.integrated.has_value());
    CHECK(*rep.integrated == doctest::Approx(num / den).epsilon(1e-12));
  }
  CHECK_THROWS_AS(concordance_t(re.scores, re.subjects, cens, 0.0, 5.0), NumericError);
}

TEST_CASE("Brier score of the linear survival curve matches the closed form") {
  // S(t) = 1 - t/2 on [0, 1], one subject failing at residual time 0.5:
  // IBS = int_0^0.5 (t/2)^2 dt + int_0.5^1 (1 - t/2)^2 dt = 1/96 + 19/96 = 5/24
  const size_t grid_size = 20000;
  std::vector<double> grid = uniform_grid(0.0, 1.0, grid_size + 1);
  StepSurvivalCurve s;
  for (size_t k = 1; k < grid.size(); ++k) {
    s.times.push_back(grid[k]);
    s.values.push_back(1.0 - grid[k] / 2.0);
  }
  std::vector<std::vector<double>> truth(1);
  s.sample(grid, truth[0]);  // truth == prediction, isolating the IBS term
  TruthMetrics m = truth_metrics({s}, truth, {0.5}, 1.0, grid_size);
  CHECK(m.imae == 0.0);
  CHECK(m.imse == 0.0);
  CHECK(m.ibs == doctest::Approx(5.0 / 24.0).epsilon(1e-4));
}

TEST_CASE("IMAE and IMSE against an exponential truth match closed forms") {
  // prediction identically 1 vs truth exp(-t) on [0, 1]:
  // IMAE = 1/e, IMSE = -1/2 + 2/e - exp(-2)/2
  const size_t grid_size = 400;
  std::vector<double> grid = uniform_grid(0.0, 1.0, grid_size + 1);
  std::vector<std::vector<double>> truth(1);
  for (double t : grid) truth[0].push_back(std::exp(-t));
  StepSurvivalCurve ones;  // empty curve is identically 1
  TruthMetrics m = truth_metrics({ones}, truth, {2.0}, 1.0, grid_size);
  CHECK(m.imae == doctest::Approx(std::exp(-1.0)).epsilon(1e-4));
  CHECK(m.imse ==
        doctest::Approx(-0.5 + 2.0 * std::exp(-1.0) - 0.5 * std::exp(-2.0)).epsilon(1e-4));
  CHECK(m.ibs == 0.0);  // subject survives past t0, indicator stays 1
}
