#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "landmark/ensemble.hpp"
#include "landmark/preprocess.hpp"
#include "landmark/rng.hpp"
#include "landmark/tree.hpp"

using namespace landmark;

namespace {

Cohort random_cohort(size_t n, size_t pz, uint64_t seed, double event_frac = 0.8) {
  Cohort c;
  for (size_t j = 0; j < pz; ++j) c.schema.z_names.push_back("z" + std::to_string(j + 1));
  Rng rng(seed);
  for (size_t i = 0; i < n; ++i) {
    SubjectRecord r;
    r.id = "s" + std::to_string(i);
    for (size_t j = 0; j < pz; ++j) r.z.push_back(rng.uniform(-1.0, 1.0));
    r.y = 1.0 + rng.exponential(std::exp(r.z[0]));
    r.delta = rng.bernoulli(event_frac);
    c.records.push_back(std::move(r));
  }
  return c;
}

LandmarkDataset random_dataset(size_t n, size_t pz, uint64_t seed) {
  return build_dataset(random_cohort(n, pz, seed), LandmarkSpec::fixed(1.0));
}

std::vector<double> row(const LandmarkDataset& ds, size_t i) {
  std::vector<double> x(ds.p());
  for (size_t c = 0; c < ds.p(); ++c) x[c] = ds.x(i, c);
  return x;
}

}  // namespace

TEST_CASE("single root-only tree without bootstrap reduces to the pooled Nelson-Aalen") {
  LandmarkDataset ds = random_dataset(40, 2, 12);
  EnsembleParams ep;
  ep.B = 1;
  ep.bootstrap = false;
  ep.tree.min_node_size = ds.n();  // forces a root-only tree
  ep.tree.mtry = ds.p();
  Ensemble ens = fit(ds, ep);
  REQUIRE(ens.trees.size() == 1);
  REQUIRE(ens.trees[0].n_splits() == 0);

  std::vector<uint32_t> all(ds.n());
  for (size_t i = 0; i < ds.n(); ++i) all[i] = static_cast<uint32_t>(i);
  StepSurvivalCurve expect = member_nelson_aalen(ds, all);
  StepSurvivalCurve got = ens.predict_survival(row(ds, 0));
  REQUIRE(got.times.size() == expect.times.size());
  for (size_t k = 0; k < got.times.size(); ++k) {
    CHECK(got.times[k] == expect.times[k]);
    CHECK(got.values[k] == doctest::Approx(expect.values[k]).epsilon(1e-12));
  }
}

TEST_CASE("bootstrap multiplicities sum to n in every tree") {
  LandmarkDataset ds = random_dataset(60, 3, 77);
  EnsembleParams ep;
  ep.B = 25;
  ep.tree.min_node_size = 10;
  ep.seed = 5;
  Ensemble ens = fit(ds, ep);
  REQUIRE(ens.boot_count.size() == ep.B);
  for (const auto& counts : ens.boot_count) {
    REQUIRE(counts.size() == ds.n());
    size_t total = 0;
    for (uint32_t w : counts) total += w;
    CHECK(total == ds.n());
  }
}

TEST_CASE("co-membership weights match a direct recount") {
  LandmarkDataset ds = random_dataset(50, 2, 31);
  EnsembleParams ep;
  ep.B = 15;
  ep.tree.min_node_size = 8;
  ep.seed = 9;
  Ensemble ens = fit(ds, ep);
  for (size_t q : {0u, 7u, 23u}) {
    std::vector<double> x = row(ds, q);
    std::vector<double> w = ens.weights_at_risk(x);
    REQUIRE(w.size() == ds.n());
    for (size_t i = 0; i < ds.n(); ++i) {
      double expect = 0.0;
      for (size_t b = 0; b < ep.B; ++b) {
        size_t leaf_x = ens.trees[b].route(x.data());
        size_t leaf_i = ens.trees[b].route(row(ds, i).data());
        if (leaf_x == leaf_i) expect += ens.boot_count[b][i];
      }
      expect /= static_cast<double>(ep.B);
      CHECK(w[i] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("OOB predictions never use in-bag trees") {
  LandmarkDataset ds = random_dataset(45, 2, 61);
  EnsembleParams ep;
  ep.B = 30;
  ep.tree.min_node_size = 8;
  ep.seed = 3;
  Ensemble ens = fit(ds, ep);
  size_t with_oob = 0;
  for (size_t i = 0; i < ds.n(); ++i) {
    std::vector<double> w = ens.oob_weights_at_risk(i, row(ds, i));
    bool any = false;
    for (double v : w) any = any || v > 0.0;
    if (!any) continue;
    ++with_oob;
    // recount using only trees where i is out of bag
    for (size_t j = 0; j < ds.n(); ++j) {
      double expect = 0.0;
      size_t n_oob = 0;
      for (size_t b = 0; b < ep.B; ++b) {
        if (ens.boot_count[b][i] != 0) continue;
        ++n_oob;
        size_t leaf_i = ens.trees[b].route(row(ds, i).data());
        size_t leaf_j = ens.trees[b].route(row(ds, j).data());
        if (leaf_i == leaf_j) expect += ens.boot_count[b][j];
      }
      REQUIRE(n_oob > 0);
      expect /= static_cast<double>(n_oob);
      CHECK(w[j] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  CHECK(with_oob == ds.n());  // B=30 makes all-in-bag essentially impossible
}

TEST_CASE("OOB fraction is near exp(-1)") {
  LandmarkDataset ds = random_dataset(200, 2, 91);
  EnsembleParams ep;
  ep.B = 100;
  ep.tree.min_node_size = 50;
  ep.seed = 17;
  Ensemble ens = fit(ds, ep);
  size_t oob = 0, total = 0;
  for (const auto& counts : ens.boot_count)
    for (uint32_t w : counts) {
      ++total;
      if (w == 0) ++oob;
    }
  double frac = static_cast<double>(oob) / static_cast<double>(total);
  CHECK(frac == doctest::Approx(std::exp(-1.0)).epsilon(0.02));
}

TEST_CASE("martingale and hazard-average estimators agree on a common-leaf forest") {
  // root-only trees without bootstrap: both E1 and E2 reduce to the pooled
  // Nelson-Aalen, so the two modes must coincide exactly
  LandmarkDataset ds = random_dataset(35, 2, 41);
  EnsembleParams ep;
  ep.B = 5;
  ep.bootstrap = false;
  ep.tree.min_node_size = ds.n();
  Ensemble ens = fit(ds, ep);
  StepSurvivalCurve e1 = ens.predict_survival(row(ds, 3), EnsembleMode::Martingale);
  StepSurvivalCurve e2 = ens.predict_survival(row(ds, 3), EnsembleMode::HazardAverage);
  REQUIRE(e1.times.size() == e2.times.size());
  for (size_t k = 0; k < e1.times.size(); ++k)
    CHECK(e1.values[k] == doctest::Approx(e2.values[k]).epsilon(1e-12));
}

TEST_CASE("bundle round trip reproduces predictions byte-for-byte") {
  LandmarkDataset ds = random_dataset(55, 3, 21);
  EnsembleParams ep;
  ep.B = 12;
  ep.tree.min_node_size = 8;
  ep.tree.mtry_by_variable = true;
  ep.seed = 33;
  Ensemble ens = fit(ds, ep);
  std::string path = "test_bundle_roundtrip.json";
  save_bundle(ens, path);
  Ensemble back = load_bundle(path);
  std::remove(path.c_str());

  CHECK(back.params.B == ep.B);
  CHECK(back.params.tree.mtry_by_variable == true);
  CHECK(back.data.n() == ds.n());
  for (size_t i : {0u, 9u, 30u}) {
    StepSurvivalCurve a = ens.predict_survival(row(ds, i));
    StepSurvivalCurve b = back.predict_survival(row(ds, i));
    REQUIRE(a.times.size() == b.times.size());
    for (size_t k = 0; k < a.times.size(); ++k) {
      CHECK(a.times[k] == b.times[k]);
      CHECK(a.values[k] == b.values[k]);
    }
  }
}

TEST_CASE("predicted curves are valid survival functions") {
  LandmarkDataset ds = random_dataset(80, 3, 111);
  EnsembleParams ep;
  ep.B = 40;
  ep.tree.min_node_size = 10;
  ep.seed = 2;
  Ensemble ens = fit(ds, ep);
  for (size_t i = 0; i < ds.n(); i += 7) {
    for (EnsembleMode m : {EnsembleMode::Martingale, EnsembleMode::HazardAverage}) {
      StepSurvivalCurve s = ens.predict_survival(row(ds, i), m);
      double prev = 1.0;
      for (double v : s.values) {
        CHECK(v > 0.0);
        CHECK(v <= prev);
        prev = v;
      }
    }
  }
}

TEST_CASE("same seed gives identical forests, different seeds differ") {
  LandmarkDataset ds = random_dataset(60, 3, 131);
  EnsembleParams ep;
  ep.B = 10;
  ep.tree.min_node_size = 8;
  ep.seed = 44;
  Ensemble a = fit(ds, ep);
  Ensemble b = fit(ds, ep);
  REQUIRE(a.trees.size() == b.trees.size());
  for (size_t t = 0; t < a.trees.size(); ++t) {
    REQUIRE(a.trees[t].nodes.size() == b.trees[t].nodes.size());
    for (size_t k = 0; k < a.trees[t].nodes.size(); ++k) {
      CHECK(a.trees[t].nodes[k].feature == b.trees[t].nodes[k].feature);
      CHECK(a.trees[t].nodes[k].cutoff == b.trees[t].nodes[k].cutoff);
    }
  }
  ep.seed = 45;
  Ensemble c = fit(ds, ep);
  bool differs = false;
  for (size_t t = 0; t < a.trees.size() && !differs; ++t)
    differs = a.boot_count[t] != c.boot_count[t];
  CHECK(differs);
}
