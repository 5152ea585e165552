#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "landmark/preprocess.hpp"
#include "landmark/step_curve.hpp"
#include "landmark/tree.hpp"

namespace landmark {

enum class EnsembleMode { Martingale, HazardAverage };  // E1 / E2

struct EnsembleParams {
  size_t B = 500;
  TreeParams tree;
  bool bootstrap = true;  // false -> every tree sees each subject once
  uint64_t seed = 1;
  EnsembleMode mode = EnsembleMode::Martingale;
};

struct PredictDiagnostics {
  size_t all_zero_weight_queries = 0;  // fell back to the constant-1 curve
  size_t clamped_values = 0;
};

// Cumulative-hazard step function; the E2 path averages these across trees.
struct StepHazard {
  std::vector<double> times;
  std::vector<double> chf;
};

struct Ensemble {
  LandmarkDataset data;  // transformed at-risk training sample
  EnsembleParams params;
  std::vector<SurvivalTree> trees;
  std::vector<std::vector<uint32_t>> boot_count;  // B x n multiplicities w_bi
  std::vector<std::vector<StepHazard>> leaf_chf;  // per tree, per node (leaves only)

  size_t n() const { return data.n(); }

  // Forest co-membership weights over the at-risk training sample:
  // w_i = (1/B) sum_b w_bi I(subject i shares the leaf of tree b with x).
  std::vector<double> weights_at_risk(const std::vector<double>& x) const;

  // Same weights expanded to the full cohort (Delta_L = 0 subjects get 0).
  std::vector<double> subject_weights(const std::vector<double>& x) const;

  StepSurvivalCurve predict_survival(const std::vector<double>& x,
                                     PredictDiagnostics* diag = nullptr) const;
  StepSurvivalCurve predict_survival(const std::vector<double>& x, EnsembleMode mode,
                                     PredictDiagnostics* diag = nullptr) const;

  // Prediction for training subject i from the trees where i is out-of-bag.
  // Returns false when the subject is in-bag everywhere.
  bool oob_survival(size_t i, StepSurvivalCurve& out, PredictDiagnostics* diag = nullptr) const;

  // OOB weights for an arbitrary query, averaged over the trees with
  // w_bi = 0 (empty when the subject is in-bag everywhere);
  // used by the permutation importance machinery.
  std::vector<double> oob_weights_at_risk(size_t i, const std::vector<double>& x) const;
};

Ensemble fit(LandmarkDataset data, const EnsembleParams& params);

// Versioned JSON model bundle.
void save_bundle(const Ensemble& ens, const std::string& path);
Ensemble load_bundle(const std::string& path);

}  // namespace landmark
