#pragma once

#include <string>
#include <vector>

#include "landmark/ensemble.hpp"
#include "landmark/evaluate.hpp"

namespace landmark {

// A permutable raw variable and the transformed columns it owns.
struct VimpVariable {
  std::string name;
  std::vector<size_t> columns;    // indices into the kept design columns
  std::vector<size_t> eligible;   // rows whose values are shuffled
  std::string scheme;             // "at-risk" | "ratio" | "complete-cases"
};

// Raw variables of a trained model: baseline covariates and the landmark
// time (shuffled among all at-risk subjects), intermediate events (shuffled
// as U_j/T_L ratios), and each marker-occasion (shuffled among subjects with
// the value observed at the landmark).
std::vector<VimpVariable> list_variables(const LandmarkDataset& ds);

struct VimpParams {
  size_t n_perm = 100;
  double t_lo = 0.0;  // evaluation interval for the OOB integrated concordance
  double t_hi = 0.0;
  size_t grid_size = 10;
  uint64_t seed = 1;
  double sc_floor = 0.05;
};

struct VimpEntry {
  std::string name;
  bool estimable = true;
  double mean_drop = 0.0;  // mean over permutations of (baseline - permuted) OOB concordance
  double sd_drop = 0.0;
  std::vector<double> drops;
  std::string scheme;
  size_t n_eligible = 0;
  size_t n_excluded_inbag = 0;  // training subjects in-bag in every tree
};

VimpEntry permutation_importance(const Ensemble& ens, const std::string& variable,
                                 const VimpParams& params);

// Joint importance of a variable group: members with identical eligible
// sets share one permutation; members with different eligibility are
// permuted independently from the same seed stream.
VimpEntry grouped_importance(const Ensemble& ens, const std::vector<std::string>& group,
                             const VimpParams& params);

// Every variable, sorted by descending mean drop (ties alphabetical).
std::vector<VimpEntry> vimp_all(const Ensemble& ens, const VimpParams& params);

}  // namespace landmark
