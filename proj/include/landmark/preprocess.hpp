#pragma once

#include <string>
#include <vector>

#include "landmark/data_model.hpp"

namespace landmark {

enum class FeatureKind { LandmarkTime, Baseline, MarkerPlus, MarkerMinus, EventRatio };

struct FeatureInfo {
  FeatureKind kind;
  size_t k = 0;  // occasion (markers)
  size_t m = 0;  // marker index
  size_t j = 0;  // event index
  size_t z = 0;  // baseline index
  std::string name;
};

// Full transformed layout: [landmark_time | z_1..z_pz | marker (+,-) pairs | event ratios],
// of length 1 + p_z + 2Kq + J.
std::vector<FeatureInfo> feature_layout(const DataSchema& schema);

// Algorithm-1 transform of one at-risk view. Marker value v becomes the
// pair (v, v), NA becomes (M, -M); an observed intermediate event becomes
// the ratio U_j/T_L in (0, 1], an unobserved one becomes M.
std::vector<double> transform(const LandmarkView& view, const std::vector<double>& z,
                              double big_m);

// Sentinel policy: M = 10 * (1 + max |finite candidate feature value|),
// strictly outside the training feature range.
double choose_big_m(const std::vector<const LandmarkView*>& views,
                    const std::vector<const std::vector<double>*>& zs);

// Transformed, de-duplicated training design over the at-risk subsample.
struct LandmarkDataset {
  DataSchema schema;
  LandmarkSpec spec;
  size_t n_total = 0;                // all subjects, including not-at-risk
  std::vector<size_t> orig_index;    // at-risk subject -> position in cohort
  std::vector<std::string> ids;
  std::vector<double> y_l;           // landmark times Y_L
  std::vector<double> residual_time; // Y - Y_L
  std::vector<uint8_t> event;        // Delta
  double big_m = 0.0;
  double tau0 = 0.0;
  std::vector<FeatureInfo> all_features;  // full layout
  std::vector<size_t> kept;               // columns kept after de-duplication
  std::vector<double> X;                  // n x kept.size(), row-major
  std::vector<uint32_t> time_order;       // indices sorted by residual time

  size_t n() const { return ids.size(); }
  size_t p() const { return kept.size(); }
  double x(size_t i, size_t c) const { return X[i * kept.size() + c]; }
  const FeatureInfo& feature(size_t c) const { return all_features[kept[c]]; }
  std::vector<std::string> feature_names() const;
};

// Builds the at-risk design matrix: landmark views, sentinel M, transform,
// then removal of zero-variance and duplicate columns (dedup switchable for
// the equivalence tests).
LandmarkDataset build_dataset(const Cohort& cohort, const LandmarkSpec& spec,
                              bool dedup = true);

// Kept columns grouped by raw variable: the landmark time, each baseline
// covariate, each marker (all its occasions and both signs), each event
// ratio. Used when mtry counts variables instead of design columns.
std::vector<std::vector<size_t>> variable_groups(const LandmarkDataset& ds);

// Transform a prediction-time view against a trained dataset: applies the
// training sentinel, clamps finite values that exceed it (counted in
// *clamped), and selects the kept columns.
std::vector<double> transform_query(const LandmarkDataset& ds, const LandmarkView& view,
                                    const std::vector<double>& z, size_t* clamped = nullptr);

// Debug dump of the processed design matrix (mirrors the processed columns).
void write_design_csv(const LandmarkDataset& ds, const std::string& path);

}  // namespace landmark
