#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace landmark {

// Shared shape of a study: every subject carries the same (K, q, J, p_z).
struct DataSchema {
  std::vector<std::string> z_names;       // baseline covariates, length p_z
  std::vector<std::string> marker_names;  // longitudinal markers, length q
  std::vector<std::string> event_names;   // intermediate events, length J
  size_t n_occasions = 0;                 // K measurement occasions

  size_t p_z() const { return z_names.size(); }
  size_t q() const { return marker_names.size(); }
  size_t J() const { return event_names.size(); }
  size_t K() const { return n_occasions; }
};

// One subject's censored outcome and predictor history.
//
// NaN is used for two unobservable states that never co-exist with data:
//  - w_times[k] = NaN: the k-th measurement occasion never realised for this
//    subject (padding when occasion counts differ across subjects);
//  - w[k*q+m]   = NaN: the value was not collected by end of follow-up
//    (t_k > y). Values genuinely missing at an observed occasion are
//    rejected at ingestion.
//  - u[j]       = NaN: the j-th intermediate event was not observed by y.
struct SubjectRecord {
  std::string id;
  double y = 0.0;    // min(T, C)
  bool delta = false;  // I(T <= C)
  std::vector<double> z;
  std::vector<double> w_times;  // K, finite entries strictly increasing and first
  std::vector<double> w;        // K x q row-major
  std::vector<double> u;        // J
};

struct Cohort {
  DataSchema schema;
  std::vector<SubjectRecord> records;
  size_t dropped_rows = 0;  // longitudinal rows after Y, dropped with a warning
};

struct LandmarkSpec {
  enum class Kind { Fixed, Event };
  Kind kind = Kind::Fixed;
  double a = 0.0;       // Fixed: landmark time
  size_t event_j = 0;   // Event: 0-based index into schema.event_names
  std::optional<double> tau0;  // evaluation horizon; default max observed landmark time

  static LandmarkSpec fixed(double a) { return {Kind::Fixed, a, 0, {}}; }
  static LandmarkSpec event(size_t j) { return {Kind::Event, 0.0, j, {}}; }
};

// The subject's data as seen from the landmark. When at_risk is false the
// subject failed or was censored before the landmark and the remaining
// fields are unset.
struct LandmarkView {
  bool at_risk = false;   // Delta_L
  double t_l = 0.0;       // landmark time (Y_L when at risk)
  double residual_y = 0.0;  // Y - Y_L
  bool delta = false;       // outcome event indicator
  std::vector<double> w_at;  // K x q; NaN = NA (t_k > T_L)
  std::vector<double> u_at;  // J; NaN = T_L+ (not observed by T_L)
};

inline bool is_na(double v) { return std::isnan(v); }

// Validates a record against the schema invariants; throws DataError naming
// the offending subject.
void validate_record(const SubjectRecord& rec, const DataSchema& schema);

void validate_cohort(const Cohort& cohort);

// Column mapping for the three-file long CSV format.
struct CsvSchema {
  std::string id = "id";
  std::string y = "y";
  std::string delta = "delta";
  std::string time = "time";
  std::string marker = "marker";
  std::string value = "value";
  std::string event = "event";
};

// Long-format ingestion: outcome file (id, y, delta, z_*), longitudinal file
// (id, time, marker, value), events file (id, event, time). Longitudinal
// rows recorded after Y are dropped and counted in Cohort::dropped_rows.
Cohort ingest_csv(const std::string& outcome_file, const std::string& longitudinal_file,
                  const std::string& events_file, const CsvSchema& schema = {});

// Landmark construction. Deterministic and idempotent. Ties T_L = Y count
// as at-risk (the indicator uses <=).
LandmarkView landmark_view(const SubjectRecord& rec, const DataSchema& schema,
                           const LandmarkSpec& spec);

}  // namespace landmark
