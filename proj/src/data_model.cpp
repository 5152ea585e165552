#include "landmark/data_model.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "landmark/csv.hpp"
#include "landmark/errors.hpp"

namespace landmark {

void validate_record(const SubjectRecord& rec, const DataSchema& schema) {
  auto fail = [&](const std::string& what) {
    throw DataError("subject '" + rec.id + "': " + what);
  };
  if (!(rec.y >= 0.0)) fail("observed time y must be nonnegative");
  if (rec.z.size() != schema.p_z()) fail("baseline covariate count mismatch");
  if (rec.w_times.size() != schema.K()) fail("occasion count mismatch");
  if (rec.w.size() != schema.K() * schema.q()) fail("marker matrix shape mismatch");
  if (rec.u.size() != schema.J()) fail("intermediate event count mismatch");

  double prev = -1.0;
  bool seen_na_time = false;
  for (size_t k = 0; k < schema.K(); ++k) {
    double tk = rec.w_times[k];
    if (is_na(tk)) {
      seen_na_time = true;
      for (size_t m = 0; m < schema.q(); ++m)
        if (!is_na(rec.w[k * schema.q() + m])) fail("marker value at an unrealised occasion");
      continue;
    }
    if (seen_na_time) fail("realised occasion after padding");
    if (!(tk > prev)) fail("measurement times not strictly increasing");
    prev = tk;
    for (size_t m = 0; m < schema.q(); ++m) {
      bool observed = !is_na(rec.w[k * schema.q() + m]);
      if (tk <= rec.y && !observed)
        fail("missing marker value for '" + schema.marker_names[m] + "' at t=" +
             std::to_string(tk));
      if (tk > rec.y && observed) fail("marker value observed after end of follow-up");
    }
  }
  for (size_t j = 0; j < schema.J(); ++j) {
    double uj = rec.u[j];
    if (is_na(uj)) continue;
    if (uj < 0.0) fail("negative intermediate event time");
    if (uj > rec.y)
      fail("intermediate event '" + schema.event_names[j] + "' observed after Y");
  }
}

void validate_cohort(const Cohort& cohort) {
  for (const auto& rec : cohort.records) validate_record(rec, cohort.schema);
}

Cohort ingest_csv(const std::string& outcome_file, const std::string& longitudinal_file,
                  const std::string& events_file, const CsvSchema& cs) {
  Cohort cohort;
  auto outcome = csv::read_file(outcome_file);
  size_t c_id = outcome.col(cs.id), c_y = outcome.col(cs.y), c_delta = outcome.col(cs.delta);
  std::vector<size_t> z_cols;
  for (size_t c = 0; c < outcome.header.size(); ++c) {
    if (c == c_id || c == c_y || c == c_delta) continue;
    z_cols.push_back(c);
    cohort.schema.z_names.push_back(outcome.header[c]);
  }

  std::unordered_map<std::string, size_t> index;
  for (const auto& row : outcome.rows) {
    const std::string& id = row[c_id];
    if (index.count(id)) throw DataError("duplicate subject id '" + id + "' in outcome file");
    SubjectRecord rec;
    rec.id = id;
    rec.y = csv::parse_double(row[c_y], "y of subject " + id);
    double d = csv::parse_double(row[c_delta], "delta of subject " + id);
    if (d != 0.0 && d != 1.0) throw DataError("subject '" + id + "': delta must be 0 or 1");
    rec.delta = d == 1.0;
    for (size_t c : z_cols) rec.z.push_back(csv::parse_double(row[c], "covariate of " + id));
    index[id] = cohort.records.size();
    cohort.records.push_back(std::move(rec));
  }

  // longitudinal long format
  auto longi = csv::read_file(longitudinal_file);
  size_t l_id = longi.col(cs.id), l_t = longi.col(cs.time), l_m = longi.col(cs.marker),
         l_v = longi.col(cs.value);
  std::set<std::string> marker_set;
  for (const auto& row : longi.rows) marker_set.insert(row[l_m]);
  cohort.schema.marker_names.assign(marker_set.begin(), marker_set.end());
  std::unordered_map<std::string, size_t> marker_index;
  for (size_t m = 0; m < cohort.schema.marker_names.size(); ++m)
    marker_index[cohort.schema.marker_names[m]] = m;

  // (subject -> time -> marker values)
  std::vector<std::map<double, std::vector<double>>> obs(cohort.records.size());
  const size_t q = cohort.schema.q();
  for (const auto& row : longi.rows) {
    auto it = index.find(row[l_id]);
    if (it == index.end())
      throw DataError("longitudinal row for unknown subject '" + row[l_id] + "'");
    size_t i = it->second;
    double t = csv::parse_double(row[l_t], "time of subject " + row[l_id]);
    double v = csv::parse_double(row[l_v], "value of subject " + row[l_id]);
    if (t > cohort.records[i].y) {
      ++cohort.dropped_rows;  // unobservable after end of follow-up
      continue;
    }
    auto& slot = obs[i].try_emplace(t, std::vector<double>(q, NAN)).first->second;
    size_t m = marker_index[row[l_m]];
    if (!is_na(slot[m]))
      throw DataError("duplicate (id, time, marker) row: subject '" + row[l_id] + "', t=" +
                      std::to_string(t) + ", marker '" + row[l_m] + "'");
    slot[m] = v;
  }

  // events file
  auto events = csv::read_file(events_file);
  size_t e_id = events.col(cs.id), e_name = events.col(cs.event), e_t = events.col(cs.time);
  std::set<std::string> event_set;
  for (const auto& row : events.rows) event_set.insert(row[e_name]);
  cohort.schema.event_names.assign(event_set.begin(), event_set.end());
  std::unordered_map<std::string, size_t> event_index;
  for (size_t j = 0; j < cohort.schema.event_names.size(); ++j)
    event_index[cohort.schema.event_names[j]] = j;

  for (auto& rec : cohort.records) rec.u.assign(cohort.schema.J(), NAN);
  for (const auto& row : events.rows) {
    auto it = index.find(row[e_id]);
    if (it == index.end()) throw DataError("event row for unknown subject '" + row[e_id] + "'");
    auto& rec = cohort.records[it->second];
    size_t j = event_index[row[e_name]];
    if (!is_na(rec.u[j]))
      throw DataError("duplicate event '" + row[e_name] + "' for subject '" + row[e_id] + "'");
    rec.u[j] = csv::parse_double(row[e_t], "event time of subject " + row[e_id]);
  }

  // assemble marker matrices on a per-subject occasion grid, padded to max K
  size_t K = 0;
  for (const auto& o : obs) K = std::max(K, o.size());
  cohort.schema.n_occasions = K;
  for (size_t i = 0; i < cohort.records.size(); ++i) {
    auto& rec = cohort.records[i];
    rec.w_times.assign(K, NAN);
    rec.w.assign(K * q, NAN);
    size_t k = 0;
    for (const auto& [t, vals] : obs[i]) {
      rec.w_times[k] = t;
      for (size_t m = 0; m < q; ++m) rec.w[k * q + m] = vals[m];
      ++k;
    }
  }

  validate_cohort(cohort);
  return cohort;
}

LandmarkView landmark_view(const SubjectRecord& rec, const DataSchema& schema,
                           const LandmarkSpec& spec) {
  LandmarkView view;
  double t_l;
  if (spec.kind == LandmarkSpec::Kind::Fixed) {
    if (spec.a < 0.0) throw DataError("fixed landmark time must be nonnegative");
    t_l = spec.a;
    // y >= a means neither failure nor censoring occurred before a
    // (ties count as at-risk: Delta_L uses <=)
    if (rec.y < t_l) return view;
  } else {
    if (spec.event_j >= schema.J()) throw DataError("landmark event index out of range");
    double uj = rec.u[spec.event_j];
    if (is_na(uj)) return view;  // intermediate event not observed
    t_l = uj;  // observed implies U_j <= Y, so the subject is at risk at T_L
  }
  view.at_risk = true;
  view.t_l = t_l;
  view.residual_y = rec.y - t_l;
  view.delta = rec.delta;

  const size_t q = schema.q();
  view.w_at.assign(schema.K() * q, NAN);
  for (size_t k = 0; k < schema.K(); ++k) {
    double tk = rec.w_times[k];
    if (is_na(tk) || tk > t_l) continue;  // NA: collected after the landmark
    for (size_t m = 0; m < q; ++m) view.w_at[k * q + m] = rec.w[k * q + m];
  }
  view.u_at.assign(schema.J(), NAN);
  for (size_t j = 0; j < schema.J(); ++j) {
    double uj = rec.u[j];
    if (!is_na(uj) && uj <= t_l) view.u_at[j] = uj;  // otherwise U_j(T_L) = T_L+
  }
  return view;
}

}  // namespace landmark
