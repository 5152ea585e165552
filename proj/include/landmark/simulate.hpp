#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "landmark/data_model.hpp"
#include "landmark/ensemble.hpp"
#include "landmark/rng.hpp"

namespace landmark {

enum class SimModel { I, II, III, IV, V };
enum class SimScenario { None, A, B, C };

SimModel parse_model(const std::string& s);
SimScenario parse_scenario(const std::string& s);
std::string to_string(SimModel m);
std::string to_string(SimScenario s);

struct SimConfig {
  SimModel model = SimModel::I;
  SimScenario scenario = SimScenario::None;  // required iff model is III/IV/V
  size_t n = 200;               // training sample size at baseline
  size_t n_test = 500;          // at-risk test subjects
  double censor_target = 0.20;  // baseline censoring rate
  uint64_t seed = 1;
  size_t K = 5;                 // fixed marker occasions t_k = k
  double fixed_landmark_a = 2.0;
  double frailty_shape = 2.0, frailty_scale = 0.5;  // gamma, mean 1 variance 0.5
  double eps_sd = 1.0;           // residual noise (models III and IV, Z1 > 0 arm)
  double eps2_sd = 0.5;          // model IV, Z1 <= 0 arm (variance 0.25)
};

void validate(const SimConfig& config);

// Generator internals kept per subject so the oracle can condition exactly.
struct SimSubject {
  std::vector<double> z;       // 10 baseline covariates
  std::vector<double> a, b;    // marker trajectory parameters
  double gamma = 0.0;          // frailty (multi-state models)
  double d = 0.0;              // time of the first transition
  bool pi = false;             // disease indicator
  double r = 0.0;              // residual time after disease
  double t = 0.0;              // true event time
  double c = 0.0;              // censoring time (infinity when uncensored)
};

struct SimData {
  SimConfig config;
  Cohort cohort;
  std::vector<SimSubject> latent;  // aligned with cohort.records
  double censor_rate = 0.0;        // calibrated exponential rate used
};

struct SimPair {
  SimData train;
  SimData test;  // uncensored, exactly config.n_test at-risk subjects
};

// The landmark each design predicts from: t_2 = a for models I/II and
// scenario B, the intermediate event for scenarios A and C.
LandmarkSpec landmark_spec(const SimConfig& config);

// Marker trajectories. Models I/II: W_i(t) = a_i F(b_i t) / t with
// F(x) = 1 - exp(-x^2); models III-V: W_j(t) = a_j {1 - exp(-0.04 t^2)}.
double marker_fixed_design(double a, double b, double t);
double marker_multistate(double a, double t);

// Event-time draw for models I/II by inverting the piecewise cumulative
// hazard; exposed for the oracle self-consistency checks.
double draw_time_fixed_design(SimModel model, const std::vector<double>& z,
                              const std::vector<double>& a, const std::vector<double>& b,
                              Rng& rng);

// Exponential censoring rate hitting the target baseline censoring
// probability within +-0.005, found by bisection against a Monte Carlo
// draw of event times.
double calibrate_censoring(const SimConfig& config, size_t n_draws = 100000);

SimPair generate(const SimConfig& config);

// Approximate q-quantile of T - T_L among at-risk subjects (sets t0).
double residual_quantile(const SimConfig& config, double q, size_t n_draws = 20000,
                         uint64_t seed = 9001);

struct TruthOracle {
  std::string method;  // "numerical-integration" or "monte-carlo"
  size_t mc_reps = 0;
  std::vector<double> grid;         // horizons t, starting at 0
  std::vector<size_t> orig_index;   // at-risk subject -> cohort position
  std::vector<std::string> ids;
  std::vector<std::vector<double>> s;   // per at-risk subject, on the grid
  std::vector<std::vector<double>> se;  // Monte Carlo only
};

// True landmark survival curves for the at-risk subjects of a generated
// sample. Models I/II integrate the fully specified hazard in closed form;
// models III-V average over the latent frailty (and unobserved trajectory
// parameters) weighted by the landmark information.
TruthOracle truth(const SimData& data, const std::vector<double>& grid, size_t mc_reps = 10000,
                  uint64_t seed = 7001);

enum class Method { Tree, E1, E2 };
std::string to_string(Method m);

struct BenchmarkRow {
  Method method;
  double imae = 0.0, imse = 0.0, ibs = 0.0;
  std::optional<double> icon;
  double se_imae = 0.0, se_imse = 0.0, se_ibs = 0.0, se_icon = 0.0;
};

struct BenchmarkResult {
  SimConfig config;
  size_t replicates = 0;
  size_t ensemble_b = 0;
  double t0 = 0.0;
  double censor_rate = 0.0;
  std::vector<BenchmarkRow> rows;
  std::vector<std::vector<double>> replicate_metrics;  // method-major: 4 x replicates blocks
};

struct BenchmarkParams {
  size_t replicates = 10;
  size_t ensemble_b = 200;
  size_t min_node_size = 15;
  size_t forest_mtry = 0;  // 0 -> ceil(sqrt(p)); the single tree always uses all features
  size_t icon_grid = 50;
  size_t metric_grid = 200;
  size_t mc_reps = 10000;
  size_t prune_folds = 10;
};

// Per replicate: fresh training draw, fit each method, score on one shared
// test draw against the truth oracle; means and Monte Carlo standard
// errors over replicates.
BenchmarkResult benchmark(const SimConfig& config, const std::vector<Method>& methods,
                          const BenchmarkParams& params);

// CSV writers. Data files use the ingestion layout (outcome, longitudinal,
// events); the benchmark table is scaled x1000.
void write_cohort_csv(const Cohort& cohort, const std::string& prefix);
void write_truth_csv(const TruthOracle& oracle, const std::string& path);
void write_benchmark_csv(const BenchmarkResult& result, const std::string& path);

}  // namespace landmark
