#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "landmark/data_model.hpp"
#include "landmark/ensemble.hpp"
#include "landmark/errors.hpp"
#include "landmark/evaluate.hpp"
#include "landmark/kernels.hpp"
#include "landmark/preprocess.hpp"
#include "landmark/simulate.hpp"
#include "landmark/tree.hpp"
#include "landmark/vimp.hpp"

namespace {

using nlohmann::json;
using namespace landmark;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

// provenance echo written next to every output
void write_run_config(const std::string& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

struct DataFlags {
  std::string outcome, longitudinal, events;

  void add(CLI::App* cmd, bool required) {
    auto* o = cmd->add_option("--outcome", outcome, "outcome CSV (id,y,delta,z...)");
    auto* l = cmd->add_option("--longitudinal", longitudinal,
                              "longitudinal CSV (id,time,marker,value)");
    auto* e = cmd->add_option("--events", events, "intermediate-event CSV (id,event,time)");
    if (required) {
      o->required();
      l->required();
      e->required();
    }
  }

  Cohort load() const { return ingest_csv(outcome, longitudinal, events); }
};

struct LandmarkFlags {
  double fixed_time = -1.0;
  std::string event_name;

  void add(CLI::App* cmd) {
    cmd->add_option("--landmark-time", fixed_time, "fixed landmark time a");
    cmd->add_option("--landmark-event", event_name, "intermediate event acting as landmark");
  }

  LandmarkSpec resolve(const DataSchema& schema) const {
    if (!event_name.empty()) {
      if (fixed_time >= 0.0)
        throw DataError("give either --landmark-time or --landmark-event, not both");
      for (size_t j = 0; j < schema.J(); ++j)
        if (schema.event_names[j] == event_name) return LandmarkSpec::event(j);
      throw DataError("unknown landmark event '" + event_name + "'");
    }
    if (fixed_time < 0.0)
      throw DataError("a landmark is required: --landmark-time or --landmark-event");
    return LandmarkSpec::fixed(fixed_time);
  }

  json echo() const {
    json j;
    if (!event_name.empty())
      j["landmark_event"] = event_name;
    else
      j["landmark_time"] = fixed_time;
    return j;
  }
};

SimConfig make_sim_config(const std::string& model, const std::string& scenario, size_t n,
                          size_t n_test, double censor, uint64_t seed) {
  SimConfig config;
  config.model = parse_model(model);
  config.scenario = parse_scenario(scenario);
  config.n = n;
  config.n_test = n_test;
  config.censor_target = censor;
  config.seed = seed;
  validate(config);
  return config;
}

json sim_echo(const SimConfig& c) {
  return json{{"model", to_string(c.model)},   {"scenario", to_string(c.scenario)},
              {"n", c.n},                      {"n_test", c.n_test},
              {"censor_target", c.censor_target}, {"seed", c.seed}};
}

void write_curves_csv(const std::string& path, const std::vector<std::string>& ids,
                      const std::vector<StepSurvivalCurve>& curves) {
  auto out = open_out(path);
  out << "id,t,s_hat\n";
  for (size_t i = 0; i < ids.size(); ++i) {
    out << ids[i] << ",0," << fmt(1.0) << "\n";
    for (size_t k = 0; k < curves[i].times.size(); ++k)
      out << ids[i] << "," << fmt(curves[i].times[k]) << "," << fmt(curves[i].values[k])
          << "\n";
  }
}

// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& model, const std::string& scenario, size_t n,
                 size_t n_test, double censor, uint64_t seed, size_t mc_reps,
                 size_t truth_grid, const std::string& out) {
  SimConfig config = make_sim_config(model, scenario, n, n_test, censor, seed);
  SimPair pair = generate(config);
  double t0 = residual_quantile(config, 0.9);
  std::vector<double> grid = uniform_grid(0.0, t0, truth_grid + 1);
  TruthOracle oracle = truth(pair.test, grid, mc_reps, Rng::derive(config.seed, 88));

  write_cohort_csv(pair.train.cohort, out + "_train");
  write_cohort_csv(pair.test.cohort, out + "_test");
  write_truth_csv(oracle, out + "_truth.csv");

  json echo = sim_echo(config);
  echo["command"] = "simulate";
  echo["censor_rate"] = pair.train.censor_rate;
  echo["t0"] = t0;
  echo["mc_reps"] = mc_reps;
  echo["truth_grid"] = truth_grid;
  echo["truth_method"] = oracle.method;
  write_run_config(out + "_run.json", echo);

  std::cout << "wrote " << out << "_{train,test}_{outcome,longitudinal,events}.csv and "
            << out << "_truth.csv (t0=" << fmt(t0) << ")\n";
  return 0;
}

int cmd_train(const DataFlags& data, const LandmarkFlags& lm, size_t B, size_t mtry,
              bool mtry_columns, size_t min_node_size, uint64_t seed, const std::string& mode,
              bool no_bootstrap, const std::string& out) {
  Cohort cohort = data.load();
  LandmarkSpec spec = lm.resolve(cohort.schema);
  LandmarkDataset ds = build_dataset(cohort, spec);

  EnsembleParams params;
  params.B = B;
  params.tree.min_node_size = min_node_size;
  params.tree.mtry = mtry;
  params.tree.mtry_by_variable = !mtry_columns;
  params.bootstrap = !no_bootstrap;
  params.seed = seed;
  if (mode == "e1")
    params.mode = EnsembleMode::Martingale;
  else if (mode == "e2")
    params.mode = EnsembleMode::HazardAverage;
  else
    throw DataError("mode must be e1 or e2");

  Ensemble ens = fit(ds, params);
  save_bundle(ens, out);

  size_t events = 0;
  for (uint8_t e : ens.data.event) events += e;
  json echo = lm.echo();
  echo["command"] = "train";
  echo["B"] = B;
  echo["mtry"] = mtry;
  echo["mtry_by_variable"] = !mtry_columns;
  echo["min_node_size"] = min_node_size;
  echo["seed"] = seed;
  echo["mode"] = mode;
  echo["bootstrap"] = !no_bootstrap;
  echo["n_at_risk"] = ens.data.n();
  echo["n_events"] = events;
  echo["p_after_dedup"] = ens.data.p();
  write_run_config(out + ".run.json", echo);

  std::cout << "trained on " << ens.data.n() << " at-risk subjects (" << events
            << " events), B=" << B << ", p=" << ens.data.p() << " -> " << out << "\n";
  return 0;
}

int cmd_predict(const std::string& bundle, const DataFlags& data, const std::string& mode,
                const std::string& out) {
  Ensemble ens = load_bundle(bundle);
  Cohort cohort = data.load();
  if (cohort.schema.z_names != ens.data.schema.z_names ||
      cohort.schema.marker_names != ens.data.schema.marker_names ||
      cohort.schema.event_names != ens.data.schema.event_names)
    throw DataError("query schema does not match the model bundle");

  EnsembleMode m = ens.params.mode;
  if (mode == "e1")
    m = EnsembleMode::Martingale;
  else if (mode == "e2")
    m = EnsembleMode::HazardAverage;
  else if (!mode.empty())
    throw DataError("mode must be e1 or e2");

  std::vector<std::string> ids;
  std::vector<StepSurvivalCurve> curves;
  size_t skipped = 0, clamped = 0;
  PredictDiagnostics diag;
  for (const auto& rec : cohort.records) {
    LandmarkView view = landmark_view(rec, cohort.schema, ens.data.spec);
    if (!view.at_risk) {
      ++skipped;
      continue;
    }
    std::vector<double> x = transform_query(ens.data, view, rec.z, &clamped);
    ids.push_back(rec.id);
    curves.push_back(ens.predict_survival(x, m, &diag));
  }
  write_curves_csv(out, ids, curves);

  json echo;
  echo["command"] = "predict";
  echo["bundle"] = bundle;
  echo["mode"] = m == EnsembleMode::Martingale ? "e1" : "e2";
  echo["seed"] = ens.params.seed;
  echo["n_predicted"] = ids.size();
  echo["n_not_at_risk"] = skipped;
  echo["clamped_values"] = clamped;
  echo["zero_weight_fallbacks"] = diag.all_zero_weight_queries;
  write_run_config(out + ".run.json", echo);

  std::cout << "predicted " << ids.size() << " subjects (" << skipped
            << " not at risk) -> " << out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& bundle, const DataFlags& data, double t_lo, double t_hi,
                 size_t grid_size, const std::string& weighting, double tau0_flag,
                 const std::string& censoring, uint64_t seed, const std::string& mode,
                 const std::string& out) {
  Ensemble ens = load_bundle(bundle);
  Cohort cohort = data.load();
  if (!(t_hi > t_lo)) throw DataError("need --t-hi > --t-lo");

  EnsembleMode m = ens.params.mode;
  if (mode == "e1") m = EnsembleMode::Martingale;
  else if (mode == "e2") m = EnsembleMode::HazardAverage;
  else if (!mode.empty()) throw DataError("mode must be e1 or e2");

  std::vector<EvalSubject> eval;
  std::vector<StepSurvivalCurve> curves;
  size_t skipped = 0;
  for (const auto& rec : cohort.records) {
    LandmarkView view = landmark_view(rec, cohort.schema, ens.data.spec);
    if (!view.at_risk) {
      ++skipped;
      continue;
    }
    std::vector<double> x = transform_query(ens.data, view, rec.z);
    eval.push_back({rec.y, rec.delta, view.t_l, rec.z});
    curves.push_back(ens.predict_survival(x, m));
  }

  double tau0 = tau0_flag;
  if (tau0 <= 0.0)
    for (const EvalSubject& s : eval) tau0 = std::max(tau0, s.y_l);

  CensoringModel::Kind kind;
  if (censoring == "km")
    kind = CensoringModel::Kind::KaplanMeier;
  else if (censoring == "forest")
    kind = CensoringModel::Kind::Forest;
  else
    throw DataError("censoring model must be km or forest");
  CensoringForestParams cf;
  cf.seed = seed;
  CensoringModel cens = fit_censoring(eval, kind, cf);

  ConWeighting w;
  if (weighting == "equal")
    w = ConWeighting::Equal;
  else if (weighting == "denom")
    w = ConWeighting::DenominatorProportional;
  else
    throw DataError("weighting must be equal or denom");

  ConcordanceReport report =
      integrated_concordance(curves, eval, cens, t_lo, t_hi, grid_size, w, tau0);

  auto file = open_out(out);
  file << "t,con,denominator,n_pairs,excluded_pairs\n";
  for (const ConcordancePoint& p : report.points) {
    file << fmt(p.t) << "," << (p.con ? fmt(*p.con) : std::string("NA")) << ","
         << fmt(p.denominator) << "," << p.n_pairs << "," << p.excluded_pairs << "\n";
  }

  json echo;
  echo["command"] = "evaluate";
  echo["bundle"] = bundle;
  echo["t_lo"] = t_lo;
  echo["t_hi"] = t_hi;
  echo["grid_size"] = grid_size;
  echo["weighting"] = weighting;
  echo["censoring"] = censoring;
  echo["tau0"] = tau0;
  echo["seed"] = seed;
  echo["mode"] = m == EnsembleMode::Martingale ? "e1" : "e2";
  echo["n_evaluated"] = eval.size();
  echo["n_not_at_risk"] = skipped;
  if (report.integrated) echo["integrated_concordance"] = *report.integrated;
  write_run_config(out + ".run.json", echo);

  if (report.integrated)
    std::cout << "integrated concordance on [" << fmt(t_lo) << "," << fmt(t_hi)
              << "]: " << fmt(*report.integrated) << "\n";
  else
    std::cout << "no comparable pairs on the requested grid\n";
  return 0;
}

int cmd_vimp(const std::string& bundle, size_t n_perm, double t_lo, double t_hi,
             size_t grid_size, uint64_t seed, const std::vector<std::string>& groups,
             const std::string& out) {
  Ensemble ens = load_bundle(bundle);
  VimpParams params;
  params.n_perm = n_perm;
  params.t_lo = t_lo;
  params.t_hi = t_hi;
  params.grid_size = grid_size;
  params.seed = seed;

  std::vector<VimpEntry> entries;
  if (groups.empty()) {
    entries = vimp_all(ens, params);
  } else {
    for (const std::string& g : groups) {
      std::vector<std::string> members;
      std::string cur;
      for (char ch : g) {
        if (ch == ',') {
          if (!cur.empty()) members.push_back(cur);
          cur.clear();
        } else {
          cur += ch;
        }
      }
      if (!cur.empty()) members.push_back(cur);
      entries.push_back(grouped_importance(ens, members, params));
    }
    std::sort(entries.begin(), entries.end(), [](const VimpEntry& a, const VimpEntry& b) {
      if (a.mean_drop != b.mean_drop) return a.mean_drop > b.mean_drop;
      return a.name < b.name;
    });
  }

  auto file = open_out(out);
  file << "variable,mean_drop,sd_drop,n_eligible,scheme\n";
  for (const VimpEntry& e : entries) {
    if (!e.estimable) {
      file << e.name << ",NA,NA," << e.n_eligible << "," << e.scheme << "\n";
      continue;
    }
    file << e.name << "," << fmt(e.mean_drop) << "," << fmt(e.sd_drop) << "," << e.n_eligible
         << "," << e.scheme << "\n";
  }

  json echo;
  echo["command"] = "vimp";
  echo["bundle"] = bundle;
  echo["n_perm"] = n_perm;
  echo["t_lo"] = t_lo;
  echo["t_hi"] = t_hi;
  echo["grid_size"] = grid_size;
  echo["seed"] = seed;
  if (!groups.empty()) echo["groups"] = groups;
  write_run_config(out + ".run.json", echo);

  std::cout << "importance of " << entries.size() << " variables -> " << out << "\n";
  return 0;
}

int cmd_benchmark(const std::string& model, const std::string& scenario, size_t n,
                  size_t n_test, double censor, uint64_t seed, size_t replicates, size_t B,
                  const std::string& methods_flag, size_t mc_reps, size_t forest_mtry,
                  size_t min_node_size, const std::string& out) {
  SimConfig config = make_sim_config(model, scenario, n, n_test, censor, seed);
  std::vector<Method> methods;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    if (cur == "tree") methods.push_back(Method::Tree);
    else if (cur == "e1") methods.push_back(Method::E1);
    else if (cur == "e2") methods.push_back(Method::E2);
    else throw DataError("unknown method '" + cur + "' (tree, e1, e2)");
    cur.clear();
  };
  for (char ch : methods_flag) {
    if (ch == ',') flush();
    else cur += ch;
  }
  flush();

  BenchmarkParams params;
  params.replicates = replicates;
  params.ensemble_b = B;
  params.mc_reps = mc_reps;
  params.forest_mtry = forest_mtry;
  params.min_node_size = min_node_size;
  BenchmarkResult result = benchmark(config, methods, params);
  write_benchmark_csv(result, out);

  json echo = sim_echo(config);
  echo["command"] = "benchmark";
  echo["replicates"] = replicates;
  echo["B"] = B;
  echo["methods"] = methods_flag;
  echo["mc_reps"] = mc_reps;
  echo["forest_mtry"] = forest_mtry;
  echo["min_node_size"] = min_node_size;
  echo["t0"] = result.t0;
  echo["censor_rate"] = result.censor_rate;
  write_run_config(out + ".run.json", echo);

  for (const BenchmarkRow& row : result.rows)
    std::cout << to_string(row.method) << ": imae=" << fmt(1000.0 * row.imae)
              << " imse=" << fmt(1000.0 * row.imse) << " ibs=" << fmt(1000.0 * row.ibs)
              << " icon=" << (row.icon ? fmt(1000.0 * *row.icon) : std::string("NA"))
              << " (x1000)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"landmark survival tree ensembles"};
  app.require_subcommand(1);
  size_t threads = 1;  // accepted for interface stability; results never depend on it
  app.add_option("--threads", threads, "worker count (does not affect results)");

  auto add_config = [](CLI::App* cmd) {
    cmd->set_config("--config", "", "key=value file overriding defaults");
  };

  // simulate
  std::string model = "I", scenario, out;
  size_t n = 200, n_test = 500, mc_reps = 10000, truth_grid = 50;
  double censor = 0.2;
  uint64_t seed = 1;
  auto* sim = app.add_subcommand("simulate", "generate a training/test pair with truth");
  sim->add_option("--model", model, "I, II, III, IV or V")->required();
  sim->add_option("--scenario", scenario, "A, B or C (models III-V)");
  sim->add_option("--n", n, "training sample size");
  sim->add_option("--n-test", n_test, "at-risk test subjects");
  sim->add_option("--censor", censor, "baseline censoring rate");
  sim->add_option("--seed", seed, "master seed");
  sim->add_option("--mc-reps", mc_reps, "truth Monte Carlo replicates");
  sim->add_option("--truth-grid", truth_grid, "truth grid intervals");
  sim->add_option("--out", out, "output prefix")->required();
  add_config(sim);

  // train
  DataFlags train_data;
  LandmarkFlags train_lm;
  size_t B = 500, mtry = 0, min_node_size = 15;
  uint64_t train_seed = 1;
  std::string train_mode = "e1", train_out;
  bool no_bootstrap = false, mtry_columns = false;
  auto* train = app.add_subcommand("train", "fit an ensemble and save a model bundle");
  train_data.add(train, true);
  train_lm.add(train);
  train->add_option("--b", B, "number of trees");
  train->add_option("--mtry", mtry, "variables per split (0 = ceil(sqrt(p)))");
  train->add_flag("--mtry-columns", mtry_columns,
                  "sample design columns instead of raw variables");
  train->add_option("--min-node-size", min_node_size, "minimum terminal node size");
  train->add_option("--seed", train_seed, "master seed");
  train->add_option("--mode", train_mode, "default prediction mode: e1 or e2");
  train->add_flag("--no-bootstrap", no_bootstrap, "grow every tree on the full sample");
  train->add_option("--out", train_out, "bundle path")->required();
  add_config(train);

  // predict
  std::string pr_bundle, pr_mode, pr_out;
  DataFlags pr_data;
  auto* predict = app.add_subcommand("predict", "survival curves for query subjects");
  predict->add_option("--model-bundle", pr_bundle, "trained bundle")->required();
  pr_data.add(predict, true);
  predict->add_option("--mode", pr_mode, "e1 or e2 (default: bundle setting)");
  predict->add_option("--out", pr_out, "curves CSV")->required();
  add_config(predict);

  // evaluate
  std::string ev_bundle, ev_weighting = "equal", ev_censoring = "km", ev_mode, ev_out;
  DataFlags ev_data;
  double t_lo = 0.0, t_hi = 0.0, ev_tau0 = 0.0;
  size_t ev_grid = 50;
  uint64_t ev_seed = 1;
  auto* evaluate = app.add_subcommand("evaluate", "concordance of a bundle on test data");
  evaluate->add_option("--model-bundle", ev_bundle, "trained bundle")->required();
  ev_data.add(evaluate, true);
  evaluate->add_option("--t-lo", t_lo, "interval start");
  evaluate->add_option("--t-hi", t_hi, "interval end")->required();
  evaluate->add_option("--grid-size", ev_grid, "grid points");
  evaluate->add_option("--weighting", ev_weighting, "equal or denom");
  evaluate->add_option("--tau0", ev_tau0, "landmark horizon (default: max Y_L)");
  evaluate->add_option("--censoring", ev_censoring, "km or forest");
  evaluate->add_option("--seed", ev_seed, "seed (censoring forest)");
  evaluate->add_option("--mode", ev_mode, "e1 or e2 (default: bundle setting)");
  evaluate->add_option("--out", ev_out, "per-horizon CSV")->required();
  add_config(evaluate);

  // vimp
  std::string vi_bundle, vi_out;
  size_t n_perm = 100, vi_grid = 10;
  double vi_lo = 0.0, vi_hi = 0.0;
  uint64_t vi_seed = 1;
  std::vector<std::string> vi_groups;
  auto* vimp = app.add_subcommand("vimp", "permutation variable importance");
  vimp->add_option("--model-bundle", vi_bundle, "trained bundle")->required();
  vimp->add_option("--n-perm", n_perm, "permutations per variable");
  vimp->add_option("--t-lo", vi_lo, "interval start");
  vimp->add_option("--t-hi", vi_hi, "interval end (default: last event)");
  vimp->add_option("--grid-size", vi_grid, "concordance grid points");
  vimp->add_option("--seed", vi_seed, "seed");
  vimp->add_option("--group", vi_groups, "comma-separated variable group (repeatable)");
  vimp->add_option("--out", vi_out, "ranking CSV")->required();
  add_config(vimp);

  // benchmark
  std::string bm_model = "I", bm_scenario, bm_methods = "tree,e1,e2", bm_out;
  size_t bm_n = 200, bm_n_test = 500, bm_reps = 10, bm_b = 200, bm_mc = 10000, bm_mtry = 0,
         bm_mns = 15;
  double bm_censor = 0.2;
  uint64_t bm_seed = 1;
  auto* bench = app.add_subcommand("benchmark", "replicate study against the truth oracle");
  bench->add_option("--model", bm_model, "I..V")->required();
  bench->add_option("--scenario", bm_scenario, "A, B or C (models III-V)");
  bench->add_option("--n", bm_n, "training sample size");
  bench->add_option("--n-test", bm_n_test, "at-risk test subjects");
  bench->add_option("--censor", bm_censor, "baseline censoring rate");
  bench->add_option("--seed", bm_seed, "master seed");
  bench->add_option("--replicates", bm_reps, "training replicates");
  bench->add_option("--b", bm_b, "trees per ensemble");
  bench->add_option("--methods", bm_methods, "comma list of tree,e1,e2");
  bench->add_option("--mc-reps", bm_mc, "truth Monte Carlo replicates");
  bench->add_option("--mtry", bm_mtry, "ensemble mtry (0 = ceil(sqrt(p)))");
  bench->add_option("--min-node-size", bm_mns, "minimum terminal node size");
  bench->add_option("--out", bm_out, "metrics CSV")->required();
  add_config(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(model, scenario, n, n_test, censor, seed, mc_reps, truth_grid, out);
    if (train->parsed())
      return cmd_train(train_data, train_lm, B, mtry, mtry_columns, min_node_size, train_seed,
                       train_mode, no_bootstrap, train_out);
    if (predict->parsed()) return cmd_predict(pr_bundle, pr_data, pr_mode, pr_out);
    if (evaluate->parsed())
      return cmd_evaluate(ev_bundle, ev_data, t_lo, t_hi, ev_grid, ev_weighting, ev_tau0,
                          ev_censoring, ev_seed, ev_mode, ev_out);
    if (vimp->parsed())
      return cmd_vimp(vi_bundle, n_perm, vi_lo, vi_hi, vi_grid, vi_seed, vi_groups, vi_out);
    if (bench->parsed())
      return cmd_benchmark(bm_model, bm_scenario, bm_n, bm_n_test, bm_censor, bm_seed, bm_reps,
                           bm_b, bm_methods, bm_mc, bm_mtry, bm_mns, bm_out);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
