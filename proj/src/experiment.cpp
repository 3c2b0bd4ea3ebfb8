// Copyright 2026 The acmgnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "acmgnn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "acmgnn/contraction.hpp"
#include "acmgnn/rng.hpp"
#include "json.hpp"

namespace acmgnn {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_string(Scenario s) {
  return s == Scenario::Standard ? "standard" : "missing_feature";
}

int exit_code(const Error& e) {
  switch (category_of(e.kind())) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Numerical: return 4;
  }
  return 1;
}

// ---------------------------------------------------------------- config

namespace {

[[noreturn]] void config_fail(const std::string& what) { throw Error(ErrorKind::ConfigError, what); }

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) config_fail(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      config_fail("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    const json& v = j.at(key);
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw std::invalid_argument("string expected");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw std::invalid_argument("boolean expected");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw std::invalid_argument("integer expected");
      if constexpr (std::is_unsigned_v<T>)
        if (v.is_number_integer() && !v.is_number_unsigned()) throw std::invalid_argument("non-negative integer expected");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw std::invalid_argument("number expected");
    }
    out = v.get<T>();
  } catch (const std::exception& e) {
    config_fail(where + "." + key + ": " + e.what());
  }
}

SbmConfig parse_sbm(const json& j) {
  check_keys(j, {"n", "n_blocks", "p_in", "p_out", "feat_dim", "sigma", "seed", "train_per_class", "val_per_class"},
             "dataset.synth");
  SbmConfig c;
  read(j, "n", c.n, "dataset.synth");
  read(j, "n_blocks", c.n_blocks, "dataset.synth");
  read(j, "p_in", c.p_in, "dataset.synth");
  read(j, "p_out", c.p_out, "dataset.synth");
  read(j, "feat_dim", c.feat_dim, "dataset.synth");
  read(j, "sigma", c.sigma, "dataset.synth");
  read(j, "seed", c.seed, "dataset.synth");
  read(j, "train_per_class", c.train_per_class, "dataset.synth");
  read(j, "val_per_class", c.val_per_class, "dataset.synth");
  return c;
}

json sbm_json(const SbmConfig& c, bool with_seed) {
  json j = {{"n", c.n},           {"n_blocks", c.n_blocks}, {"p_in", c.p_in},
            {"p_out", c.p_out},   {"feat_dim", c.feat_dim}, {"sigma", c.sigma},
            {"train_per_class", c.train_per_class}, {"val_per_class", c.val_per_class}};
  if (with_seed) j["seed"] = c.seed;
  return j;
}

json model_json(const ModelConfig& m) {
  json j = {{"backbone", to_string(m.backbone)}, {"variant", to_string(m.variant)},
            {"n_layers", m.n_layers},           {"hidden_dim", m.hidden_dim},
            {"dropout", m.dropout_p},           {"leaky_relu_alpha", m.leaky_relu_alpha},
            {"manifold_b", m.manifold_b}};
  if (m.u_diag.size()) j["u_diag"] = std::vector<double>(m.u_diag.data(), m.u_diag.data() + m.u_diag.size());
  return j;
}

}  // namespace

void validate(const RunConfig& cfg) {
  validate(cfg.model);
  if (cfg.train.patience < 1) config_fail("train.patience must be >= 1");
  if (cfg.train.repeats < 1) config_fail("train.repeats must be >= 1");
  if (cfg.train.max_epochs < 1) config_fail("train.max_epochs must be >= 1");
  if (!(cfg.train.lr >= 0.0) || !std::isfinite(cfg.train.lr)) config_fail("train.lr must be >= 0");
  if (!(cfg.train.weight_decay >= 0.0)) config_fail("train.weight_decay must be >= 0");
  if (!cfg.dataset.synth && cfg.dataset.path.empty()) config_fail("dataset needs 'path' or 'synth'");
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    config_fail(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"dataset", "model", "train", "scenario", "output_dir"}, "config");
  RunConfig c;

  if (!j.contains("dataset")) config_fail("config needs a 'dataset' section");
  const json& d = j["dataset"];
  check_keys(d, {"path", "synth"}, "dataset");
  read(d, "path", c.dataset.path, "dataset");
  if (d.contains("synth")) {
    c.dataset.synth = parse_sbm(d["synth"]);
    c.dataset.synth_seed_set = d["synth"].contains("seed");
  }
  if (c.dataset.synth && !c.dataset.path.empty()) config_fail("dataset takes either 'path' or 'synth'");

  if (j.contains("model")) {
    const json& m = j["model"];
    check_keys(m, {"backbone", "variant", "n_layers", "hidden_dim", "dropout", "leaky_relu_alpha", "u_diag",
                   "manifold_b"},
               "model");
    std::string s = "sgc";
    read(m, "backbone", s, "model");
    c.model.backbone = parse_backbone(s);
    s = "acm";
    read(m, "variant", s, "model");
    c.model.variant = parse_variant(s);
    read(m, "n_layers", c.model.n_layers, "model");
    read(m, "hidden_dim", c.model.hidden_dim, "model");
    read(m, "dropout", c.model.dropout_p, "model");
    read(m, "leaky_relu_alpha", c.model.leaky_relu_alpha, "model");
    read(m, "manifold_b", c.model.manifold_b, "model");
    if (m.contains("u_diag")) {
      std::vector<double> u;
      try {
        u = m["u_diag"].get<std::vector<double>>();
      } catch (const std::exception& e) {
        config_fail(std::string("model.u_diag: ") + e.what());
      }
      c.model.u_diag = Eigen::Map<const RowVector>(u.data(), static_cast<Index>(u.size()));
    }
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    check_keys(t, {"lr", "weight_decay", "max_epochs", "patience", "seed", "repeats", "decay_manifold"}, "train");
    read(t, "lr", c.train.lr, "train");
    read(t, "weight_decay", c.train.weight_decay, "train");
    read(t, "max_epochs", c.train.max_epochs, "train");
    read(t, "patience", c.train.patience, "train");
    read(t, "seed", c.train.seed, "train");
    read(t, "repeats", c.train.repeats, "train");
    read(t, "decay_manifold", c.train.decay_manifold, "train");
  }
  std::string scenario = "standard";
  read(j, "scenario", scenario, "config");
  if (scenario == "standard")
    c.scenario = Scenario::Standard;
  else if (scenario == "missing_feature")
    c.scenario = Scenario::MissingFeature;
  else
    config_fail("unknown scenario '" + scenario + "'");
  read(j, "output_dir", c.output_dir, "config");
  validate(c);
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::ConfigError, "cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

namespace {

json config_json(const RunConfig& c) {
  json d = json::object();
  if (c.dataset.synth)
    d["synth"] = sbm_json(*c.dataset.synth, c.dataset.synth_seed_set);
  else
    d["path"] = c.dataset.path;
  const json t = {{"lr", c.train.lr},           {"weight_decay", c.train.weight_decay},
                  {"max_epochs", c.train.max_epochs}, {"patience", c.train.patience},
                  {"seed", c.train.seed},       {"repeats", c.train.repeats},
                  {"decay_manifold", c.train.decay_manifold}};
  json j = {{"dataset", d}, {"model", model_json(c.model)}, {"train", t}, {"scenario", to_string(c.scenario)}};
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace

std::string to_json(const RunConfig& cfg) { return config_json(cfg).dump(2); }

Dataset materialize_dataset(const RunConfig& cfg, std::uint64_t repeat_seed) {
  Dataset ds;
  if (cfg.dataset.synth) {
    SbmConfig s = *cfg.dataset.synth;
    if (!cfg.dataset.synth_seed_set) s.seed = repeat_seed;
    ds = synth_sbm(s);
  } else {
    ds = load_dataset(cfg.dataset.path);
  }
  if (cfg.scenario == Scenario::MissingFeature) ds = apply_missing_features(ds);
  return ds;
}

// ---------------------------------------------------------------- training

double accuracy(const Matrix& logits, const std::vector<Index>& labels, const std::vector<Index>& mask) {
  if (mask.empty()) return 0.0;
  const Classification c = classify_logits(logits);
  Index hit = 0;
  for (Index v : mask)
    hit += c.labels[static_cast<std::size_t>(v)] == labels[static_cast<std::size_t>(v)];
  return double(hit) / double(mask.size());
}

TrainedModel train_once(const Dataset& ds, const ModelConfig& model_cfg, const TrainConfig& tc,
                        std::uint64_t seed) {
  if (ds.split.train.empty()) throw Error(ErrorKind::ShapeMismatch, "train split is empty");
  ModelConfig mc = model_cfg;
  mc.n_classes = ds.n_classes;
  const Model model(ds.graph, ds.features, mc);

  TrainedModel out;
  std::vector<Parameter> params = model.init_params(derive_seed(seed, 1));
  std::vector<Matrix> values;
  // std::vector<bool> is not contiguous, so the mask lives in a plain array.
  auto decay = std::make_unique<bool[]>(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    values.push_back(params[k].value);
    decay[k] = params[k].decay && (tc.decay_manifold || params[k].name != "theta_u");
  }

  AdamState st;
  st.config.lr = tc.lr;
  st.config.weight_decay = tc.weight_decay;

  // Model selection on validation accuracy; training accuracy when there is no validation set.
  const bool select_on_val = !ds.split.val.empty();
  const std::vector<Index>* masks[3] = {&ds.split.train, &ds.split.val, &ds.split.test};
  double best = -1.0;
  out.best_params = params;
  Index epoch = 0;
  for (epoch = 1; epoch <= tc.max_epochs; ++epoch) {
    {
      Tape t;
      std::vector<NodeId> ids;
      ids.reserve(values.size());
      for (const auto& v : values) ids.push_back(t.parameter(v));
      const auto fwd = model.forward(t, ids, true, derive_seed(seed, 1000 + static_cast<std::uint64_t>(epoch)));
      const NodeId loss = t.masked_nll(t.log_softmax_rows(fwd.logits), ds.labels, ds.split.train);
      const double lv = t.value(loss)(0, 0);
      if (!std::isfinite(lv))
        throw Error(ErrorKind::NonFiniteLoss, "training loss is " + std::to_string(lv) + " at epoch " +
                                                  std::to_string(epoch) + " (seed " + std::to_string(seed) + ")");
      t.backward(loss);
      std::vector<Matrix> grads;
      grads.reserve(ids.size());
      for (NodeId id : ids) grads.push_back(t.grad(id));
      adam_step(values, grads, st, std::span<const bool>(decay.get(), params.size()));
    }

    Tape e;
    std::vector<NodeId> ids;
    for (const auto& v : values) ids.push_back(e.parameter(v));
    const auto fwd = model.forward(e, ids, false, 0);
    const NodeId logp = e.log_softmax_rows(fwd.logits);
    EpochRecord rec;
    rec.epoch = epoch;
    for (int s = 0; s < 3; ++s) {
      if (masks[s]->empty()) continue;
      rec.loss[s] = e.value(e.masked_nll(logp, ds.labels, *masks[s]))(0, 0);
      rec.accuracy[s] = accuracy(e.value(fwd.logits), ds.labels, *masks[s]);
    }
    out.log.push_back(rec);

    const double score = select_on_val ? rec.accuracy[1] : rec.accuracy[0];
    if (score > best) {
      best = score;
      out.result.best_epoch = epoch;
      out.result.best_val_acc = rec.accuracy[1];
      out.result.test_acc_at_best_val = rec.accuracy[2];
      out.result.train_acc_at_best_val = rec.accuracy[0];
      for (std::size_t k = 0; k < params.size(); ++k) out.best_params[k].value = values[k];
    }
    if (epoch - out.result.best_epoch >= tc.patience) break;
  }
  out.result.seed = seed;
  out.result.epochs_run = std::min(epoch, tc.max_epochs);
  return out;
}

std::optional<ManifoldSpec> model_manifold(const Model& model, const std::vector<Parameter>& params) {
  if (!model.config().is_acm()) return std::nullopt;
  if (!model.config().acm_star()) return model.base_manifold();
  const Matrix& theta = params.back().value;
  RowVector u(theta.cols());
  for (Index j = 0; j < theta.cols(); ++j) {
    const double x = theta(0, j);
    u[j] = (x > 30.0 ? x : std::log1p(std::exp(x))) + kUFloor;
  }
  return ManifoldSpec(u, model.config().manifold_b);
}

Dispersion dispersion_of(const Matrix& H, const std::optional<ManifoldSpec>& m) {
  const Metric metric = m ? Metric::manifold(*m) : Metric::euclidean();
  const PairwiseStats p = pairwise_stats(H, metric);
  return {metric.name(), p.mean, p.max};
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / double(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::MissingFile, "cannot create " + dir + ": " + ec.message());
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  if (!f) throw Error(ErrorKind::MissingFile, "cannot write " + p.string());
  f << text;
}

void write_metrics_csv(const fs::path& p, const std::vector<EpochRecord>& log, const Dataset& ds) {
  std::FILE* f = std::fopen(p.string().c_str(), "w");
  if (!f) throw Error(ErrorKind::MissingFile, "cannot write " + p.string());
  std::fprintf(f, "epoch,split,loss,accuracy\n");
  const char* names[] = {"train", "val", "test"};
  const bool present[] = {!ds.split.train.empty(), !ds.split.val.empty(), !ds.split.test.empty()};
  for (const auto& r : log)
    for (int s = 0; s < 3; ++s)
      if (present[s])
        std::fprintf(f, "%lld,%s,%.17g,%.17g\n", (long long)r.epoch, names[s], r.loss[s], r.accuracy[s]);
  std::fclose(f);
}

json aggregate_json(const RunSummary& s) {
  return {{"n", s.repeats.size()},          {"mean_test_acc", s.mean_test_acc}, {"std_test_acc", s.std_test_acc},
          {"mean_val_acc", s.mean_val_acc}, {"std_val_acc", s.std_val_acc}};
}

json dispersion_json(const Dispersion& d) {
  return {{"metric", d.metric}, {"mean_pairwise", d.mean_pairwise}, {"max_pairwise", d.max_pairwise}};
}

json repeats_json(const RunSummary& s) {
  json a = json::array();
  for (const auto& r : s.repeats)
    a.push_back({{"seed", r.seed},
                 {"best_val_acc", r.best_val_acc},
                 {"test_acc_at_best_val", r.test_acc_at_best_val},
                 {"train_acc_at_best_val", r.train_acc_at_best_val},
                 {"best_epoch", r.best_epoch},
                 {"epochs_run", r.epochs_run}});
  return a;
}

RunSummary run_repeats(const RunConfig& cfg, bool write_files) {
  RunSummary s;
  std::vector<double> test;
  std::vector<double> val;
  std::vector<double> disp_mean;
  std::vector<double> disp_max;
  for (Index r = 0; r < cfg.train.repeats; ++r) {
    const std::uint64_t seed = cfg.train.seed + static_cast<std::uint64_t>(r);
    const Dataset ds = materialize_dataset(cfg, seed);
    const TrainedModel tm = train_once(ds, cfg.model, cfg.train, seed);
    s.repeats.push_back(tm.result);
    test.push_back(tm.result.test_acc_at_best_val);
    val.push_back(tm.result.best_val_acc);

    ModelConfig mc = cfg.model;
    mc.n_classes = ds.n_classes;
    const Model model(ds.graph, ds.features, mc);
    const Dispersion d = dispersion_of(model.layer_embeddings(tm.best_params).back(),
                                       model_manifold(model, tm.best_params));
    s.dispersion.metric = d.metric;
    disp_mean.push_back(d.mean_pairwise);
    disp_max.push_back(d.max_pairwise);

    if (write_files) {
      const fs::path dir = fs::path(cfg.output_dir) / ("repeat_" + std::to_string(r));
      ensure_dir(dir.string());
      write_metrics_csv(dir / "metrics.csv", tm.log, ds);
    }
  }
  s.mean_test_acc = mean_of(test);
  s.std_test_acc = sample_std(test);
  s.mean_val_acc = mean_of(val);
  s.std_val_acc = sample_std(val);
  s.dispersion.mean_pairwise = mean_of(disp_mean);
  s.dispersion.max_pairwise = mean_of(disp_max);
  return s;
}

}  // namespace

std::string summary_json(const RunConfig& cfg, const RunSummary& s) {
  const json j = {{"config", config_json(cfg)},
                  {"repeats", repeats_json(s)},
                  {"aggregate", aggregate_json(s)},
                  {"dispersion", dispersion_json(s.dispersion)}};
  return j.dump(2);
}

RunSummary train(const RunConfig& cfg) {
  validate(cfg);
  const bool write = !cfg.output_dir.empty();
  if (write) ensure_dir(cfg.output_dir);
  RunSummary s = run_repeats(cfg, write);
  if (write) write_text(fs::path(cfg.output_dir) / "summary.json", summary_json(cfg, s) + "\n");
  return s;
}

SweepResult sweep_layers(const RunConfig& cfg, const std::vector<Index>& layers) {
  validate(cfg);
  if (layers.empty()) config_fail("layer list is empty");
  SweepResult out;
  out.depths = layers;
  for (Index depth : layers) {
    RunConfig c = cfg;
    c.model.n_layers = depth;
    validate(c);
    RunSummary s = run_repeats(c, false);
    for (std::size_t r = 0; r < s.repeats.size(); ++r)
      out.rows.push_back({depth, static_cast<Index>(r), s.repeats[r].seed, s.repeats[r].best_val_acc,
                          s.repeats[r].test_acc_at_best_val});
    out.per_depth.push_back(std::move(s));
  }

  if (!cfg.output_dir.empty()) {
    ensure_dir(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    std::FILE* f = std::fopen((dir / "sweep.csv").string().c_str(), "w");
    if (!f) throw Error(ErrorKind::MissingFile, "cannot write sweep.csv");
    std::fprintf(f, "depth,repeat,seed,best_val_acc,test_acc\n");
    for (const auto& r : out.rows)
      std::fprintf(f, "%lld,%lld,%llu,%.17g,%.17g\n", (long long)r.depth, (long long)r.repeat,
                   (unsigned long long)r.seed, r.best_val_acc, r.test_acc);
    std::fclose(f);

    Series test{"test", {}, {}};
    Series val{"val", {}, {}};
    for (std::size_t k = 0; k < layers.size(); ++k) {
      test.x.push_back(double(layers[k]));
      test.y.push_back(out.per_depth[k].mean_test_acc);
      val.x.push_back(double(layers[k]));
      val.y.push_back(out.per_depth[k].mean_val_acc);
    }
    write_line_chart_svg((dir / "sweep.svg").string(),
                         to_string(cfg.model.variant) + " " + to_string(cfg.model.backbone), "layers",
                         "accuracy", {test, val});

    json depths = json::array();
    for (std::size_t k = 0; k < layers.size(); ++k)
      depths.push_back({{"depth", layers[k]},
                        {"aggregate", aggregate_json(out.per_depth[k])},
                        {"dispersion", dispersion_json(out.per_depth[k].dispersion)}});
    const json j = {{"config", config_json(cfg)}, {"depths", depths}};
    write_text(dir / "summary.json", j.dump(2) + "\n");
  }
  return out;
}

DiagnoseReport diagnose(const RunConfig& cfg, bool trained) {
  validate(cfg);
  const std::uint64_t seed = cfg.train.seed;
  const Dataset ds = materialize_dataset(cfg, seed);
  ModelConfig mc = cfg.model;
  mc.n_classes = ds.n_classes;
  const Model model(ds.graph, ds.features, mc);
  std::vector<Parameter> params =
      trained ? train_once(ds, cfg.model, cfg.train, seed).best_params : model.init_params(derive_seed(seed, 1));
  const auto m = model_manifold(model, params);

  DiagnoseReport rep;
  rep.trained = trained;
  rep.metric = m ? "manifold" : "euclidean";
  for (const auto& H : model.layer_embeddings(params)) rep.per_layer.push_back(dispersion_of(H, m));
  rep.final_layer = rep.per_layer.back();

  if (!cfg.output_dir.empty()) {
    ensure_dir(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    std::FILE* f = std::fopen((dir / "dispersion.csv").string().c_str(), "w");
    if (!f) throw Error(ErrorKind::MissingFile, "cannot write dispersion.csv");
    std::fprintf(f, "layer,mean_pairwise,max_pairwise\n");
    for (std::size_t k = 0; k < rep.per_layer.size(); ++k)
      std::fprintf(f, "%zu,%.17g,%.17g\n", k, rep.per_layer[k].mean_pairwise, rep.per_layer[k].max_pairwise);
    std::fclose(f);
    json curve = json::array();
    for (const auto& d : rep.per_layer) curve.push_back(d.mean_pairwise);
    const json j = {{"config", config_json(cfg)},
                    {"trained", trained},
                    {"metric", rep.metric},
                    {"final_layer", dispersion_json(rep.final_layer)},
                    {"mean_pairwise_by_layer", curve}};
    write_text(dir / "diagnose.json", j.dump(2) + "\n");
  }
  return rep;
}

// ---------------------------------------------------------------- theory checks

bool run_theory_checks(const std::string& output_dir, std::uint64_t seed, std::string* summary) {
  Rng rng(seed);
  json checks = json::array();
  bool all = true;
  auto add = [&](const std::string& name, const std::string& expected, const std::string& got, json detail) {
    const bool ok = expected == got;
    all = all && ok;
    checks.push_back({{"name", name}, {"expected", expected}, {"observed", got}, {"passed", ok}, {"detail", detail}});
  };

  const Graph g = random_connected_graph(10, 6, rng);
  ContractionOptions opts;
  opts.n_samples = 1000;
  opts.seed = derive_seed(seed, 1);
  for (double lambda : {0.3, 1.0}) {
    auto L = std::make_shared<const AggregatorMatrix>(make_aggregator(g, AggregatorKind::RowNorm, lambda));
    const auto r = check_contracted(linear_agg(L), g, Metric::euclidean(), opts);
    add("row_norm lambda=" + std::to_string(lambda), "consistent_with_contracted", to_string(r.verdict),
        json::parse(report_json(r)));
  }
  {
    Matrix W(3, 3);
    RowVector a(6);
    for (Index k = 0; k < W.size(); ++k) W.data()[k] = rng.normal();
    for (Index k = 0; k < a.size(); ++k) a[k] = rng.normal();
    const auto r = check_contracted(attention_agg(g, W, a), g, Metric::euclidean(), opts);
    add("attention", "consistent_with_contracted", to_string(r.verdict), json::parse(report_json(r)));
  }
  {
    auto I = std::make_shared<const AggregatorMatrix>(identity_aggregator(g));
    const auto r = check_contracted(linear_agg(I), g, Metric::euclidean(), opts);
    add("identity lambda=0", "refuted", to_string(r.verdict), json::parse(report_json(r)));
  }
  const Graph c4 = cycle_graph(4);
  const ManifoldSpec circle = ManifoldSpec::sphere(2);
  const AggFn circle_mean =
      acm_agg(std::make_shared<const AggregatorMatrix>(make_aggregator(c4, AggregatorKind::RowNorm)), circle);
  {
    const auto r = check_contracted(circle_mean, c4, Metric::manifold(circle), opts);
    add("circle mean on 4-cycle", "refuted", to_string(r.verdict), json::parse(report_json(r)));
  }
  {
    Matrix H0(g.n_nodes(), 3);
    for (Index k = 0; k < H0.size(); ++k) H0.data()[k] = rng.normal();
    const double dev = check_equiv_contracted_sym(g, 1.0, H0, 50);
    add("sym_norm conjugation", "deviation<1e-10", dev < 1e-10 ? "deviation<1e-10" : "deviation>=1e-10",
        {{"max_deviation", dev}});
    const auto col = collapse_check(g, AggregatorKind::RowNorm, 1.0, H0, 1e-6, 10000);
    add("row_norm collapse", "collapsed", col.collapsed ? "collapsed" : "not_collapsed",
        {{"steps", col.steps}, {"final_max_pairwise", col.final_stat}});
  }
  Matrix H4(4, 2);
  H4 << 1, 0, 0, 1, -1, 0, 0, -1;
  const Trajectory fixed = iterate(circle_mean, H4, 1000, Metric::manifold(circle));
  double worst = 0.0;
  for (const auto& s : fixed.step_stats) worst = std::max(worst, std::abs(s.max_pairwise - std::numbers::pi));
  add("circle fixed point", "max_pairwise=pi", worst <= 1e-12 ? "max_pairwise=pi" : "drifted",
      {{"worst_deviation_from_pi", worst}});

  const json report = {{"seed", seed}, {"all_passed", all}, {"checks", checks}};
  if (!output_dir.empty()) {
    ensure_dir(output_dir);
    write_text(fs::path(output_dir) / "report.json", report.dump(2) + "\n");
    auto L = std::make_shared<const AggregatorMatrix>(make_aggregator(g, AggregatorKind::RowNorm, 1.0));
    Matrix H0(g.n_nodes(), 3);
    for (Index k = 0; k < H0.size(); ++k) H0.data()[k] = rng.normal();
    write_trajectory_csv((fs::path(output_dir) / "trajectory.csv").string(),
                         iterate(linear_agg(L), H0, 200, Metric::euclidean(), RowVector::Zero(3)));
  }
  if (summary) {
    std::ostringstream os;
    for (const auto& c : checks)
      os << (c["passed"].get<bool>() ? "PASS " : "FAIL ") << c["name"].get<std::string>() << ": "
         << c["observed"].get<std::string>() << "\n";
    *summary = os.str();
  }
  return all;
}

// ---------------------------------------------------------------- schemas

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_number(const std::string& s, double* v = nullptr) {
  if (s.empty()) return false;
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(x)) return false;
  if (v) *v = x;
  return true;
}

bool is_integer(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

enum class Col { Int, Real, NonNeg, Prob, Split };

void check_csv(const fs::path& p, const std::string& header, const std::vector<Col>& cols,
               std::vector<std::string>& problems) {
  std::ifstream f(p);
  std::string line;
  const std::string name = p.string();
  if (!std::getline(f, line) || line != header) {
    problems.push_back(name + ": header must be '" + header + "'");
    return;
  }
  std::size_t row = 1;
  while (std::getline(f, line)) {
    ++row;
    const auto cells = split_csv(line);
    if (cells.size() != cols.size()) {
      problems.push_back(name + ":" + std::to_string(row) + ": expected " + std::to_string(cols.size()) + " columns");
      continue;
    }
    for (std::size_t c = 0; c < cols.size(); ++c) {
      double v = 0.0;
      bool ok = true;
      switch (cols[c]) {
        case Col::Int: ok = is_integer(cells[c]); break;
        case Col::Real: ok = is_number(cells[c]); break;
        case Col::NonNeg: ok = is_number(cells[c], &v) && v >= 0.0; break;
        case Col::Prob: ok = is_number(cells[c], &v) && v >= 0.0 && v <= 1.0; break;
        case Col::Split: ok = cells[c] == "train" || cells[c] == "val" || cells[c] == "test"; break;
      }
      if (!ok) problems.push_back(name + ":" + std::to_string(row) + ": bad value '" + cells[c] + "'");
    }
  }
}

void require_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where,
                  std::vector<std::string>& problems) {
  for (const char* k : keys)
    if (!j.is_object() || !j.contains(k)) problems.push_back(where + ": missing key '" + k + "'");
}

void check_json(const fs::path& p, std::vector<std::string>& problems) {
  json j;
  try {
    std::ifstream f(p);
    j = json::parse(f);
  } catch (const std::exception& e) {
    problems.push_back(p.string() + ": invalid JSON");
    return;
  }
  const std::string name = p.filename().string();
  const std::string where = p.string();
  if (name == "summary.json") {
    require_keys(j, {"config"}, where, problems);
    if (j.contains("depths")) {
      if (!j["depths"].is_array()) problems.push_back(where + ": 'depths' must be an array");
      else
        for (const auto& d : j["depths"]) require_keys(d, {"depth", "aggregate", "dispersion"}, where, problems);
    } else {
      require_keys(j, {"repeats", "aggregate", "dispersion"}, where, problems);
      if (j.contains("aggregate")) {
        require_keys(j["aggregate"], {"n", "mean_test_acc", "std_test_acc"}, where, problems);
        if (j.contains("repeats") && j["aggregate"].contains("n") && j["repeats"].is_array() &&
            j["aggregate"]["n"] != j["repeats"].size())
          problems.push_back(where + ": aggregate.n differs from the number of repeats");
      }
    }
  } else if (name == "report.json") {
    if (j.contains("checks")) {
      require_keys(j, {"all_passed"}, where, problems);
      for (const auto& c : j["checks"]) require_keys(c, {"name", "expected", "observed", "passed"}, where, problems);
    } else {
      require_keys(j, {"metric", "samples", "condition1", "condition2", "equality_without_identical", "verdict"},
                   where, problems);
    }
  } else if (name == "diagnose.json") {
    require_keys(j, {"config", "metric", "final_layer", "mean_pairwise_by_layer"}, where, problems);
  }
}

}  // namespace

std::vector<std::string> self_check(const std::string& dir) {
  std::vector<std::string> problems;
  if (!fs::is_directory(dir)) return {dir + ": not a directory"};
  Index seen = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name == "metrics.csv")
      check_csv(e.path(), "epoch,split,loss,accuracy", {Col::Int, Col::Split, Col::NonNeg, Col::Prob}, problems);
    else if (name == "sweep.csv")
      check_csv(e.path(), "depth,repeat,seed,best_val_acc,test_acc", {Col::Int, Col::Int, Col::Int, Col::Prob, Col::Prob},
                problems);
    else if (name == "trajectory.csv")
      check_csv(e.path(), "step,max_pairwise,mean_pairwise,max_to_ref", {Col::Int, Col::NonNeg, Col::NonNeg, Col::NonNeg},
                problems);
    else if (name == "dispersion.csv")
      check_csv(e.path(), "layer,mean_pairwise,max_pairwise", {Col::Int, Col::NonNeg, Col::NonNeg}, problems);
    else if (name == "summary.json" || name == "report.json" || name == "diagnose.json")
      check_json(e.path(), problems);
    else
      continue;
    ++seen;
  }
  if (seen == 0) problems.push_back(dir + ": no known output files");
  return problems;
}

// ---------------------------------------------------------------- svg

void write_line_chart_svg(const std::string& path, const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series) {
  constexpr double W = 640, H = 400, L = 60, R = 20, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y0 = std::min(y0, s.y[k]);
      y1 = std::max(y1, s.y[k]);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  y0 = std::min(y0, 0.0);
  if (y1 <= y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::MissingFile, "cannot write " + path);
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\">" << title << "</text>\n"
    << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
    << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
    << x_label << "</text>\n"
    << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
    << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << y_label << "</text>\n";
  char buf[64];
  for (int t = 0; t <= 4; ++t) {
    const double yv = y0 + (y1 - y0) * t / 4.0;
    std::snprintf(buf, sizeof buf, "%.3g", yv);
    f << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << buf << "</text>\n";
    const double xv = x0 + (x1 - x0) * t / 4.0;
    std::snprintf(buf, sizeof buf, "%.3g", xv);
    f << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 14 << "\" text-anchor=\"middle\" font-size=\"10\">" << buf << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* c = colors[s % 5];
    f << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < series[s].x.size(); ++k) f << px(series[s].x[k]) << "," << py(series[s].y[k]) << " ";
    f << "\"/>\n<text x=\"" << W - R - 80 << "\" y=\"" << T + 14 * (double(s) + 1) << "\" fill=\"" << c
      << "\" font-size=\"12\">" << series[s].name << "</text>\n";
  }
  f << "</svg>\n";
}

}  // namespace acmgnn
