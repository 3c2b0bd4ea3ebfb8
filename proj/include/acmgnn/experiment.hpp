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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "acmgnn/dataset.hpp"
#include "acmgnn/error.hpp"
#include "acmgnn/models.hpp"

namespace acmgnn {

struct DatasetSource {
  std::string path;               // load_dataset directory, used when synth is empty
  std::optional<SbmConfig> synth;
  bool synth_seed_set = false;    // otherwise each repeat regenerates with its own seed
};

struct TrainConfig {
  double lr = 5e-3;
  double weight_decay = 5e-4;
  Index max_epochs = 1000;
  Index patience = 100;
  std::uint64_t seed = 0;
  Index repeats = 1;
  bool decay_manifold = true;  // L2 on the learned ACM* diagonal as well
};

enum class Scenario { Standard, MissingFeature };
std::string to_string(Scenario s);

struct RunConfig {
  DatasetSource dataset;
  ModelConfig model;  // n_classes is taken from the dataset
  TrainConfig train;
  Scenario scenario = Scenario::Standard;
  std::string output_dir;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string to_json(const RunConfig& cfg);
void validate(const RunConfig& cfg);

/// Dataset for one repeat: synthesised with the repeat seed unless the config fixes one,
/// then the scenario transform.
Dataset materialize_dataset(const RunConfig& cfg, std::uint64_t repeat_seed);

struct EpochRecord {
  Index epoch = 0;  // 1-based
  double loss[3] = {0, 0, 0};      // train, val, test
  double accuracy[3] = {0, 0, 0};
};

struct RepeatResult {
  std::uint64_t seed = 0;
  double best_val_acc = 0.0;
  double test_acc_at_best_val = 0.0;
  double train_acc_at_best_val = 0.0;
  Index best_epoch = 0;  // 1-based; 0 if never evaluated
  Index epochs_run = 0;
};

struct Dispersion {
  std::string metric;  // "euclidean" or "manifold"
  double mean_pairwise = 0.0;
  double max_pairwise = 0.0;
};

struct RunSummary {
  std::vector<RepeatResult> repeats;
  double mean_test_acc = 0.0;
  double std_test_acc = 0.0;  // sample standard deviation
  double mean_val_acc = 0.0;
  double std_val_acc = 0.0;
  Dispersion dispersion;  // final-layer embeddings at the best checkpoint, averaged over repeats
};

struct TrainedModel {
  RepeatResult result;
  std::vector<Parameter> best_params;
  std::vector<EpochRecord> log;
};

/// Full-batch Adam on the train mask with early stopping on validation accuracy.
TrainedModel train_once(const Dataset& ds, const ModelConfig& model, const TrainConfig& train,
                        std::uint64_t seed);

double accuracy(const Matrix& logits, const std::vector<Index>& labels, const std::vector<Index>& mask);

/// Dispersion of embeddings: Euclidean for vanilla, manifold metric for ACM rows.
Dispersion dispersion_of(const Matrix& H, const std::optional<ManifoldSpec>& m);
/// Manifold of an ACM model under the given parameters (trained U for ACM*).
std::optional<ManifoldSpec> model_manifold(const Model& model, const std::vector<Parameter>& params);

/// Runs `repeats` trainings with seeds seed + r. Writes repeat_<r>/metrics.csv and
/// summary.json under output_dir when it is non-empty.
RunSummary train(const RunConfig& cfg);
std::string summary_json(const RunConfig& cfg, const RunSummary& s);

struct SweepRow {
  Index depth = 0;
  Index repeat = 0;
  std::uint64_t seed = 0;
  double best_val_acc = 0.0;
  double test_acc = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<Index> depths;
  std::vector<RunSummary> per_depth;
};

/// One train() per depth; writes sweep.csv, sweep.svg and summary.json.
SweepResult sweep_layers(const RunConfig& cfg, const std::vector<Index>& layers);

struct DiagnoseReport {
  std::string metric;
  std::vector<Dispersion> per_layer;  // H^(0..L)
  Dispersion final_layer;
  bool trained = false;
};

/// Dispersion curve of the first repeat's model, freshly initialised or trained.
/// Writes dispersion.csv and diagnose.json when output_dir is set.
DiagnoseReport diagnose(const RunConfig& cfg, bool trained);

/// Runs the contraction checks on small graphs and writes report.json and trajectory.csv.
/// Returns true when every check gave the expected verdict.
bool run_theory_checks(const std::string& output_dir, std::uint64_t seed, std::string* summary = nullptr);

/// Validates every known output file found under `dir` against its schema.
/// Returns the problems found; empty means conforming.
std::vector<std::string> self_check(const std::string& dir);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};
void write_line_chart_svg(const std::string& path, const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series);

/// Process exit code for an error: 2 config, 3 data, 4 numerical.
int exit_code(const Error& e);

}  // namespace acmgnn
