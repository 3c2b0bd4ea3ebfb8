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

// Command-line front end: train, sweep, diagnose, check-theory, synth, self-check.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acmgnn/dataset.hpp"
#include "acmgnn/experiment.hpp"

namespace {

using namespace acmgnn;

struct RunFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "Output directory (overrides output_dir)");
  cmd->add_option("--seed", f.seed, "Base seed (overrides train.seed)");
}

RunConfig resolve(const RunFlags& f) {
  RunConfig cfg = load_run_config(f.config);
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (f.seed) cfg.train.seed = *f.seed;
  validate(cfg);
  return cfg;
}

void print_summary(const RunSummary& s) {
  for (std::size_t r = 0; r < s.repeats.size(); ++r) {
    const RepeatResult& x = s.repeats[r];
    std::printf("repeat %zu: best_val %.4f test %.4f epochs %lld\n", r, x.best_val_acc, x.test_acc_at_best_val,
                static_cast<long long>(x.epochs_run));
  }
  std::printf("test accuracy %.4f +- %.4f over %zu repeats\n", s.mean_test_acc, s.std_test_acc, s.repeats.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acmgnn: graph neural networks with contracted aggregation on manifolds"};
  app.require_subcommand(1);

  RunFlags train_flags, sweep_flags, diag_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a model; writes metrics.csv per repeat and summary.json");
  add_run_flags(train_cmd, train_flags);

  std::vector<Index> layers;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train at several depths; writes sweep.csv and sweep.svg");
  add_run_flags(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--layers", layers, "Depths to train, e.g. 1,2,4,8")->required()->delimiter(',');

  bool trained = false;
  auto* diag_cmd = app.add_subcommand("diagnose", "Per-layer dispersion of node embeddings");
  add_run_flags(diag_cmd, diag_flags);
  diag_cmd->add_flag("--trained", trained, "Train before measuring (default: freshly initialised)");

  std::string theory_out;
  std::uint64_t theory_seed = 0;
  auto* theory_cmd = app.add_subcommand("check-theory", "Contraction checks; writes report.json and trajectory.csv");
  theory_cmd->add_option("--out", theory_out, "Output directory")->required();
  theory_cmd->add_option("--seed", theory_seed, "Sampling seed");

  SbmConfig sbm;
  std::string synth_out;
  bool missing = false;
  auto* synth_cmd = app.add_subcommand("synth", "Write a stochastic block model dataset");
  synth_cmd->add_option("--out", synth_out, "Dataset directory")->required();
  synth_cmd->add_option("--seed", sbm.seed, "Generator seed");
  synth_cmd->add_option("--nodes", sbm.n, "Number of nodes")->capture_default_str();
  synth_cmd->add_option("--blocks", sbm.n_blocks, "Number of blocks")->capture_default_str();
  synth_cmd->add_option("--p-in", sbm.p_in, "Within-block edge probability")->capture_default_str();
  synth_cmd->add_option("--p-out", sbm.p_out, "Cross-block edge probability")->capture_default_str();
  synth_cmd->add_option("--feat-dim", sbm.feat_dim, "Feature dimension")->capture_default_str();
  synth_cmd->add_option("--sigma", sbm.sigma, "Feature noise scale")->capture_default_str();
  synth_cmd->add_option("--train-per-class", sbm.train_per_class, "Training nodes per block")->capture_default_str();
  synth_cmd->add_option("--val-per-class", sbm.val_per_class, "Validation nodes per block")->capture_default_str();
  synth_cmd->add_flag("--missing-features", missing, "Zero the features of validation and test nodes");

  std::string check_dir;
  auto* check_cmd = app.add_subcommand("self-check", "Validate output files under a directory");
  check_cmd->add_option("dir", check_dir, "Directory to scan")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train_cmd) {
      print_summary(train(resolve(train_flags)));
    } else if (*sweep_cmd) {
      const SweepResult r = sweep_layers(resolve(sweep_flags), layers);
      for (std::size_t k = 0; k < r.depths.size(); ++k)
        std::printf("depth %lld: test accuracy %.4f +- %.4f\n", static_cast<long long>(r.depths[k]),
                    r.per_depth[k].mean_test_acc, r.per_depth[k].std_test_acc);
    } else if (*diag_cmd) {
      const DiagnoseReport r = diagnose(resolve(diag_flags), trained);
      for (std::size_t l = 0; l < r.per_layer.size(); ++l)
        std::printf("layer %zu: mean %.6g max %.6g\n", l, r.per_layer[l].mean_pairwise, r.per_layer[l].max_pairwise);
      std::printf("metric %s, %s model\n", r.metric.c_str(), r.trained ? "trained" : "initialised");
    } else if (*theory_cmd) {
      std::string summary;
      const bool ok = run_theory_checks(theory_out, theory_seed, &summary);
      std::fputs(summary.c_str(), stdout);
      return ok ? 0 : 1;
    } else if (*synth_cmd) {
      Dataset ds = synth_sbm(sbm);
      if (missing) ds = apply_missing_features(ds);
      write_dataset(synth_out, ds);
      std::printf("wrote %lld nodes, %lld edges to %s\n", static_cast<long long>(ds.graph.n_nodes()),
                  static_cast<long long>(ds.graph.n_edges()), synth_out.c_str());
    } else if (*check_cmd) {
      const auto problems = self_check(check_dir);
      for (const auto& p : problems) std::fprintf(stderr, "%s\n", p.c_str());
      if (!problems.empty()) return 1;
      std::printf("ok\n");
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
