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
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "acmgnn/aggregator.hpp"
#include "acmgnn/graph.hpp"
#include "acmgnn/manifold.hpp"
#include "acmgnn/types.hpp"

namespace acmgnn {

/// Euclidean distance, or geodesic distance on M_U.
class Metric {
 public:
  static Metric euclidean() { return Metric(); }
  static Metric manifold(ManifoldSpec m) { return Metric(std::move(m)); }

  bool is_manifold() const noexcept { return manifold_.has_value(); }
  const ManifoldSpec& spec() const { return *manifold_; }
  double operator()(const RowVector& x, const RowVector& y) const;
  std::string name() const { return is_manifold() ? "manifold" : "euclidean"; }

 private:
  Metric() = default;
  explicit Metric(ManifoldSpec m) : manifold_(std::move(m)) {}
  std::optional<ManifoldSpec> manifold_;
};

using AggFn = std::function<Matrix(const Matrix&)>;

/// H -> L H for a fixed operator.
AggFn linear_agg(std::shared_ptr<const AggregatorMatrix> L);
/// H -> P_U(L H), the ACM aggregation.
AggFn acm_agg(std::shared_ptr<const AggregatorMatrix> L, ManifoldSpec m);
/// H -> Att(H) H with single-head attention scores computed from H W_att.
AggFn attention_agg(const Graph& g, Matrix W_att, RowVector a, double alpha = 0.2);

struct StepStats {
  double max_pairwise = 0.0;
  double mean_pairwise = 0.0;
  double max_to_ref = 0.0;
};

struct PairwiseStats {
  double max = 0.0;
  double mean = 0.0;
};
PairwiseStats pairwise_stats(const Matrix& H, const Metric& metric);

struct Trajectory {
  std::vector<Index> snapshot_steps;  // every ceil(steps/100)-th step plus the last
  std::vector<Matrix> snapshots;
  std::vector<StepStats> step_stats;  // one per step, including step 0
  RowVector reference;
};

/// Default reference is the first row of H0.
Trajectory iterate(const AggFn& agg, const Matrix& H0, Index steps, const Metric& metric,
                   std::optional<RowVector> reference = std::nullopt);

enum class Verdict { ConsistentWithContracted, Refuted, Inconclusive };
std::string to_string(Verdict v);

struct Witness {
  Index node = -1;
  Matrix H;
  RowVector reference;
  double lhs = 0.0;  // d(x, agg(H)_i), or d(agg(H)_i, y) for condition 1
  double rhs = 0.0;  // max over the neighbourhood of d(x, H_j)
};

struct ConditionTally {
  Index violations = 0;
  double worst_excess = 0.0;
  std::optional<Witness> worst;
};

struct ContractionReport {
  std::string metric;
  ConditionTally condition1;
  ConditionTally condition2;
  Index equality_without_identical = 0;
  std::optional<Witness> equality_witness;
  Index samples = 0;
  Index strictness_tested = 0;
  // First node with |N~(u)| > 2; -1 when the graph has none.
  Index hypothesis_node = -1;
  bool targeted_search = false;
  Verdict verdict = Verdict::Inconclusive;
};

struct ContractionOptions {
  Index n_samples = 1000;
  double tol = 1e-12;
  double strict_margin = 1e-6;
  Index dim = 3;
  std::uint64_t seed = 0;
  // Try the symmetric non-contraction configuration in addition to sampling.
  bool targeted_search = true;
};

ContractionReport check_contracted(const AggFn& agg, const Graph& g, const Metric& metric,
                                   const ContractionOptions& opts);

/// Targeted search for an equality witness on a manifold: node u0 at x0,
/// two neighbours balanced around it, reference -x0. Only run on nodes with
/// |N~(u0)| > 2; returns nothing when no such node exists or no witness is found.
std::optional<Witness> noncontraction_witness(const AggFn& agg, const Graph& g,
                                              const ManifoldSpec& m, double margin = 1e-6);

/// max over k <= steps of |L_sym^k H0 - D^{1/2} L_rw^k D^{-1/2} H0|.
double check_equiv_contracted_sym(const Graph& g, double lambda, const Matrix& H0, Index steps);

struct CollapseResult {
  bool collapsed = false;
  Index steps = 0;           // first step below tol, or steps taken
  double final_stat = 0.0;
};

/// Iterates the operator and measures max pairwise Euclidean distance. For
/// SymNorm rows are rescaled by D^{-1/2} before measuring. Requires a connected graph.
CollapseResult collapse_check(const Graph& g, AggregatorKind kind, double lambda,
                              const Matrix& H0, double tol, Index max_steps);
/// Generic form: metric applied to transform(H) at each step (identity if empty).
CollapseResult collapse_check(const AggFn& agg, const Matrix& H0, const Metric& metric,
                              double tol, Index max_steps,
                              const std::function<Matrix(const Matrix&)>& transform = {});

struct ComponentCollapse {
  std::vector<Index> component;  // per-node component label
  std::vector<CollapseResult> results;
  Matrix final_embedding;
};
/// Collapse measured within each connected component separately.
ComponentCollapse collapse_by_component(const Graph& g, AggregatorKind kind, double lambda,
                                        const Matrix& H0, double tol, Index max_steps);

/// Largest step-to-step increase of a sequence (<= 0 when non-increasing).
double worst_increase(const std::vector<double>& seq);
std::vector<double> max_to_ref_sequence(const Trajectory& t);

void write_trajectory_csv(const std::string& path, const Trajectory& t);
std::string report_json(const ContractionReport& r);
void write_report_json(const std::string& path, const ContractionReport& r);

}  // namespace acmgnn
