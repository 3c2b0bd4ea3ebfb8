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

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "acmgnn/contraction.hpp"
#include "acmgnn/error.hpp"
#include "acmgnn/models.hpp"
#include "test_util.hpp"

using namespace acmgnn;
using namespace acmgnn::testing;

namespace {

std::shared_ptr<const AggregatorMatrix> op(const Graph& g, AggregatorKind k, double lambda = 1.0) {
  return std::make_shared<const AggregatorMatrix>(make_aggregator(g, k, lambda));
}

std::shared_ptr<const AggregatorMatrix> identity_op(const Graph& g) {
  return std::make_shared<const AggregatorMatrix>(identity_aggregator(g));
}

// Unit-circle points at 0, 90, 180 and 270 degrees, exact in binary.
Matrix circle4() {
  Matrix H(4, 2);
  H << 1, 0, 0, 1, -1, 0, 0, -1;
  return H;
}

AggFn circle_mean(const Graph& g) {
  return acm_agg(op(g, AggregatorKind::RowNorm), ManifoldSpec::sphere(2));
}

}  // namespace

TEST_CASE("iterate examples") {
  SUBCASE("2-node path averages in one step") {
    const Graph g = path_graph(2);
    Matrix H0(2, 1);
    H0 << 0, 1;
    const Trajectory t = iterate(linear_agg(op(g, AggregatorKind::RowNorm)), H0, 5, Metric::euclidean());
    REQUIRE(t.step_stats.size() == 6);
    CHECK(t.step_stats[0].max_pairwise == 1.0);
    for (std::size_t k = 1; k < 6; ++k) CHECK(t.step_stats[k].max_pairwise == 0.0);
  }
  SUBCASE("identity aggregation is a constant trajectory") {
    Rng rng(1);
    const Matrix H0 = random_normal(6, 3, rng);
    const Trajectory t = iterate([](const Matrix& H) { return H; }, H0, 20, Metric::euclidean());
    for (const auto& s : t.step_stats) {
      CHECK(s.max_pairwise == t.step_stats[0].max_pairwise);
      CHECK(s.mean_pairwise == t.step_stats[0].mean_pairwise);
      CHECK(s.max_to_ref == t.step_stats[0].max_to_ref);
    }
    for (const auto& H : t.snapshots) CHECK(H == H0);
  }
  SUBCASE("4-cycle on the circle is an exact fixed point") {
    const Graph g = cycle_graph(4);
    const Trajectory t = iterate(circle_mean(g), circle4(), 50, Metric::manifold(ManifoldSpec::sphere(2)));
    for (const auto& s : t.step_stats) CHECK(s.max_pairwise == std::numbers::pi);
    for (const auto& H : t.snapshots) CHECK(H == circle4());
  }
  SUBCASE("snapshots are strided") {
    const Graph g = path_graph(3);
    const Trajectory t =
        iterate(linear_agg(op(g, AggregatorKind::RowNorm, 0.5)), Matrix::Ones(3, 2), 1005, Metric::euclidean());
    CHECK(t.step_stats.size() == 1006);
    CHECK(t.snapshot_steps.front() == 0);
    CHECK(t.snapshot_steps[1] == 11);
    CHECK(t.snapshot_steps.back() == 1005);
    CHECK(t.snapshots.size() == t.snapshot_steps.size());
    CHECK(t.snapshots.size() <= 102);
  }
}

TEST_CASE("check_contracted examples") {
  ContractionOptions opts;
  opts.tol = 1e-12;

  SUBCASE("triangle, row-normalised, is consistent with contraction") {
    const Graph g = complete_graph(3);
    opts.n_samples = 10000;
    const auto r = check_contracted(linear_agg(op(g, AggregatorKind::RowNorm)), g, Metric::euclidean(), opts);
    CHECK(r.verdict == Verdict::ConsistentWithContracted);
    CHECK(r.condition1.violations == 0);
    CHECK(r.condition2.violations == 0);
    CHECK(r.equality_without_identical == 0);
    CHECK(r.strictness_tested > 0);
    CHECK(r.samples >= 10000);
  }
  SUBCASE("triangle, identity operator, is refuted by an equality") {
    const Graph g = complete_graph(3);
    opts.n_samples = 1000;
    const auto r = check_contracted(linear_agg(identity_op(g)), g, Metric::euclidean(), opts);
    CHECK(r.verdict == Verdict::Refuted);
    CHECK(r.condition1.violations == 0);
    CHECK(r.condition2.violations == 0);
    CHECK(r.equality_without_identical > 0);
    REQUIRE(r.equality_witness);
    CHECK(r.equality_witness->lhs == r.equality_witness->rhs);
  }
  SUBCASE("4-cycle circle mean is refuted on the manifold") {
    const Graph g = cycle_graph(4);
    opts.n_samples = 1000;
    const auto r = check_contracted(circle_mean(g), g, Metric::manifold(ManifoldSpec::sphere(2)), opts);
    CHECK(r.verdict == Verdict::Refuted);
    CHECK(r.hypothesis_node == 0);
    REQUIRE(r.equality_witness);
    CHECK(r.equality_witness->lhs >= r.equality_witness->rhs - 1e-6);
  }
  SUBCASE("the fixed-point configuration itself is a witness") {
    const Graph g = cycle_graph(4);
    const auto w = noncontraction_witness(circle_mean(g), g, ManifoldSpec::sphere(2));
    REQUIRE(w);
    CHECK(std::abs(w->lhs - std::numbers::pi) < 1e-12);
    CHECK(std::abs(w->rhs - std::numbers::pi) < 1e-12);
  }
  SUBCASE("witness search respects the |N~(u0)| > 2 hypothesis") {
    const Graph g = path_graph(2);
    CHECK(!noncontraction_witness(circle_mean(g), g, ManifoldSpec::sphere(2)));
    opts.n_samples = 10;
    const auto r = check_contracted(circle_mean(g), g, Metric::manifold(ManifoldSpec::sphere(2)), opts);
    CHECK(r.hypothesis_node == -1);
  }
  SUBCASE("witness found on ellipsoids with unequal degrees") {
    Rng rng(3);
    const Graph g = random_connected_graph(9, 6, rng);
    const ManifoldSpec m(random_positive_diag(3, rng));
    const auto w = noncontraction_witness(acm_agg(op(g, AggregatorKind::SymNorm), m), g, m);
    REQUIRE(w);
    CHECK(w->lhs >= w->rhs - 1e-6);
  }
  SUBCASE("report serialisation") {
    const Graph g = complete_graph(3);
    opts.n_samples = 50;
    const auto r = check_contracted(linear_agg(identity_op(g)), g, Metric::euclidean(), opts);
    const std::string js = report_json(r);
    CHECK(js.find("\"verdict\": \"refuted\"") != std::string::npos);
    CHECK(js.find("\"equality_witness\"") != std::string::npos);
  }
  CHECK_THROWS_AS(check_contracted(linear_agg(identity_op(path_graph(2))), path_graph(2),
                                   Metric::euclidean(), ContractionOptions{.n_samples = 0}),
                  Error);
}

TEST_CASE("check_equiv_contracted_sym examples") {
  Rng rng(4);
  const Graph g5 = random_connected_graph(5, 2, rng);
  CHECK(check_equiv_contracted_sym(g5, 1.0, random_normal(5, 3, rng), 0) == 0.0);
  CHECK(check_equiv_contracted_sym(g5, 1.0, random_normal(5, 3, rng), 50) < 1e-10);
  CHECK(check_equiv_contracted_sym(path_graph(2), 0.5, random_normal(2, 3, rng), 10) < 1e-12);
}

TEST_CASE("collapse_check examples") {
  SUBCASE("2-node path collapses at step 1") {
    Matrix H0(2, 1);
    H0 << 0, 1;
    const auto r = collapse_check(path_graph(2), AggregatorKind::RowNorm, 1.0, H0, 1e-6, 100);
    CHECK(r.collapsed);
    CHECK(r.steps == 1);
  }
  SUBCASE("random connected graph collapses") {
    Rng rng(5);
    const Graph g = random_connected_graph(50, 20, rng);
    const auto r = collapse_check(g, AggregatorKind::RowNorm, 1.0, random_normal(50, 4, rng), 1e-6, 10000);
    CHECK(r.collapsed);
    CHECK(r.steps > 1);
    const auto s = collapse_check(g, AggregatorKind::SymNorm, 1.0, random_normal(50, 4, rng), 1e-6, 10000);
    CHECK(s.collapsed);
  }
  SUBCASE("4-cycle circle fixed point never collapses") {
    const Graph g = cycle_graph(4);
    const auto r = collapse_check(circle_mean(g), circle4(), Metric::manifold(ManifoldSpec::sphere(2)), 1e-6, 1000);
    CHECK(!r.collapsed);
    CHECK(r.steps == 1000);
    CHECK(r.final_stat == std::numbers::pi);
  }
  SUBCASE("disconnected input is rejected") {
    const Edge e[] = {{0, 1}, {2, 3}};
    const Graph g = build_graph(e, 4);
    try {
      collapse_check(g, AggregatorKind::RowNorm, 1.0, Matrix::Ones(4, 1), 1e-6, 10);
      FAIL("no throw");
    } catch (const Error& err) {
      CHECK(err.kind() == ErrorKind::GraphNotConnected);
    }
  }
}

TEST_CASE("property: per-component collapse on two triangles") {
  const Edge e[] = {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}};
  const Graph g = build_graph(e, 6);
  Rng rng(6);
  const Matrix H0 = random_normal(6, 2, rng);
  for (AggregatorKind kind : {AggregatorKind::RowNorm, AggregatorKind::SymNorm}) {
    const auto c = collapse_by_component(g, kind, 1.0, H0, 1e-9, 1000);
    REQUIRE(c.results.size() == 2);
    CHECK(c.results[0].collapsed);
    CHECK(c.results[1].collapsed);
    // Each triangle converges to the mean of its own rows (regular graph).
    const RowVector m0 = H0.topRows(3).colwise().mean();
    const RowVector m1 = H0.bottomRows(3).colwise().mean();
    CHECK(max_abs(c.final_embedding.row(0) - m0) < 1e-9);
    CHECK(max_abs(c.final_embedding.row(5) - m1) < 1e-9);
    CHECK((m0 - m1).norm() > 1e-3);
  }
}

TEST_CASE("property: distance to any reference never increases under row_norm") {
  Rng rng(7);
  double worst = -1.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.uniform_index(30));
    const Graph g = random_connected_graph(n, static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n))), rng);
    const double lambda = rng.uniform(0.05, 1.0);
    const Matrix H0 = random_normal(n, 3, rng);
    const RowVector x = random_row(3, rng) * 3.0;
    const Trajectory t = iterate(linear_agg(op(g, AggregatorKind::RowNorm, lambda)), H0, 200, Metric::euclidean(), x);
    worst = std::max(worst, worst_increase(max_to_ref_sequence(t)));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("property: constant neighbourhoods are fixed exactly") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Graph g = random_connected_graph(12, 8, rng);
    const ManifoldSpec m(random_positive_diag(3, rng));
    const RowVector y = project_pu(random_row(3, rng), m);
    const Matrix H = Matrix::Ones(12, 1) * y;
    const double lambda = rng.uniform(0.1, 1.0);
    const AggFn forms[] = {
        linear_agg(op(g, AggregatorKind::RowNorm, lambda)),
        [&](const Matrix& X) {  // symmetric form measured after D^{-1/2}: g^{-1} L_sym g
          const auto deg = augmented_degrees(g);
          Matrix Z = X;
          for (Index i = 0; i < 12; ++i) Z.row(i) *= std::sqrt(deg[static_cast<std::size_t>(i)]);
          Z = spmm(*op(g, AggregatorKind::SymNorm, lambda), Z);
          for (Index i = 0; i < 12; ++i) Z.row(i) /= std::sqrt(deg[static_cast<std::size_t>(i)]);
          return Z;
        },
        attention_agg(g, random_normal(3, 3, rng), random_row(6, rng)),
        acm_agg(op(g, AggregatorKind::SymNorm, lambda), m),
    };
    for (const auto& f : forms) CHECK(max_abs(f(H) - H) < 1e-12);
  }
}

TEST_CASE("SGC forward equals the aggregation trajectory followed by the classifier") {
  const Graph g = path_graph(5);
  Rng rng(9);
  const Matrix X = random_normal(5, 3, rng);
  ModelConfig c;
  c.backbone = Backbone::Sgc;
  c.variant = Variant::Acm;
  c.n_layers = 2;
  c.n_classes = 2;
  const Model model(g, X, c);
  const auto params = model.init_params(3);
  Tape t;
  const auto ids = register_params(t, params);
  const Matrix logits = t.value(model.forward(t, ids, false, 0).logits);

  const ManifoldSpec s = ManifoldSpec::sphere(3);
  const Trajectory traj = iterate(acm_agg(op(g, AggregatorKind::SymNorm), s), project_rows(X, s), 2,
                                  Metric::manifold(s));
  const Classification cl = classify(traj.snapshots.back(), params[0].value, s);
  CHECK(max_abs(classify_logits(logits).probs - cl.probs) < 1e-12);
}

TEST_CASE("trajectory csv") {
  const auto dir = std::filesystem::temp_directory_path() / "acmgnn_traj_test";
  std::filesystem::create_directories(dir);
  const Graph g = path_graph(2);
  Matrix H0(2, 1);
  H0 << 0, 1;
  const Trajectory t = iterate(linear_agg(op(g, AggregatorKind::RowNorm)), H0, 3, Metric::euclidean());
  const auto path = (dir / "trajectory.csv").string();
  write_trajectory_csv(path, t);
  std::ifstream f(path);
  std::string line;
  std::getline(f, line);
  CHECK(line == "step,max_pairwise,mean_pairwise,max_to_ref");
  std::getline(f, line);
  CHECK(line == "0,1,1,1");
  int rows = 1;
  while (std::getline(f, line)) ++rows;
  CHECK(rows == 4);
}
