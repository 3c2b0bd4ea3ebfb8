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
#include <numeric>

#include "acmgnn/aggregator.hpp"
#include "acmgnn/error.hpp"
#include "acmgnn/graph.hpp"
#include "test_util.hpp"

using namespace acmgnn;
using namespace acmgnn::testing;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected acmgnn::Error");
  return ErrorKind::ConfigError;
}

Graph triangle() {
  const std::vector<Edge> e{{0, 1}, {1, 2}, {0, 2}};
  return build_graph(e, 3);
}

}  // namespace

TEST_CASE("build_graph: triangle and single edge") {
  const Graph g = triangle();
  CHECK(g.n_nodes() == 3);
  CHECK(g.n_edges() == 3);
  for (Index i = 0; i < 3; ++i) CHECK(g.degree(i) == 2);

  const std::vector<Edge> e{{0, 1}};
  const Graph p = build_graph(e, 2);
  CHECK(p.degree(0) == 1);
  CHECK(p.degree(1) == 1);
  CHECK(p.has_edge(1, 0));
}

TEST_CASE("build_graph: rejects malformed input") {
  const std::vector<Edge> oob{{0, 3}};
  CHECK(kind_of([&] { build_graph(oob, 3); }) == ErrorKind::IndexOutOfRange);
  const std::vector<Edge> dup{{0, 1}, {1, 0}};
  CHECK(kind_of([&] { build_graph(dup, 2); }) == ErrorKind::DuplicateEdge);
  const std::vector<Edge> loop{{1, 1}};
  CHECK(kind_of([&] { build_graph(loop, 2); }) == ErrorKind::SelfLoopInInput);
}

TEST_CASE("build_graph: CSR invariants on random graphs") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.uniform_index(60));
    const Graph g = random_connected_graph(n, n, rng);
    CHECK(is_connected(g));
    for (Index i = 0; i < n; ++i) {
      const auto row = g.neighbors(i);
      CHECK(static_cast<Index>(row.size()) == g.degree(i));
      CHECK(std::is_sorted(row.begin(), row.end()));
      CHECK(std::adjacent_find(row.begin(), row.end()) == row.end());
      for (Index j : row) {
        CHECK(j != i);
        CHECK(g.has_edge(j, i));
      }
    }
  }
}

TEST_CASE("connected_components on two triangles") {
  const std::vector<Edge> e{{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}};
  const Graph g = build_graph(e, 6);
  CHECK_FALSE(is_connected(g));
  const auto c = connected_components(g);
  CHECK(c == std::vector<Index>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("make_aggregator examples") {
  SUBCASE("triangle row_norm lambda=1 is uniform 1/3") {
    const auto L = make_aggregator(triangle(), AggregatorKind::RowNorm, 1.0);
    CHECK(L.nnz() == 9);
    for (double v : L.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("2-node path sym_norm lambda=1") {
    const auto L = make_aggregator(path_graph(2), AggregatorKind::SymNorm, 1.0);
    const Matrix d = L.to_dense();
    for (Index i = 0; i < 2; ++i)
      for (Index j = 0; j < 2; ++j) CHECK(std::abs(d(i, j) - 0.5) < 1e-15);
  }
  SUBCASE("lambda range") {
    CHECK(kind_of([] { make_aggregator(triangle(), AggregatorKind::RowNorm, 0.0); }) ==
          ErrorKind::LambdaOutOfRange);
    CHECK(kind_of([] { make_aggregator(triangle(), AggregatorKind::SymNorm, 1.5); }) ==
          ErrorKind::LambdaOutOfRange);
    CHECK(kind_of([] { make_aggregator(triangle(), AggregatorKind::Attention, 1.0); }) ==
          ErrorKind::AttentionNotStatic);
    const auto L = make_aggregator(triangle(), AggregatorKind::RowNorm, 1e-9);
    const Matrix d = L.to_dense();
    CHECK(max_abs(d - Matrix::Identity(3, 3)) < 1e-9);
    for (Index i = 0; i < 3; ++i) CHECK(std::abs(L.row_sum(i) - 1.0) < 1e-12);
  }
}

TEST_CASE("spmm examples") {
  Rng rng(3);
  const Graph tri = triangle();
  SUBCASE("near-identity operator") {
    const Matrix H = random_normal(3, 4, rng);
    CHECK(max_abs(spmm(make_aggregator(tri, AggregatorKind::RowNorm, 1e-9), H) - H) < 1e-8);
    CHECK(max_abs(spmm(identity_aggregator(tri), H) - H) == 0.0);
  }
  SUBCASE("triangle averages basis rows") {
    const Matrix out = spmm(make_aggregator(tri, AggregatorKind::RowNorm, 1.0), Matrix::Identity(3, 3));
    CHECK(max_abs(out - Matrix::Constant(3, 3, 1.0 / 3.0)) < 1e-15);
  }
  SUBCASE("2-node path") {
    Matrix H(2, 1);
    H << 0.0, 1.0;
    const Matrix out = spmm(make_aggregator(path_graph(2), AggregatorKind::RowNorm, 1.0), H);
    CHECK(out(0, 0) == 0.5);
    CHECK(out(1, 0) == 0.5);
  }
  SUBCASE("shape mismatch") {
    CHECK(kind_of([&] { spmm(make_aggregator(tri, AggregatorKind::RowNorm), Matrix::Zero(2, 2)); }) ==
          ErrorKind::ShapeMismatch);
  }
}

TEST_CASE("property: row_norm rows are stochastic and positive") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.uniform_index(100));
    const Graph g = random_connected_graph(n, static_cast<Index>(rng.uniform_index(2 * n)), rng);
    const double lambda = trial == 0 ? 1.0 : rng.uniform(1e-6, 1.0);
    const auto L = make_aggregator(g, AggregatorKind::RowNorm, lambda);
    for (Index i = 0; i < n; ++i) {
      CHECK(std::abs(L.row_sum(i) - 1.0) < 1e-12);
      const auto offs = L.row_offsets();
      for (Index k = offs[i]; k < offs[i + 1]; ++k) {
        CHECK(L.values()[k] > 0.0);
        const Index j = L.cols()[k];
        CHECK((j == i || g.has_edge(i, j)));
      }
    }
  }
}

TEST_CASE("property: sym_norm = D^{1/2} row_norm D^{-1/2}") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.uniform_index(199));
    const Graph g = random_connected_graph(n, static_cast<Index>(rng.uniform_index(3 * n)), rng);
    const double lambda = rng.uniform(0.01, 1.0);
    const Matrix S = make_aggregator(g, AggregatorKind::SymNorm, lambda).to_dense();
    const Matrix R = make_aggregator(g, AggregatorKind::RowNorm, lambda).to_dense();
    const auto d = augmented_degrees(g);
    Eigen::VectorXd sq(n);
    for (Index i = 0; i < n; ++i) sq[i] = std::sqrt(d[i]);
    const Matrix conj = sq.asDiagonal() * R * sq.cwiseInverse().asDiagonal();
    CHECK(max_abs(S - conj) < 1e-10);
    // Also the direct formula.
    Matrix direct = (1.0 - lambda) * Matrix::Identity(n, n);
    for (Index i = 0; i < n; ++i) {
      direct(i, i) += lambda / d[i];
      for (Index j : g.neighbors(i)) direct(i, j) += lambda / std::sqrt(d[i] * d[j]);
    }
    CHECK(max_abs(S - direct) < 1e-12);
  }
}

TEST_CASE("property: constant embeddings are fixed by row-stochastic operators") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.uniform_index(80));
    const Graph g = random_connected_graph(n, n, rng);
    const RowVector x = random_row(5, rng);
    const Matrix H = x.replicate(n, 1);
    const Matrix out = spmm(make_aggregator(g, AggregatorKind::RowNorm, rng.uniform(0.01, 1.0)), H);
    CHECK(max_abs(out - H) < 1e-12);
  }
}

TEST_CASE("property: spmm is permutation equivariant") {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.uniform_index(60));
    const Graph g = random_connected_graph(n, n, rng);
    const auto perm = random_permutation(n, rng);
    const Graph gp = permute_graph(g, perm);
    const Matrix H = random_normal(n, 3, rng);
    for (auto kind : {AggregatorKind::RowNorm, AggregatorKind::SymNorm}) {
      const Matrix a = permute_rows(spmm(make_aggregator(g, kind), H), perm);
      const Matrix b = spmm(make_aggregator(gp, kind), permute_rows(H, perm));
      CHECK(max_abs(a - b) < 1e-12);
    }
  }
}

TEST_CASE("spmm_transpose matches the dense transpose") {
  Rng rng(23);
  const Graph g = random_connected_graph(30, 20, rng);
  const auto L = make_aggregator(g, AggregatorKind::RowNorm, 0.7);
  const Matrix G = random_normal(30, 4, rng);
  CHECK(max_abs(spmm_transpose(L, G) - L.to_dense().transpose() * G) < 1e-13);
}
