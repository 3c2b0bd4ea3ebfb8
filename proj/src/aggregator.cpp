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

#include "acmgnn/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acmgnn/error.hpp"

namespace acmgnn {

Index augmented_nnz(const Graph& g) noexcept {
  return static_cast<Index>(g.adjacency().size()) + g.n_nodes();
}

std::vector<double> augmented_degrees(const Graph& g) {
  std::vector<double> d(static_cast<std::size_t>(g.n_nodes()));
  for (Index i = 0; i < g.n_nodes(); ++i) d[i] = static_cast<double>(g.augmented_degree(i));
  return d;
}

AggregatorMatrix::AggregatorMatrix(const Graph& g, AggregatorKind kind, double lambda)
    : kind_(kind), lambda_(lambda), n_nodes_(g.n_nodes()) {
  row_offsets_.reserve(static_cast<std::size_t>(n_nodes_ + 1));
  row_offsets_.push_back(0);
  cols_.reserve(static_cast<std::size_t>(augmented_nnz(g)));
  for (Index i = 0; i < n_nodes_; ++i) {
    bool self_done = false;
    for (Index j : g.neighbors(i)) {
      if (!self_done && j > i) {
        cols_.push_back(i);
        self_done = true;
      }
      cols_.push_back(j);
    }
    if (!self_done) cols_.push_back(i);
    row_offsets_.push_back(static_cast<Index>(cols_.size()));
  }
}

double AggregatorMatrix::at(Index i, Index j) const noexcept {
  const auto b = cols_.begin() + row_offsets_[i];
  const auto e = cols_.begin() + row_offsets_[i + 1];
  const auto it = std::lower_bound(b, e, j);
  if (it == e || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

double AggregatorMatrix::row_sum(Index i) const noexcept {
  double s = 0.0;
  for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) s += values_[k];
  return s;
}

Matrix AggregatorMatrix::to_dense() const {
  Matrix out = Matrix::Zero(n_nodes_, n_nodes_);
  for (Index i = 0; i < n_nodes_; ++i)
    for (Index k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) out(i, cols_[k]) = values_[k];
  return out;
}

AggregatorMatrix make_aggregator(const Graph& g, AggregatorKind kind, double lambda) {
  if (kind == AggregatorKind::Attention) {
    throw Error(ErrorKind::AttentionNotStatic,
                "attention weights depend on embeddings; use attention_aggregator");
  }
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw Error(ErrorKind::LambdaOutOfRange, "lambda=" + std::to_string(lambda));
  }
  AggregatorMatrix L(g, kind, lambda);
  const auto dt = augmented_degrees(g);
  L.values_.resize(L.cols_.size());
  for (Index i = 0; i < L.n_nodes_; ++i) {
    for (Index k = L.row_offsets_[i]; k < L.row_offsets_[i + 1]; ++k) {
      const Index j = L.cols_[k];
      const double a = kind == AggregatorKind::RowNorm ? 1.0 / dt[i] : 1.0 / std::sqrt(dt[i] * dt[j]);
      L.values_[k] = lambda * a + (i == j ? 1.0 - lambda : 0.0);
    }
  }
  return L;
}

AggregatorMatrix identity_aggregator(const Graph& g) {
  AggregatorMatrix L(g, AggregatorKind::RowNorm, 0.0);
  L.values_.assign(L.cols_.size(), 0.0);
  for (Index i = 0; i < L.n_nodes_; ++i)
    for (Index k = L.row_offsets_[i]; k < L.row_offsets_[i + 1]; ++k)
      if (L.cols_[k] == i) L.values_[k] = 1.0;
  return L;
}

AggregatorMatrix attention_aggregator(const Graph& g, std::vector<double> values) {
  AggregatorMatrix L(g, AggregatorKind::Attention, 1.0);
  if (values.size() != L.cols_.size()) {
    throw Error(ErrorKind::ShapeMismatch, "attention values do not match augmented pattern");
  }
  L.values_ = std::move(values);
  return L;
}

Matrix spmm(const AggregatorMatrix& L, const Matrix& H) {
  if (H.rows() != L.n_nodes()) {
    throw Error(ErrorKind::ShapeMismatch, "spmm: H has " + std::to_string(H.rows()) +
                                              " rows, operator has " +
                                              std::to_string(L.n_nodes()) + " nodes");
  }
  Matrix out = Matrix::Zero(H.rows(), H.cols());
  const auto offs = L.row_offsets();
  const auto cols = L.cols();
  const auto vals = L.values();
  for (Index i = 0; i < L.n_nodes(); ++i)
    for (Index k = offs[i]; k < offs[i + 1]; ++k) out.row(i) += vals[k] * H.row(cols[k]);
  return out;
}

Matrix spmm_transpose(const AggregatorMatrix& L, const Matrix& G) {
  if (G.rows() != L.n_nodes()) throw Error(ErrorKind::ShapeMismatch, "spmm_transpose");
  Matrix out = Matrix::Zero(G.rows(), G.cols());
  const auto offs = L.row_offsets();
  const auto cols = L.cols();
  const auto vals = L.values();
  for (Index i = 0; i < L.n_nodes(); ++i)
    for (Index k = offs[i]; k < offs[i + 1]; ++k) out.row(cols[k]) += vals[k] * G.row(i);
  return out;
}

}  // namespace acmgnn
