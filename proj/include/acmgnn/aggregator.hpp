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

#include <memory>
#include <span>
#include <vector>

#include "acmgnn/graph.hpp"
#include "acmgnn/types.hpp"

namespace acmgnn {

enum class AggregatorKind { RowNorm, SymNorm, Attention };

/// Sparse operator L over node embeddings. The sparsity pattern is always the
/// augmented adjacency: row i holds N(u_i) together with i itself, ascending.
///
///   RowNorm:   L = (1 - lambda) I + lambda D~^{-1} A~
///   SymNorm:   L = (1 - lambda) I + lambda D~^{-1/2} A~ D~^{-1/2}
///   Attention: row-wise softmax weights supplied by the caller
class AggregatorMatrix {
 public:
  AggregatorKind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }
  Index n_nodes() const noexcept { return n_nodes_; }
  Index nnz() const noexcept { return static_cast<Index>(cols_.size()); }

  std::span<const Index> row_offsets() const noexcept { return row_offsets_; }
  std::span<const Index> cols() const noexcept { return cols_; }
  std::span<const double> values() const noexcept { return values_; }

  /// Stored value at (i, j), 0 for structural zeros.
  double at(Index i, Index j) const noexcept;
  double row_sum(Index i) const noexcept;
  Matrix to_dense() const;

  friend AggregatorMatrix make_aggregator(const Graph& g, AggregatorKind kind, double lambda);
  friend AggregatorMatrix identity_aggregator(const Graph& g);
  friend AggregatorMatrix attention_aggregator(const Graph& g, std::vector<double> values);

 private:
  AggregatorMatrix(const Graph& g, AggregatorKind kind, double lambda);

  AggregatorKind kind_ = AggregatorKind::RowNorm;
  double lambda_ = 1.0;
  Index n_nodes_ = 0;
  std::vector<Index> row_offsets_;
  std::vector<Index> cols_;
  std::vector<double> values_;
};

/// lambda must lie in (0, 1]; Attention is rejected with AttentionNotStatic.
AggregatorMatrix make_aggregator(const Graph& g, AggregatorKind kind, double lambda = 1.0);

/// The lambda = 0 row-normalized form, i.e. exactly I on the augmented pattern.
/// Not contracted; kept for refutation experiments.
AggregatorMatrix identity_aggregator(const Graph& g);

/// Wraps externally computed weights aligned with the augmented pattern of g.
AggregatorMatrix attention_aggregator(const Graph& g, std::vector<double> values);

/// Number of augmented-pattern entries for g (edges stored twice plus n self-loops).
Index augmented_nnz(const Graph& g) noexcept;

/// L * H. Throws ShapeMismatch when H.rows() != n_nodes.
Matrix spmm(const AggregatorMatrix& L, const Matrix& H);
/// L^T * G, used by reverse-mode differentiation.
Matrix spmm_transpose(const AggregatorMatrix& L, const Matrix& G);

/// Augmented degree vector diag(D~) = deg + 1.
std::vector<double> augmented_degrees(const Graph& g);

}  // namespace acmgnn
