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

#include <span>
#include <utility>
#include <vector>

#include "acmgnn/rng.hpp"
#include "acmgnn/types.hpp"

namespace acmgnn {

using Edge = std::pair<Index, Index>;

/// Immutable undirected graph in CSR form. Self-loops are never stored; the
/// aggregation operators add them implicitly (A~ = A + I).
class Graph {
 public:
  Graph() = default;

  Index n_nodes() const noexcept { return n_nodes_; }
  /// Number of undirected edges (each stored twice).
  Index n_edges() const noexcept { return static_cast<Index>(neighbors_.size()) / 2; }

  std::span<const Index> neighbors(Index i) const noexcept {
    return {neighbors_.data() + row_offsets_[i],
            static_cast<std::size_t>(row_offsets_[i + 1] - row_offsets_[i])};
  }
  Index degree(Index i) const noexcept { return degrees_[i]; }
  /// Degree of node i in the augmented graph, i.e. |N~(u_i)|.
  Index augmented_degree(Index i) const noexcept { return degrees_[i] + 1; }

  std::span<const Index> row_offsets() const noexcept { return row_offsets_; }
  std::span<const Index> adjacency() const noexcept { return neighbors_; }
  std::span<const Index> degrees() const noexcept { return degrees_; }

  bool has_edge(Index i, Index j) const noexcept;
  /// Each undirected edge once, as (i, j) with i < j, in row order.
  std::vector<Edge> edge_list() const;

  friend Graph build_graph(std::span<const Edge> edges, Index n_nodes);

 private:
  Index n_nodes_ = 0;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> neighbors_;
  std::vector<Index> degrees_;
};

/// Throws IndexOutOfRange, DuplicateEdge (either orientation) or SelfLoopInInput.
Graph build_graph(std::span<const Edge> edges, Index n_nodes);

/// Component label per node, labels numbered 0.. in order of first appearance.
std::vector<Index> connected_components(const Graph& g);
bool is_connected(const Graph& g);

/// Relabels node i as perm[i].
Graph permute_graph(const Graph& g, std::span<const Index> perm);

Graph path_graph(Index n);
Graph cycle_graph(Index n);
Graph complete_graph(Index n);

/// Uniform random labelled spanning tree (random Pruefer sequence) plus up to
/// `extra_edges` additional distinct edges drawn uniformly. Always connected.
Graph random_connected_graph(Index n, Index extra_edges, Rng& rng);

}  // namespace acmgnn
