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

#include "acmgnn/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "acmgnn/error.hpp"

namespace acmgnn {

bool Graph::has_edge(Index i, Index j) const noexcept {
  if (i < 0 || i >= n_nodes_ || j < 0 || j >= n_nodes_) return false;
  const auto row = neighbors(i);
  return std::binary_search(row.begin(), row.end(), j);
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(static_cast<std::size_t>(n_edges()));
  for (Index i = 0; i < n_nodes_; ++i) {
    for (Index j : neighbors(i)) {
      if (i < j) out.emplace_back(i, j);
    }
  }
  return out;
}

Graph build_graph(std::span<const Edge> edges, Index n_nodes) {
  if (n_nodes < 0) throw Error(ErrorKind::IndexOutOfRange, "negative node count");
  std::vector<std::vector<Index>> rows(static_cast<std::size_t>(n_nodes));
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n_nodes || v >= n_nodes) {
      throw Error(ErrorKind::IndexOutOfRange, "edge (" + std::to_string(u) + "," +
                                                  std::to_string(v) + ") with n_nodes=" +
                                                  std::to_string(n_nodes));
    }
    if (u == v) throw Error(ErrorKind::SelfLoopInInput, "node " + std::to_string(u));
    rows[u].push_back(v);
    rows[v].push_back(u);
  }

  Graph g;
  g.n_nodes_ = n_nodes;
  g.row_offsets_.assign(1, 0);
  g.row_offsets_.reserve(rows.size() + 1);
  g.degrees_.reserve(rows.size());
  g.neighbors_.reserve(edges.size() * 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& row = rows[i];
    std::sort(row.begin(), row.end());
    if (auto dup = std::adjacent_find(row.begin(), row.end()); dup != row.end()) {
      throw Error(ErrorKind::DuplicateEdge,
                  "edge (" + std::to_string(i) + "," + std::to_string(*dup) + ")");
    }
    g.neighbors_.insert(g.neighbors_.end(), row.begin(), row.end());
    g.row_offsets_.push_back(static_cast<Index>(g.neighbors_.size()));
    g.degrees_.push_back(static_cast<Index>(row.size()));
  }
  return g;
}

std::vector<Index> connected_components(const Graph& g) {
  const Index n = g.n_nodes();
  std::vector<Index> label(static_cast<std::size_t>(n), -1);
  std::vector<Index> stack;
  Index next = 0;
  for (Index s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index u = stack.back();
      stack.pop_back();
      for (Index v : g.neighbors(u)) {
        if (label[v] < 0) {
          label[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return label;
}

bool is_connected(const Graph& g) {
  if (g.n_nodes() == 0) return true;
  const auto label = connected_components(g);
  return std::all_of(label.begin(), label.end(), [](Index l) { return l == 0; });
}

Graph permute_graph(const Graph& g, std::span<const Index> perm) {
  if (static_cast<Index>(perm.size()) != g.n_nodes()) {
    throw Error(ErrorKind::ShapeMismatch, "permutation length differs from node count");
  }
  auto edges = g.edge_list();
  for (auto& [u, v] : edges) {
    u = perm[u];
    v = perm[v];
  }
  return build_graph(edges, g.n_nodes());
}

Graph path_graph(Index n) {
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return build_graph(edges, n);
}

Graph cycle_graph(Index n) {
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  if (n > 2) edges.emplace_back(n - 1, 0);
  return build_graph(edges, n);
}

Graph complete_graph(Index n) {
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return build_graph(edges, n);
}

Graph random_connected_graph(Index n, Index extra_edges, Rng& rng) {
  std::set<Edge> edges;
  if (n == 2) {
    edges.emplace(0, 1);
  } else if (n > 2) {
    // Decode a uniformly random Pruefer sequence.
    std::vector<Index> code(static_cast<std::size_t>(n - 2));
    for (auto& c : code) c = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    std::vector<Index> count(static_cast<std::size_t>(n), 0);
    for (Index c : code) ++count[c];
    std::set<Index> leaves;
    for (Index i = 0; i < n; ++i)
      if (count[i] == 0) leaves.insert(i);
    for (Index c : code) {
      const Index leaf = *leaves.begin();
      leaves.erase(leaves.begin());
      edges.emplace(std::min(leaf, c), std::max(leaf, c));
      if (--count[c] == 0) leaves.insert(c);
    }
    const Index a = *leaves.begin();
    const Index b = *std::next(leaves.begin());
    edges.emplace(std::min(a, b), std::max(a, b));
  }

  const Index max_edges = n * (n - 1) / 2;
  const Index target = std::min<Index>(max_edges, static_cast<Index>(edges.size()) + extra_edges);
  while (static_cast<Index>(edges.size()) < target) {
    const auto u = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    const auto v = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    if (u != v) edges.emplace(std::min(u, v), std::max(u, v));
  }
  const std::vector<Edge> list(edges.begin(), edges.end());
  return build_graph(list, n);
}

}  // namespace acmgnn
