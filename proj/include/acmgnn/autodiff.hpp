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
#include <span>
#include <vector>

#include "acmgnn/aggregator.hpp"
#include "acmgnn/manifold.hpp"
#include "acmgnn/types.hpp"

namespace acmgnn {

using NodeId = Index;

enum class OpKind {
  Constant,
  Parameter,
  SpmmConst,         // fixed sparse L times X
  SpmmValues,        // sparse pattern with differentiable per-entry weights
  Matmul,
  Add,
  Mul,               // elementwise
  Scale,
  Sum,               // all entries -> 1x1
  Tanh,
  Relu,
  LeakyRelu,
  Softplus,          // log(1 + e^x) + offset
  RowProjectPu,
  RowPushForward,
  RowPushBack,
  Dropout,
  LogSoftmaxRows,
  MaskedNll,
  AttentionWeights,  // GAT scores, row-softmaxed over the augmented pattern
};

const char* to_string(OpKind kind) noexcept;

/// Attributes for the generic Tape::forward dispatcher. Only the fields the op
/// reads need to be set.
struct OpAttrs {
  Matrix value;                                    // Constant, Parameter
  std::shared_ptr<const AggregatorMatrix> op;      // SpmmConst, SpmmValues, AttentionWeights
  double scalar = 1.0;                             // Scale factor, Softplus offset
  double alpha = 0.2;                              // LeakyRelu / AttentionWeights slope
  double b = 0.0;                                  // RowPushForward hyperplane
  double p = 0.0;                                  // Dropout rate
  std::uint64_t seed = 0;                          // Dropout mask seed
  bool train = false;                              // Dropout active
  ZeroRowPolicy zero_rows = ZeroRowPolicy::Throw;  // RowProjectPu
  std::vector<Index> labels;                       // MaskedNll, one per row
  std::vector<Index> mask;                         // MaskedNll, participating rows
};

/// One eagerly evaluated value on the tape. `grad` stays empty until the
/// backward sweep reaches the node.
struct Node {
  NodeId id = 0;
  OpKind op = OpKind::Constant;
  std::vector<NodeId> parents;
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::function<void(class Tape&, const Node&)> backprop;
};

/// Append-only reverse-mode tape. Nodes are topologically ordered by id; a
/// fresh tape is built for every forward pass.
class Tape {
 public:
  NodeId forward(OpKind kind, std::span<const NodeId> parents, const OpAttrs& attrs);

  NodeId constant(Matrix value);
  NodeId parameter(Matrix value);

  NodeId spmm(std::shared_ptr<const AggregatorMatrix> L, NodeId x);
  /// weights: nnz x 1, aligned with the pattern's entries.
  NodeId spmm_values(std::shared_ptr<const AggregatorMatrix> pattern, NodeId weights, NodeId x);
  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double s);
  NodeId sum(NodeId a);
  NodeId tanh(NodeId a);
  NodeId relu(NodeId a);
  NodeId leaky_relu(NodeId a, double alpha);
  NodeId softplus(NodeId a, double offset = 0.0);

  /// u: 1 x d node holding diag(U); may be a parameter (ACM*).
  NodeId row_project_pu(NodeId x, NodeId u, ZeroRowPolicy policy = ZeroRowPolicy::Throw);
  NodeId row_push_forward(NodeId w, NodeId u, double b);
  NodeId row_push_back(NodeId v, NodeId u);
  NodeId row_project_pu(NodeId x, const ManifoldSpec& m,
                        ZeroRowPolicy policy = ZeroRowPolicy::Throw);
  NodeId row_push_forward(NodeId w, const ManifoldSpec& m);
  NodeId row_push_back(NodeId v, const ManifoldSpec& m);

  NodeId dropout(NodeId x, double p, std::uint64_t seed, bool train);
  NodeId log_softmax_rows(NodeId x);
  /// Mean negative log-likelihood over the rows in `mask`.
  NodeId masked_nll(NodeId log_probs, std::span<const Index> labels, std::span<const Index> mask);
  /// z: n x d transformed embeddings, a: 1 x 2d. Output: nnz x 1 weights.
  NodeId attention_weights(std::shared_ptr<const AggregatorMatrix> pattern, NodeId z, NodeId a,
                           double alpha);

  /// Throws NonScalarLoss unless `loss` is 1x1. Clears every gradient first.
  void backward(NodeId loss);

  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const Matrix& value(NodeId id) const { return node(id).value; }
  /// Gradient of the last backward sweep; zeros if the node was not reached.
  Matrix grad(NodeId id) const;
  std::span<const NodeId> parameter_ids() const noexcept { return parameter_ids_; }
  Index size() const noexcept { return static_cast<Index>(nodes_.size()); }

  /// Adds `g` into the gradient of node `id` (used by backprop closures).
  void accumulate(NodeId id, const Matrix& g);

 private:
  NodeId push(OpKind op, std::vector<NodeId> parents, Matrix value,
              std::function<void(Tape&, const Node&)> backprop);
  Node& mut(NodeId id) { return nodes_.at(static_cast<std::size_t>(id)); }
  void check(NodeId id) const;

  std::vector<Node> nodes_;
  std::vector<NodeId> parameter_ids_;
};

struct AdamConfig {
  double lr = 5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  Index t = 0;
};

/// Adam with bias correction. Classic L2: weight_decay * param is added to the
/// gradient before the moment updates. `decay_mask`, if non-empty, selects
/// which parameters receive the L2 term.
void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state,
               std::span<const bool> decay_mask = {});

/// i.i.d. Uniform(-s, s), s = sqrt(6 / (rows + cols)), drawn from Rng(seed)
/// in row-major order.
Matrix glorot_init(Index rows, Index cols, std::uint64_t seed);

}  // namespace acmgnn
