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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acmgnn/aggregator.hpp"
#include "acmgnn/autodiff.hpp"
#include "acmgnn/graph.hpp"
#include "acmgnn/manifold.hpp"
#include "acmgnn/types.hpp"

namespace acmgnn {

enum class Backbone { Sgc, Gcn, Gat };
enum class Variant { Vanilla, Acm, AcmStar };

std::string to_string(Backbone b);
std::string to_string(Variant v);
Backbone parse_backbone(const std::string& s);
Variant parse_variant(const std::string& s);

struct ModelConfig {
  Backbone backbone = Backbone::Sgc;
  Variant variant = Variant::Acm;
  Index n_layers = 2;
  Index hidden_dim = 16;
  Index n_classes = 2;
  double dropout_p = 0.6;
  double leaky_relu_alpha = 0.2;
  // Manifold template. Empty u_diag means U = I of the embedding dimension.
  RowVector u_diag;
  double manifold_b = 0.0;

  bool is_acm() const noexcept { return variant != Variant::Vanilla; }
  bool acm_star() const noexcept { return variant == Variant::AcmStar; }
};

/// Throws ConfigError on invalid fields. SGC accepts n_layers = 0 (no propagation).
void validate(const ModelConfig& cfg);

struct Parameter {
  std::string name;
  Matrix value;
  bool decay = true;  // receives the L2 term
};

/// Offset that keeps trainable U diagonals strictly positive.
inline constexpr double kUFloor = 1e-4;
/// theta with softplus(theta) + kUFloor == u.
double inverse_softplus_u(double u);

class Model {
 public:
  Model(const Graph& g, Matrix features, ModelConfig cfg);

  const ModelConfig& config() const noexcept { return cfg_; }
  const Graph& graph() const noexcept { return *graph_; }
  const Matrix& features() const noexcept { return features_; }
  Index embedding_dim() const noexcept;
  /// Manifold the (non-trainable) ACM variants live on.
  ManifoldSpec base_manifold() const;

  std::vector<Parameter> init_params(std::uint64_t seed) const;

  struct Output {
    NodeId logits = -1;
    std::vector<NodeId> layers;  // H^(0..L); empty for cached SGC propagation
    NodeId u = -1;               // U diagonal node for ACM variants
  };
  /// `params` are tape ids in init_params order.
  Output forward(Tape& tape, std::span<const NodeId> params, bool train,
                 std::uint64_t dropout_seed) const;

  /// Plain (tape-free) per-layer embeddings H^(0..L) for the given parameters.
  std::vector<Matrix> layer_embeddings(const std::vector<Parameter>& params) const;

 private:
  NodeId u_node(Tape& tape, std::span<const NodeId> params) const;

  std::shared_ptr<const Graph> graph_;
  Matrix features_;
  ModelConfig cfg_;
  std::shared_ptr<const AggregatorMatrix> sym_;
  std::shared_ptr<const AggregatorMatrix> pattern_;
  // SGC without trainable U: classifier input precomputed once.
  std::optional<Matrix> sgc_cache_;
};

std::vector<NodeId> register_params(Tape& tape, const std::vector<Parameter>& params);

/// SGC propagation without a classifier. Returns H^(0..k). With a manifold,
/// H^(0) = P_U(X) (zero rows at x0) and each step re-projects.
std::vector<Matrix> sgc_propagate(const AggregatorMatrix& sym, const Matrix& X, Index k,
                                  const std::optional<ManifoldSpec>& m);

/// H_out = PB(tanh(PF(P_U(L H)) W)). H rows must lie on M_U within 1e-8.
Matrix gcn_acm_layer(const Graph& g, const Matrix& H, const Matrix& W, const ManifoldSpec& m);
Matrix gcn_acm_layer(const AggregatorMatrix& L, const Matrix& H, const Matrix& W,
                     const ManifoldSpec& m);

/// Single-head attention operator over the augmented neighbourhoods.
/// W_att is d x d', a is 1 x 2d'.
AggregatorMatrix gat_attention(const Graph& g, const Matrix& H, const Matrix& W_att,
                               const RowVector& a, double alpha = 0.2);

struct Classification {
  Matrix probs;
  std::vector<Index> labels;
};

/// Softmax of H W_out (or PF(H) W_out on a manifold); ties go to the lowest class.
Classification classify(const Matrix& H, const Matrix& W_out,
                        const std::optional<ManifoldSpec>& m = std::nullopt);
Classification classify_logits(const Matrix& logits);

}  // namespace acmgnn
