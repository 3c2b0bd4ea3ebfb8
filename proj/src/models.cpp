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

#include "acmgnn/models.hpp"

#include <cmath>
#include <utility>

#include "acmgnn/error.hpp"
#include "acmgnn/rng.hpp"

namespace acmgnn {

std::string to_string(Backbone b) {
  switch (b) {
    case Backbone::Sgc: return "sgc";
    case Backbone::Gcn: return "gcn";
    case Backbone::Gat: return "gat";
  }
  return "?";
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Vanilla: return "vanilla";
    case Variant::Acm: return "acm";
    case Variant::AcmStar: return "acm_star";
  }
  return "?";
}

Backbone parse_backbone(const std::string& s) {
  if (s == "sgc") return Backbone::Sgc;
  if (s == "gcn") return Backbone::Gcn;
  if (s == "gat") return Backbone::Gat;
  throw Error(ErrorKind::ConfigError, "unknown backbone '" + s + "'");
}

Variant parse_variant(const std::string& s) {
  if (s == "vanilla") return Variant::Vanilla;
  if (s == "acm") return Variant::Acm;
  if (s == "acm_star" || s == "acm*") return Variant::AcmStar;
  throw Error(ErrorKind::ConfigError, "unknown variant '" + s + "'");
}

void validate(const ModelConfig& cfg) {
  const Index min_layers = cfg.backbone == Backbone::Sgc ? 0 : 1;
  if (cfg.n_layers < min_layers)
    throw Error(ErrorKind::ConfigError, "n_layers must be >= " + std::to_string(min_layers));
  if (cfg.hidden_dim < 1) throw Error(ErrorKind::ConfigError, "hidden_dim must be >= 1");
  if (cfg.n_classes < 1) throw Error(ErrorKind::ConfigError, "n_classes must be >= 1");
  if (!(cfg.dropout_p >= 0.0 && cfg.dropout_p < 1.0))
    throw Error(ErrorKind::ConfigError, "dropout_p must be in [0, 1)");
  if (!std::isfinite(cfg.leaky_relu_alpha))
    throw Error(ErrorKind::ConfigError, "leaky_relu_alpha must be finite");
}

double inverse_softplus_u(double u) {
  const double s = u - kUFloor;
  if (!(s > 0.0)) throw Error(ErrorKind::InvalidManifold, "U diagonal must exceed the floor");
  // log(expm1(s)), written to stay finite for large s.
  return s > 30.0 ? s + std::log1p(-std::exp(-s)) : std::log(std::expm1(s));
}

namespace {

std::uint64_t param_seed(std::uint64_t seed, std::uint64_t k) { return derive_seed(seed, k); }

}  // namespace

Model::Model(const Graph& g, Matrix features, ModelConfig cfg)
    : graph_(std::make_shared<Graph>(g)), features_(std::move(features)), cfg_(std::move(cfg)) {
  validate(cfg_);
  if (features_.rows() != g.n_nodes())
    throw Error(ErrorKind::ShapeMismatch, "feature rows " + std::to_string(features_.rows()) +
                                              " != nodes " + std::to_string(g.n_nodes()));
  if (features_.cols() < 1) throw Error(ErrorKind::ShapeMismatch, "features have no columns");
  if (cfg_.is_acm() && cfg_.u_diag.size() != 0 && cfg_.u_diag.size() != embedding_dim())
    throw Error(ErrorKind::ConfigError, "u_diag length " + std::to_string(cfg_.u_diag.size()) +
                                            " != embedding dim " +
                                            std::to_string(embedding_dim()));
  sym_ = std::make_shared<const AggregatorMatrix>(make_aggregator(g, AggregatorKind::SymNorm));
  pattern_ = std::make_shared<const AggregatorMatrix>(identity_aggregator(g));
  if (cfg_.is_acm()) (void)base_manifold();  // surfaces InvalidManifold early

  if (cfg_.backbone == Backbone::Sgc && !cfg_.acm_star()) {
    std::optional<ManifoldSpec> m;
    if (cfg_.is_acm()) m = base_manifold();
    Matrix H = sgc_propagate(*sym_, features_, cfg_.n_layers, m).back();
    sgc_cache_ = m ? push_forward_rows_clamped(H, *m) : std::move(H);
  }
}

Index Model::embedding_dim() const noexcept {
  return cfg_.backbone == Backbone::Sgc ? features_.cols() : cfg_.hidden_dim;
}

ManifoldSpec Model::base_manifold() const {
  RowVector u = cfg_.u_diag.size() ? cfg_.u_diag : RowVector::Ones(embedding_dim());
  return ManifoldSpec(std::move(u), cfg_.manifold_b);
}

std::vector<Parameter> Model::init_params(std::uint64_t seed) const {
  const Index f = features_.cols();
  const Index h = cfg_.hidden_dim;
  const Index C = cfg_.n_classes;
  const Index L = cfg_.n_layers;
  std::vector<Parameter> out;
  std::uint64_t k = 0;
  auto add = [&](std::string name, Index r, Index c) {
    out.push_back({std::move(name), glorot_init(r, c, param_seed(seed, k++)), true});
  };

  switch (cfg_.backbone) {
    case Backbone::Sgc:
      add("W_out", f, C);
      break;
    case Backbone::Gcn:
      if (!cfg_.is_acm()) {
        for (Index l = 0; l < L; ++l)
          add("W_" + std::to_string(l + 1), l == 0 ? f : h, l + 1 == L ? C : h);
      } else {
        add("W_in", f, h);
        for (Index l = 0; l < L; ++l) add("W_" + std::to_string(l + 1), h, h);
        add("W_out", h, C);
      }
      break;
    case Backbone::Gat:
      if (!cfg_.is_acm()) {
        for (Index l = 0; l < L; ++l) {
          const Index out_dim = l + 1 == L ? C : h;
          add("W_" + std::to_string(l + 1), l == 0 ? f : h, out_dim);
          add("a_" + std::to_string(l + 1), 1, 2 * out_dim);
        }
      } else {
        add("W_in", f, h);
        for (Index l = 0; l < L; ++l) {
          add("W_att_" + std::to_string(l + 1), h, h);
          add("a_" + std::to_string(l + 1), 1, 2 * h);
          add("W_" + std::to_string(l + 1), h, h);
        }
        add("W_out", h, C);
      }
      break;
  }
  if (cfg_.acm_star()) {
    const ManifoldSpec m = base_manifold();
    Matrix theta(1, m.dim());
    for (Index j = 0; j < m.dim(); ++j) theta(0, j) = inverse_softplus_u(m.u_diag()[j]);
    out.push_back({"theta_u", std::move(theta), true});
  }
  return out;
}

std::vector<NodeId> register_params(Tape& tape, const std::vector<Parameter>& params) {
  std::vector<NodeId> ids;
  ids.reserve(params.size());
  for (const auto& p : params) ids.push_back(tape.parameter(p.value));
  return ids;
}

NodeId Model::u_node(Tape& tape, std::span<const NodeId> params) const {
  if (cfg_.acm_star()) return tape.softplus(params.back(), kUFloor);
  return tape.constant(base_manifold().u_diag());
}

Model::Output Model::forward(Tape& tape, std::span<const NodeId> params, bool train,
                             std::uint64_t dropout_seed) const {
  const std::size_t expected = init_params(0).size();
  if (params.size() != expected)
    throw Error(ErrorKind::ShapeMismatch, "expected " + std::to_string(expected) +
                                              " parameters, got " +
                                              std::to_string(params.size()));
  const double p = cfg_.dropout_p;
  const double b = cfg_.manifold_b;
  const Index L = cfg_.n_layers;
  std::uint64_t stream = 0;
  auto drop = [&](NodeId x) { return tape.dropout(x, p, derive_seed(dropout_seed, stream++), train); };

  Output out;
  std::size_t next = 0;
  auto param = [&] { return params[next++]; };

  if (cfg_.is_acm()) out.u = u_node(tape, params);

  if (cfg_.backbone == Backbone::Sgc) {
    const NodeId W_out = param();
    if (sgc_cache_) {
      out.logits = tape.matmul(drop(tape.constant(*sgc_cache_)), W_out);
      return out;
    }
    // Trainable U: the propagation depends on parameters and lives on the tape.
    NodeId H = tape.row_project_pu(tape.constant(features_), out.u, ZeroRowPolicy::MapToCenter);
    out.layers.push_back(H);
    for (Index k = 0; k < L; ++k) {
      H = tape.row_project_pu(tape.spmm(sym_, H), out.u);
      out.layers.push_back(H);
    }
    out.logits = tape.matmul(drop(tape.row_push_forward(H, out.u, b)), W_out);
    return out;
  }

  const NodeId X = tape.constant(features_);
  const bool gat = cfg_.backbone == Backbone::Gat;
  const double alpha = cfg_.leaky_relu_alpha;

  if (!cfg_.is_acm()) {
    NodeId H = X;
    out.layers.push_back(H);
    for (Index l = 0; l < L; ++l) {
      const NodeId W = param();
      const NodeId Z = tape.matmul(drop(H), W);
      if (gat) {
        const NodeId att = tape.attention_weights(pattern_, Z, param(), alpha);
        H = tape.spmm_values(pattern_, att, Z);
      } else {
        H = tape.spmm(sym_, Z);
      }
      if (l + 1 < L) H = tape.relu(H);
      out.layers.push_back(H);
    }
    out.logits = H;
    return out;
  }

  const NodeId W_in = param();
  NodeId H = tape.row_project_pu(tape.matmul(drop(X), W_in), out.u, ZeroRowPolicy::MapToCenter);
  out.layers.push_back(H);
  for (Index l = 0; l < L; ++l) {
    NodeId agg;
    if (gat) {
      const NodeId W_att = param();
      const NodeId a = param();
      const NodeId att = tape.attention_weights(pattern_, tape.matmul(H, W_att), a, alpha);
      agg = tape.spmm_values(pattern_, att, H);
    } else {
      agg = tape.spmm(sym_, H);
    }
    const NodeId W = param();
    const NodeId Hbar = tape.row_project_pu(agg, out.u);
    const NodeId Z = tape.row_push_forward(Hbar, out.u, b);
    H = tape.row_push_back(tape.tanh(tape.matmul(drop(Z), W)), out.u);
    out.layers.push_back(H);
  }
  const NodeId W_out = param();
  out.logits = tape.matmul(drop(tape.row_push_forward(H, out.u, b)), W_out);
  return out;
}

std::vector<Matrix> Model::layer_embeddings(const std::vector<Parameter>& params) const {
  Tape tape;
  const auto ids = register_params(tape, params);
  const Output o = forward(tape, ids, false, 0);
  if (o.layers.empty()) {
    std::optional<ManifoldSpec> m;
    if (cfg_.is_acm()) m = base_manifold();
    return sgc_propagate(*sym_, features_, cfg_.n_layers, m);
  }
  std::vector<Matrix> out;
  out.reserve(o.layers.size());
  for (NodeId id : o.layers) out.push_back(tape.value(id));
  return out;
}

std::vector<Matrix> sgc_propagate(const AggregatorMatrix& sym, const Matrix& X, Index k,
                                  const std::optional<ManifoldSpec>& m) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(k + 1));
  out.push_back(m ? project_rows(X, *m, ZeroRowPolicy::MapToCenter) : X);
  for (Index s = 0; s < k; ++s) {
    Matrix next = spmm(sym, out.back());
    out.push_back(m ? project_rows(next, *m) : std::move(next));
  }
  return out;
}

Matrix gcn_acm_layer(const AggregatorMatrix& L, const Matrix& H, const Matrix& W,
                     const ManifoldSpec& m) {
  if (H.cols() != m.dim() || W.rows() != m.dim() || W.cols() != m.dim())
    throw Error(ErrorKind::ShapeMismatch, "gcn_acm_layer expects n x d input and d x d weight");
  const double residual = max_manifold_residual(H, m);
  if (residual > 1e-8)
    throw Error(ErrorKind::NotOnManifold,
                "input rows off M_U by " + std::to_string(residual));
  const Matrix Hbar = project_rows(spmm(L, H), m);
  const Matrix V = (push_forward_rows_clamped(Hbar, m) * W).array().tanh().matrix();
  return push_back_rows(V, m);
}

Matrix gcn_acm_layer(const Graph& g, const Matrix& H, const Matrix& W, const ManifoldSpec& m) {
  return gcn_acm_layer(make_aggregator(g, AggregatorKind::SymNorm), H, W, m);
}

AggregatorMatrix gat_attention(const Graph& g, const Matrix& H, const Matrix& W_att,
                               const RowVector& a, double alpha) {
  if (H.rows() != g.n_nodes() || W_att.rows() != H.cols() || a.size() != 2 * W_att.cols())
    throw Error(ErrorKind::ShapeMismatch, "gat_attention: incompatible H, W_att or a");
  auto pattern = std::make_shared<const AggregatorMatrix>(identity_aggregator(g));
  Tape tape;
  const NodeId att =
      tape.attention_weights(pattern, tape.constant(H * W_att), tape.constant(a), alpha);
  const Matrix& v = tape.value(att);
  return attention_aggregator(g, std::vector<double>(v.data(), v.data() + v.size()));
}

Classification classify_logits(const Matrix& logits) {
  Classification c;
  c.probs.resize(logits.rows(), logits.cols());
  c.labels.resize(static_cast<std::size_t>(logits.rows()));
  for (Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    const auto e = (logits.row(i).array() - mx).exp();
    c.probs.row(i) = e / e.sum();
    Index best = 0;
    for (Index j = 1; j < logits.cols(); ++j)
      if (c.probs(i, j) > c.probs(i, best)) best = j;
    c.labels[static_cast<std::size_t>(i)] = best;
  }
  return c;
}

Classification classify(const Matrix& H, const Matrix& W_out, const std::optional<ManifoldSpec>& m) {
  if (H.cols() != W_out.rows())
    throw Error(ErrorKind::ShapeMismatch, "classifier weight rows != embedding dim");
  if (m) return classify_logits(push_forward_rows_clamped(H, *m) * W_out);
  return classify_logits(H * W_out);
}

}  // namespace acmgnn
