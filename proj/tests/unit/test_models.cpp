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

#include <algorithm>
#include <cmath>

#include "acmgnn/error.hpp"
#include "acmgnn/models.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace acmgnn;
using namespace acmgnn::testing;

namespace {

ModelConfig config(Backbone b, Variant v, Index layers) {
  ModelConfig c;
  c.backbone = b;
  c.variant = v;
  c.n_layers = layers;
  c.hidden_dim = 5;
  c.n_classes = 3;
  c.dropout_p = 0.5;
  return c;
}

Matrix logits_of(const Model& model, const std::vector<Parameter>& params, bool train = false,
                 std::uint64_t seed = 0) {
  Tape t;
  const auto ids = register_params(t, params);
  return t.value(model.forward(t, ids, train, seed).logits);
}

const Backbone kBackbones[] = {Backbone::Sgc, Backbone::Gcn, Backbone::Gat};
const Variant kVariants[] = {Variant::Vanilla, Variant::Acm, Variant::AcmStar};

}  // namespace

TEST_CASE("config validation") {
  const Graph g = path_graph(3);
  const Matrix X = Matrix::Ones(3, 2);
  ModelConfig c = config(Backbone::Gcn, Variant::Acm, 0);
  CHECK_THROWS_AS(Model(g, X, c), Error);
  c.n_layers = 1;
  c.dropout_p = 1.0;
  CHECK_THROWS_AS(Model(g, X, c), Error);
  c.dropout_p = 0.1;
  CHECK_NOTHROW(Model(g, X, c));
  c.u_diag = RowVector::Ones(3);  // hidden_dim is 5
  CHECK_THROWS_AS(Model(g, X, c), Error);
  CHECK_THROWS_AS(Model(g, Matrix::Ones(2, 2), config(Backbone::Sgc, Variant::Acm, 1)), Error);
  CHECK(parse_variant("acm_star") == Variant::AcmStar);
  CHECK_THROWS_AS(parse_backbone("mlp"), Error);
}

TEST_CASE("sgc_forward examples") {
  Rng rng(3);
  const Graph g = random_connected_graph(8, 4, rng);
  const Matrix X = random_normal(8, 4, rng);

  SUBCASE("k = 0 ACM is the classifier on projected inputs") {
    const Model m(g, X, config(Backbone::Sgc, Variant::Acm, 0));
    const auto params = m.init_params(1);
    const ManifoldSpec s = ManifoldSpec::sphere(4);
    const Matrix expected = push_forward_rows_clamped(project_rows(X, s), s) * params[0].value;
    CHECK(max_abs(logits_of(m, params) - expected) < 1e-15);
  }
  SUBCASE("identical feature rows give identical logits on the manifold") {
    const RowVector x = random_row(4, rng);
    const Matrix same = Matrix::Ones(8, 1) * x;
    for (Variant v : {Variant::Acm, Variant::AcmStar}) {
      for (Index k : {1, 3, 10}) {
        const Model m(g, same, config(Backbone::Sgc, v, k));
        const Matrix lg = logits_of(m, m.init_params(2));
        INFO(to_string(v) << " k=" << k);
        for (Index i = 1; i < 8; ++i) CHECK(max_abs(lg.row(i) - lg.row(0)) < 1e-10);
      }
    }
    // Without re-projection the symmetric operator only scales each row:
    // row i of L_sym^k 1 x is c_i x with c_i degree-dependent.
    for (Index k : {1, 3, 10}) {
      const Model m(g, same, config(Backbone::Sgc, Variant::Vanilla, k));
      const Matrix H = m.layer_embeddings(m.init_params(2)).back();
      for (Index i = 0; i < 8; ++i) {
        const double c = H(i, 0) / x[0];
        CHECK(c > 0.0);
        CHECK(max_abs(H.row(i) - c * x) < 1e-12);
      }
    }
  }
  SUBCASE("zero feature rows start at the chart centre") {
    Matrix Xz = X;
    Xz.row(2).setZero();
    const Model m(g, Xz, config(Backbone::Sgc, Variant::Acm, 2));
    const auto H = m.layer_embeddings(m.init_params(0));
    CHECK(H.size() == 3);
    CHECK(H[0](2, 0) == 1.0);
    CHECK(H[0].row(2).tail(3).isZero(0.0));
  }
  SUBCASE("trainable U reproduces fixed U at initialisation") {
    const Model fixed(g, X, config(Backbone::Sgc, Variant::Acm, 3));
    const Model star(g, X, config(Backbone::Sgc, Variant::AcmStar, 3));
    auto ps = star.init_params(4);
    auto pf = fixed.init_params(4);
    CHECK(ps.size() == pf.size() + 1);
    CHECK(ps.back().name == "theta_u");
    CHECK(ps.back().decay);
    CHECK(max_abs(logits_of(star, ps) - logits_of(fixed, pf)) < 1e-12);
  }
}

TEST_CASE("gcn_acm_layer examples") {
  SUBCASE("2-node path, U = I, W = I") {
    const Graph g = path_graph(2);
    Matrix H(2, 2);
    H << 0, 1, 0, 1;
    const Matrix out = gcn_acm_layer(g, H, Matrix::Identity(2, 2), ManifoldSpec::sphere(2));
    for (Index i = 0; i < 2; ++i) {
      CHECK(std::abs(out(i, 0) - -0.2658022288340798) < 1e-15);
      CHECK(std::abs(out(i, 1) - 0.9640275800758169) < 1e-15);
    }
  }
  SUBCASE("property: outputs on M_U, identical rows stay identical") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const Index n = 2 + static_cast<Index>(rng.uniform_index(10));
      const Index d = 2 + static_cast<Index>(rng.uniform_index(5));
      const Graph g = random_connected_graph(n, n / 2, rng);
      const ManifoldSpec m(random_positive_diag(d, rng));
      const Matrix H = project_rows(random_normal(n, d, rng), m);
      const Matrix W = random_normal(d, d, rng);
      CHECK(max_manifold_residual(gcn_acm_layer(g, H, W, m), m) < 1e-10);

      const Matrix same = Matrix::Ones(n, 1) * H.row(0);
      const Matrix out = gcn_acm_layer(g, same, W, m);
      for (Index i = 1; i < n; ++i) CHECK(max_abs(out.row(i) - out.row(0)) < 1e-12);
    }
  }
  SUBCASE("off-manifold input is rejected") {
    const Graph g = path_graph(2);
    CHECK_THROWS_AS(gcn_acm_layer(g, Matrix::Ones(2, 2), Matrix::Identity(2, 2),
                                  ManifoldSpec::sphere(2)),
                    Error);
  }
}

TEST_CASE("gat_attention examples") {
  Rng rng(12);
  const Graph g = random_connected_graph(12, 8, rng);
  const Matrix W = random_normal(4, 3, rng);
  const RowVector a = random_row(6, rng);

  const Matrix same = Matrix::Ones(12, 1) * random_row(4, rng);
  const AggregatorMatrix u = gat_attention(g, same, W, a);
  for (Index i = 0; i < 12; ++i)
    for (Index j : g.neighbors(i)) CHECK(std::abs(u.at(i, j) - 1.0 / double(g.degree(i) + 1)) < 1e-15);

  for (int trial = 0; trial < 20; ++trial) {
    const AggregatorMatrix att = gat_attention(g, random_normal(12, 4, rng), W, a, 0.2);
    CHECK(att.kind() == AggregatorKind::Attention);
    CHECK(att.nnz() == augmented_nnz(g));
    for (Index i = 0; i < 12; ++i) {
      CHECK(std::abs(att.row_sum(i) - 1.0) < 1e-12);
      for (Index j = 0; j < 12; ++j) {
        const bool adj = i == j || g.has_edge(i, j);
        if (adj) {
          CHECK(att.at(i, j) > 0.0);
          CHECK(att.at(i, j) < 1.0);
        } else {
          CHECK(att.at(i, j) == 0.0);
        }
      }
    }
  }
  CHECK_THROWS_AS(gat_attention(g, random_normal(12, 4, rng), W, random_row(5, rng)), Error);
}

TEST_CASE("classify examples") {
  const Classification u = classify_logits(Matrix::Constant(2, 4, 0.3));
  CHECK(max_abs(u.probs - Matrix::Constant(2, 4, 0.25)) < 1e-16);
  CHECK(u.labels == std::vector<Index>{0, 0});

  Matrix tie(1, 4);
  tie << 0.1, 2.0, -1.0, 2.0;
  CHECK(classify_logits(tie).labels[0] == 1);

  Rng rng(13);
  const Classification c = classify_logits(random_normal(10000, 5, rng) * 10.0);
  double worst = 0.0;
  for (Index i = 0; i < c.probs.rows(); ++i) worst = std::max(worst, std::abs(c.probs.row(i).sum() - 1.0));
  CHECK(worst < 1e-12);

  const ManifoldSpec s = ManifoldSpec::sphere(3);
  const Matrix H = project_rows(random_normal(4, 3, rng), s);
  const Matrix W = random_normal(3, 2, rng);
  CHECK(max_abs(classify(H, W, s).probs - classify_logits(push_forward_rows_clamped(H, s) * W).probs) == 0.0);
  CHECK_THROWS_AS(classify(H, random_normal(2, 2, rng)), Error);
}

TEST_CASE("property: manifold closure holds at depth") {
  Rng rng(14);
  const Graph g = random_connected_graph(30, 30, rng);
  const Matrix X = random_normal(30, 6, rng);
  for (Backbone b : kBackbones) {
    for (Variant v : {Variant::Acm, Variant::AcmStar}) {
      const Model m(g, X, config(b, v, 40));
      auto params = m.init_params(5);
      if (v == Variant::AcmStar) params.back().value.array() += 0.7;  // an ellipsoid
      const auto layers = m.layer_embeddings(params);
      CHECK(layers.size() == 41);
      RowVector u = m.base_manifold().u_diag();
      if (v == Variant::AcmStar)
        u = (params.back().value.array().exp().log1p() + kUFloor).matrix();
      const ManifoldSpec s(u);
      double worst = 0.0;
      for (const auto& H : layers) worst = std::max(worst, max_manifold_residual(H, s));
      INFO(to_string(b) << "/" << to_string(v));
      CHECK(worst < 1e-9);
    }
  }
}

TEST_CASE("property: forward passes are permutation equivariant") {
  Rng rng(15);
  for (int trial = 0; trial < 3; ++trial) {
    const Graph g = random_connected_graph(15, 10, rng);
    const Matrix X = random_normal(15, 4, rng);
    const auto perm = random_permutation(15, rng);
    const Graph gp = permute_graph(g, perm);
    const Matrix Xp = permute_rows(X, perm);
    for (Backbone b : kBackbones) {
      for (Variant v : kVariants) {
        const Model m(g, X, config(b, v, 3));
        const Model mp(gp, Xp, config(b, v, 3));
        const auto params = m.init_params(6);
        INFO(to_string(b) << "/" << to_string(v));
        CHECK(max_abs(permute_rows(logits_of(m, params), perm) - logits_of(mp, params)) < 1e-10);
      }
    }
  }
}

TEST_CASE("property: full forward passes match central differences") {
  Rng rng(16);
  const Graph g = random_connected_graph(6, 3, rng);
  const Matrix X = random_normal(6, 3, rng);
  for (Backbone b : kBackbones) {
    for (Variant v : kVariants) {
      ModelConfig c = config(b, v, 2);
      c.hidden_dim = 3;
      const Model m(g, X, c);
      const auto params = m.init_params(7);
      std::vector<Matrix> inputs;
      for (const auto& p : params) inputs.push_back(p.value);
      const Expression expr = [&m](Tape& t, const std::vector<NodeId>& x) {
        return m.forward(t, x, true, 99).logits;
      };
      const auto r = gradcheck(expr, inputs, random_normal(6, 3, rng));
      INFO(to_string(b) << "/" << to_string(v) << " worst abs " << r.worst_abs);
      CHECK(r.ok);
    }
  }
}

TEST_CASE("property: trainable U stays positive under aggressive updates") {
  Rng rng(17);
  const Graph g = random_connected_graph(10, 5, rng);
  const Matrix X = random_normal(10, 4, rng);
  const Model m(g, X, config(Backbone::Gcn, Variant::AcmStar, 2));
  auto params = m.init_params(8);
  CHECK(max_abs(m.base_manifold().u_diag() - RowVector::Ones(5)) == 0.0);
  std::vector<Index> labels(10);
  for (auto& y : labels) y = static_cast<Index>(rng.uniform_index(3));
  std::vector<Index> mask(10);
  for (Index i = 0; i < 10; ++i) mask[static_cast<std::size_t>(i)] = i;

  AdamState st;
  st.config.lr = 0.5;
  std::vector<Matrix> values;
  for (auto& p : params) values.push_back(p.value);
  for (int step = 0; step < 50; ++step) {
    Tape t;
    std::vector<NodeId> ids;
    for (auto& v : values) ids.push_back(t.parameter(v));
    const auto out = m.forward(t, ids, true, static_cast<std::uint64_t>(step));
    CHECK(t.value(out.u).minCoeff() > 0.0);
    t.backward(t.masked_nll(t.log_softmax_rows(out.logits), labels, mask));
    std::vector<Matrix> grads;
    for (NodeId id : ids) grads.push_back(t.grad(id));
    adam_step(values, grads, st);
  }
  Tape t;
  std::vector<NodeId> ids;
  for (auto& v : values) ids.push_back(t.parameter(v));
  CHECK(t.value(m.forward(t, ids, false, 0).u).minCoeff() >= kUFloor);
}
