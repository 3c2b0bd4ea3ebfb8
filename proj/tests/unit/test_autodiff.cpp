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
#include <map>

#include "acmgnn/autodiff.hpp"
#include "acmgnn/error.hpp"
#include "op_cases.hpp"

using namespace acmgnn;
using namespace acmgnn::testing;

namespace {

Matrix scalar(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

}  // namespace

TEST_CASE("forward examples") {
  Tape t;
  CHECK(t.value(t.tanh(t.constant(scalar(0.0))))(0, 0) == 0.0);

  Rng rng(1);
  const Matrix H = random_normal(3, 4, rng);
  const NodeId h = t.constant(H);
  CHECK(max_abs(t.value(t.matmul(h, t.constant(Matrix::Identity(4, 4)))) - H) == 0.0);

  for (Index C : {2, 3, 7}) {
    Tape u;
    const NodeId lp = u.log_softmax_rows(u.constant(Matrix::Zero(1, C)));
    const std::vector<Index> labels{C - 1};
    const std::vector<Index> mask{0};
    CHECK(std::abs(u.value(u.masked_nll(lp, labels, mask))(0, 0) - std::log(double(C))) < 1e-15);
  }
}

TEST_CASE("forward dispatcher") {
  Tape t;
  OpAttrs a;
  a.value = scalar(2.0);
  const NodeId x = t.forward(OpKind::Parameter, {}, a);
  OpAttrs s;
  s.scalar = 3.0;
  const std::vector<NodeId> px{x};
  const NodeId y = t.forward(OpKind::Scale, px, s);
  CHECK(t.value(y)(0, 0) == 6.0);
  CHECK(t.parameter_ids().size() == 1);
  CHECK_THROWS_AS(t.forward(static_cast<OpKind>(999), px, s), Error);
  try {
    t.forward(static_cast<OpKind>(999), px, s);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownOp);
  }
  const std::vector<NodeId> two{x, x};
  CHECK_THROWS_AS(t.forward(OpKind::Tanh, two, s), Error);
  CHECK_THROWS_AS(t.matmul(t.constant(Matrix::Zero(2, 3)), t.constant(Matrix::Zero(2, 3))), Error);
}

TEST_CASE("backward examples") {
  SUBCASE("d(x^2) = 2x") {
    Tape t;
    const NodeId x = t.parameter(scalar(3.0));
    t.backward(t.sum(t.mul(x, x)));
    CHECK(t.grad(x)(0, 0) == 6.0);
  }
  SUBCASE("Jacobian of x/|x| at (1,0)") {
    Tape t;
    Matrix x0(1, 2);
    x0 << 1.0, 0.0;
    const NodeId x = t.parameter(x0);
    t.backward(t.sum(t.row_project_pu(x, ManifoldSpec::sphere(2))));
    const Matrix g = t.grad(x);
    CHECK(std::abs(g(0, 0)) < 1e-15);
    CHECK(std::abs(g(0, 1) - 1.0) < 1e-15);
  }
  SUBCASE("non-scalar loss") {
    Tape t;
    const NodeId x = t.parameter(Matrix::Ones(2, 2));
    try {
      t.backward(x);
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NonScalarLoss);
    }
  }
  SUBCASE("gradients are cleared between sweeps") {
    Tape t;
    const NodeId x = t.parameter(scalar(2.0));
    const NodeId loss = t.sum(t.mul(x, x));
    t.backward(loss);
    t.backward(loss);
    CHECK(t.grad(x)(0, 0) == 4.0);
  }
}

TEST_CASE("property: every differentiable op matches central differences") {
  Rng rng(2024);
  std::map<std::string, int> passed;
  for (int instance = 0; instance < 20; ++instance) {
    for (auto& c : make_op_cases(rng)) {
      const auto r = gradcheck(c.expr, c.inputs, c.weights);
      INFO(c.name << " instance " << instance << " worst abs " << r.worst_abs);
      CHECK(r.ok);
      if (r.ok) ++passed[c.name];
    }
  }
  for (const auto& [name, count] : passed) {
    INFO(name);
    CHECK(count == 20);
  }
}

TEST_CASE("property: gradients accumulate over shared parents") {
  Rng rng(5);
  const Matrix X = random_normal(3, 4, rng);
  const Matrix Wm = random_normal(4, 4, rng);

  Tape both;
  const NodeId x = both.parameter(X);
  const NodeId w = both.constant(Wm);
  both.backward(both.add(both.sum(both.tanh(x)), both.sum(both.matmul(x, w))));

  Tape first;
  const NodeId x1 = first.parameter(X);
  first.backward(first.sum(first.tanh(x1)));
  Tape second;
  const NodeId x2 = second.parameter(X);
  second.backward(second.sum(second.matmul(x2, second.constant(Wm))));

  CHECK(max_abs(both.grad(x) - (first.grad(x1) + second.grad(x2))) < 1e-14);
}

TEST_CASE("dropout") {
  Rng rng(9);
  const Matrix X = random_normal(4, 5, rng);
  Tape t;
  const NodeId x = t.constant(X);
  CHECK(max_abs(t.value(t.dropout(x, 0.6, 1, false)) - X) == 0.0);
  CHECK(max_abs(t.value(t.dropout(x, 0.0, 1, true)) - X) == 0.0);

  for (double p : {0.2, 0.6}) {
    Tape big;
    const NodeId ones = big.constant(Matrix::Ones(100, 1000));
    const Matrix& y = big.value(big.dropout(ones, p, 77, true));
    CHECK(std::abs(y.mean() - 1.0) < 0.01);
    for (Index i = 0; i < y.size(); ++i) {
      const double v = y.data()[i];
      CHECK((v == 0.0 || std::abs(v - 1.0 / (1.0 - p)) < 1e-15));
    }
  }
  // Same seed, same mask.
  Tape a;
  Tape b;
  CHECK(a.value(a.dropout(a.constant(X), 0.5, 3, true)) == b.value(b.dropout(b.constant(X), 0.5, 3, true)));
}

TEST_CASE("adam_step examples") {
  SUBCASE("zero gradient leaves params unchanged") {
    std::vector<Matrix> p{Matrix::Constant(2, 2, 0.7)};
    const std::vector<Matrix> g{Matrix::Zero(2, 2)};
    AdamState st;
    adam_step(p, g, st);
    CHECK(p[0] == Matrix::Constant(2, 2, 0.7));
  }
  SUBCASE("lr = 0 leaves params unchanged and counts the step") {
    std::vector<Matrix> p{Matrix::Constant(1, 3, -1.5)};
    const std::vector<Matrix> g{Matrix::Constant(1, 3, 4.0)};
    AdamState st;
    st.config.lr = 0.0;
    adam_step(p, g, st);
    adam_step(p, g, st);
    CHECK(st.t == 2);
    CHECK(p[0] == Matrix::Constant(1, 3, -1.5));
  }
  SUBCASE("first step is -lr * g / (|g| + eps)") {
    std::vector<Matrix> p{scalar(1.0)};
    const std::vector<Matrix> g{scalar(0.2)};
    AdamState st;
    st.config.lr = 1e-2;
    st.config.eps = 1e-8;
    adam_step(p, g, st);
    const double expected = -1e-2 * 0.2 / (0.2 + 1e-8);
    CHECK(std::abs((p[0](0, 0) - 1.0) - expected) < 1e-15);
    CHECK(std::abs(expected + 0.01) < 1e-9);
  }
  SUBCASE("L2 term follows the decay mask") {
    std::vector<Matrix> p{scalar(2.0), scalar(2.0)};
    const std::vector<Matrix> g{scalar(0.0), scalar(0.0)};
    AdamState st;
    st.config.weight_decay = 0.1;
    const bool mask[] = {true, false};
    adam_step(p, g, st, mask);
    CHECK(p[0](0, 0) < 2.0);
    CHECK(p[1](0, 0) == 2.0);
  }
  SUBCASE("shape mismatch") {
    std::vector<Matrix> p{scalar(1.0)};
    const std::vector<Matrix> g{Matrix::Zero(2, 1)};
    AdamState st;
    CHECK_THROWS_AS(adam_step(p, g, st), Error);
  }
}

TEST_CASE("glorot_init") {
  CHECK(glorot_init(16, 7, 42) == glorot_init(16, 7, 42));
  CHECK(glorot_init(16, 7, 42) != glorot_init(16, 7, 43));
  const Matrix w = glorot_init(316, 317, 5);
  CHECK(w.size() > 100000);
  const double s = std::sqrt(6.0 / (316.0 + 317.0));
  CHECK(w.cwiseAbs().maxCoeff() <= s);
  CHECK(std::abs(w.mean()) < 3.0 * s / std::sqrt(3.0 * double(w.size())));
  CHECK_THROWS_AS(glorot_init(0, 3, 1), Error);
}
