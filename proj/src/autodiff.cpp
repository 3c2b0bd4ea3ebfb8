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

#include "acmgnn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acmgnn/error.hpp"
#include "acmgnn/rng.hpp"

namespace acmgnn {

const char* to_string(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Constant: return "constant";
    case OpKind::Parameter: return "parameter";
    case OpKind::SpmmConst: return "spmm_const";
    case OpKind::SpmmValues: return "spmm_values";
    case OpKind::Matmul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::Sum: return "sum";
    case OpKind::Tanh: return "tanh";
    case OpKind::Relu: return "relu";
    case OpKind::LeakyRelu: return "leaky_relu";
    case OpKind::Softplus: return "softplus";
    case OpKind::RowProjectPu: return "row_project_pu";
    case OpKind::RowPushForward: return "row_push_forward";
    case OpKind::RowPushBack: return "row_push_back";
    case OpKind::Dropout: return "dropout";
    case OpKind::LogSoftmaxRows: return "log_softmax_rows";
    case OpKind::MaskedNll: return "masked_nll";
    case OpKind::AttentionWeights: return "attention_weights";
  }
  return "unknown";
}

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw Error(ErrorKind::ShapeMismatch, std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                                            std::to_string(a.cols()) + " vs " +
                                            std::to_string(b.rows()) + "x" +
                                            std::to_string(b.cols()));
}

void require_arity(OpKind kind, std::span<const NodeId> parents, std::size_t n) {
  if (parents.size() != n) {
    throw Error(ErrorKind::ShapeMismatch, std::string(to_string(kind)) + " expects " +
                                              std::to_string(n) + " parents, got " +
                                              std::to_string(parents.size()));
  }
}

void require_u(const Matrix& u, Index dim, const char* op) {
  if (u.rows() != 1 || u.cols() != dim) {
    throw Error(ErrorKind::ShapeMismatch, std::string(op) + ": U diagonal must be 1x" +
                                              std::to_string(dim));
  }
  for (Index k = 0; k < u.cols(); ++k) {
    if (!(u(0, k) > 0.0)) throw Error(ErrorKind::InvalidManifold, std::string(op));
  }
}

}  // namespace

NodeId Tape::push(OpKind op, std::vector<NodeId> parents, Matrix value,
                  std::function<void(Tape&, const Node&)> backprop) {
  Node n;
  n.id = static_cast<NodeId>(nodes_.size());
  n.op = op;
  n.requires_grad = op == OpKind::Parameter;
  for (NodeId p : parents) n.requires_grad = n.requires_grad || node(p).requires_grad;
  n.parents = std::move(parents);
  n.value = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return nodes_.back().id;
}

void Tape::check(NodeId id) const {
  if (id < 0 || id >= size()) throw Error(ErrorKind::IndexOutOfRange, "node id " + std::to_string(id));
}

void Tape::accumulate(NodeId id, const Matrix& g) {
  Node& n = mut(id);
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

Matrix Tape::grad(NodeId id) const {
  const Node& n = node(id);
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

NodeId Tape::constant(Matrix value) { return push(OpKind::Constant, {}, std::move(value), nullptr); }

NodeId Tape::parameter(Matrix value) {
  const NodeId id = push(OpKind::Parameter, {}, std::move(value), nullptr);
  parameter_ids_.push_back(id);
  return id;
}

NodeId Tape::spmm(std::shared_ptr<const AggregatorMatrix> L, NodeId x) {
  check(x);
  Matrix y = acmgnn::spmm(*L, value(x));
  return push(OpKind::SpmmConst, {x}, std::move(y), [L](Tape& t, const Node& n) {
    t.accumulate(n.parents[0], spmm_transpose(*L, n.grad));
  });
}

NodeId Tape::spmm_values(std::shared_ptr<const AggregatorMatrix> pattern, NodeId weights,
                         NodeId x) {
  check(weights);
  check(x);
  const Matrix& w = value(weights);
  const Matrix& xv = value(x);
  if (w.rows() != pattern->nnz() || w.cols() != 1) shape_error("spmm_values", w, xv);
  if (xv.rows() != pattern->n_nodes()) shape_error("spmm_values", w, xv);
  const auto offs = pattern->row_offsets();
  const auto cols = pattern->cols();
  Matrix y = Matrix::Zero(xv.rows(), xv.cols());
  for (Index i = 0; i < pattern->n_nodes(); ++i)
    for (Index k = offs[i]; k < offs[i + 1]; ++k) y.row(i) += w(k, 0) * xv.row(cols[k]);
  return push(OpKind::SpmmValues, {weights, x}, std::move(y), [pattern](Tape& t, const Node& n) {
    const Matrix& w = t.value(n.parents[0]);
    const Matrix& xv = t.value(n.parents[1]);
    const auto offs = pattern->row_offsets();
    const auto cols = pattern->cols();
    Matrix gw = Matrix::Zero(w.rows(), 1);
    Matrix gx = Matrix::Zero(xv.rows(), xv.cols());
    for (Index i = 0; i < pattern->n_nodes(); ++i) {
      for (Index k = offs[i]; k < offs[i + 1]; ++k) {
        gw(k, 0) = n.grad.row(i).dot(xv.row(cols[k]));
        gx.row(cols[k]) += w(k, 0) * n.grad.row(i);
      }
    }
    t.accumulate(n.parents[0], gw);
    t.accumulate(n.parents[1], gx);
  });
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  check(a);
  check(b);
  if (value(a).cols() != value(b).rows()) shape_error("matmul", value(a), value(b));
  Matrix y = value(a) * value(b);
  return push(OpKind::Matmul, {a, b}, std::move(y), [](Tape& t, const Node& n) {
    t.accumulate(n.parents[0], n.grad * t.value(n.parents[1]).transpose());
    t.accumulate(n.parents[1], t.value(n.parents[0]).transpose() * n.grad);
  });
}

NodeId Tape::add(NodeId a, NodeId b) {
  check(a);
  check(b);
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
    shape_error("add", value(a), value(b));
  Matrix y = value(a) + value(b);
  return push(OpKind::Add, {a, b}, std::move(y), [](Tape& t, const Node& n) {
    t.accumulate(n.parents[0], n.grad);
    t.accumulate(n.parents[1], n.grad);
  });
}

NodeId Tape::mul(NodeId a, NodeId b) {
  check(a);
  check(b);
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
    shape_error("mul", value(a), value(b));
  Matrix y = value(a).cwiseProduct(value(b));
  return push(OpKind::Mul, {a, b}, std::move(y), [](Tape& t, const Node& n) {
    t.accumulate(n.parents[0], n.grad.cwiseProduct(t.value(n.parents[1])));
    t.accumulate(n.parents[1], n.grad.cwiseProduct(t.value(n.parents[0])));
  });
}

NodeId Tape::scale(NodeId a, double s) {
  check(a);
  Matrix y = s * value(a);
  return push(OpKind::Scale, {a}, std::move(y),
              [s](Tape& t, const Node& n) { t.accumulate(n.parents[0], s * n.grad); });
}

NodeId Tape::sum(NodeId a) {
  check(a);
  Matrix y(1, 1);
  y(0, 0) = value(a).sum();
  return push(OpKind::Sum, {a}, std::move(y), [](Tape& t, const Node& n) {
    const Matrix& x = t.value(n.parents[0]);
    t.accumulate(n.parents[0], Matrix::Constant(x.rows(), x.cols(), n.grad(0, 0)));
  });
}

NodeId Tape::tanh(NodeId a) {
  check(a);
  Matrix y = value(a).array().tanh().matrix();
  return push(OpKind::Tanh, {a}, std::move(y), [](Tape& t, const Node& n) {
    t.accumulate(n.parents[0], (n.grad.array() * (1.0 - n.value.array().square())).matrix());
  });
}

NodeId Tape::relu(NodeId a) {
  check(a);
  Matrix y = value(a).cwiseMax(0.0);
  return push(OpKind::Relu, {a}, std::move(y), [](Tape& t, const Node& n) {
    const Matrix& x = t.value(n.parents[0]);
    t.accumulate(n.parents[0], (x.array() > 0.0).select(n.grad, 0.0).matrix());
  });
}

NodeId Tape::leaky_relu(NodeId a, double alpha) {
  check(a);
  const Matrix& x = value(a);
  Matrix y = (x.array() > 0.0).select(x, alpha * x).matrix();
  return push(OpKind::LeakyRelu, {a}, std::move(y), [alpha](Tape& t, const Node& n) {
    const Matrix& x = t.value(n.parents[0]);
    t.accumulate(n.parents[0], (x.array() > 0.0).select(n.grad, alpha * n.grad).matrix());
  });
}

NodeId Tape::softplus(NodeId a, double offset) {
  check(a);
  const Matrix& x = value(a);
  // log(1 + e^x) = max(x, 0) + log1p(e^{-|x|})
  Matrix y = (x.array().max(0.0) + (-x.array().abs()).exp().log1p() + offset).matrix();
  return push(OpKind::Softplus, {a}, std::move(y), [](Tape& t, const Node& n) {
    const Matrix& x = t.value(n.parents[0]);
    const Matrix sig = (1.0 / (1.0 + (-x.array()).exp())).matrix();
    t.accumulate(n.parents[0], n.grad.cwiseProduct(sig));
  });
}

NodeId Tape::row_project_pu(NodeId x, NodeId u, ZeroRowPolicy policy) {
  check(x);
  check(u);
  const Matrix& xv = value(x);
  const Matrix& uv = value(u);
  require_u(uv, xv.cols(), "row_project_pu");
  const double floor2 = ManifoldSpec::kNormFloor * ManifoldSpec::kNormFloor;
  Matrix y(xv.rows(), xv.cols());
  for (Index i = 0; i < xv.rows(); ++i) {
    const double s = (xv.row(i).array().square() * uv.row(0).array()).sum();
    if (s >= floor2) {
      y.row(i) = xv.row(i) / std::sqrt(s);
    } else if (policy == ZeroRowPolicy::MapToCenter) {
      y.row(i).setZero();
      y(i, 0) = 1.0 / std::sqrt(uv(0, 0));
    } else {
      throw Error(ErrorKind::NearZeroVector, "row_project_pu row " + std::to_string(i));
    }
  }
  return push(OpKind::RowProjectPu, {x, u}, std::move(y), [floor2](Tape& t, const Node& n) {
    const Matrix& xv = t.value(n.parents[0]);
    const Matrix& uv = t.value(n.parents[1]);
    Matrix gx = Matrix::Zero(xv.rows(), xv.cols());
    Matrix gu = Matrix::Zero(1, uv.cols());
    for (Index i = 0; i < xv.rows(); ++i) {
      const auto g = n.grad.row(i);
      const auto xi = xv.row(i);
      const double s = (xi.array().square() * uv.row(0).array()).sum();
      if (s >= floor2) {
        const double r = 1.0 / std::sqrt(s);
        const double gdotx = g.dot(xi);
        gx.row(i) = r * g - (gdotx * r * r * r) * xi.cwiseProduct(uv.row(0));
        gu.row(0) += (-0.5 * gdotx * r * r * r) * xi.cwiseProduct(xi);
      } else {
        gu(0, 0) += g(0) * (-0.5 * std::pow(uv(0, 0), -1.5));
      }
    }
    t.accumulate(n.parents[0], gx);
    t.accumulate(n.parents[1], gu);
  });
}

NodeId Tape::row_push_forward(NodeId w, NodeId u, double b) {
  check(w);
  check(u);
  const Matrix& wv = value(w);
  const Matrix& uv = value(u);
  require_u(uv, wv.cols(), "row_push_forward");
  const double guard = ManifoldSpec::kCenterGuard;
  const double a0 = 1.0 / std::sqrt(uv(0, 0));
  Matrix y(wv.rows(), wv.cols());
  for (Index i = 0; i < wv.rows(); ++i) {
    double den = wv(i, 0) - a0;
    if (std::abs(den) < guard) den = den > 0.0 ? guard : -guard;
    const double t = (b - a0) / den;
    y.row(i) = t * wv.row(i);
    y(i, 0) = t * (wv(i, 0) - a0) + a0;
  }
  return push(OpKind::RowPushForward, {w, u}, std::move(y), [b, guard](Tape& tp, const Node& n) {
    const Matrix& wv = tp.value(n.parents[0]);
    const Matrix& uv = tp.value(n.parents[1]);
    const double u1 = uv(0, 0);
    const double a0 = 1.0 / std::sqrt(u1);
    Matrix gw(wv.rows(), wv.cols());
    double ga0 = 0.0;
    for (Index i = 0; i < wv.rows(); ++i) {
      const auto g = n.grad.row(i);
      const double raw = wv(i, 0) - a0;
      const bool clamped = std::abs(raw) < guard;
      const double den = clamped ? (raw > 0.0 ? guard : -guard) : raw;
      const double t = (b - a0) / den;
      // g . (w - x0)
      const double gc = g.dot(wv.row(i)) - g(0) * a0;
      gw.row(i) = t * g;
      if (!clamped) gw(i, 0) -= (t / den) * gc;
      const double dt_da0 = clamped ? -1.0 / den : (b - wv(i, 0)) / (den * den);
      ga0 += dt_da0 * gc + (1.0 - t) * g(0);
    }
    Matrix gu = Matrix::Zero(1, uv.cols());
    gu(0, 0) = ga0 * (-0.5 * std::pow(u1, -1.5));
    tp.accumulate(n.parents[0], gw);
    tp.accumulate(n.parents[1], gu);
  });
}

NodeId Tape::row_push_back(NodeId v, NodeId u) {
  check(v);
  check(u);
  const Matrix& vv = value(v);
  const Matrix& uv = value(u);
  require_u(uv, vv.cols(), "row_push_back");
  const double a0 = 1.0 / std::sqrt(uv(0, 0));
  const double floor2 = ManifoldSpec::kNormFloor * ManifoldSpec::kNormFloor;
  Matrix y(vv.rows(), vv.cols());
  for (Index i = 0; i < vv.rows(); ++i) {
    RowVector c = vv.row(i);
    c[0] -= a0;
    const double q = (c.array().square() * uv.row(0).array()).sum();
    if (!(q >= floor2)) {
      throw Error(ErrorKind::AtProjectionCenter, "row_push_back row " + std::to_string(i));
    }
    const double p = uv(0, 0) * a0 * c[0];
    y.row(i) = (-2.0 * p / q) * c;
    y(i, 0) += a0;
  }
  return push(OpKind::RowPushBack, {v, u}, std::move(y), [](Tape& tp, const Node& n) {
    const Matrix& vv = tp.value(n.parents[0]);
    const Matrix& uv = tp.value(n.parents[1]);
    const double u1 = uv(0, 0);
    const double su1 = std::sqrt(u1);
    const double a0 = 1.0 / su1;
    const double da0 = -0.5 * std::pow(u1, -1.5);
    Matrix gv(vv.rows(), vv.cols());
    Matrix gu = Matrix::Zero(1, uv.cols());
    for (Index i = 0; i < vv.rows(); ++i) {
      const auto g = n.grad.row(i);
      RowVector c = vv.row(i);
      c[0] -= a0;
      const double q = (c.array().square() * uv.row(0).array()).sum();
      const double p = su1 * c[0];
      const double t = -2.0 * p / q;
      const double gc = g.dot(c);
      // d t / d v = -2 (dp q - p dq) / q^2, dp = sqrt(u1) e1, dq = 2 U c
      RowVector dt_dv = (4.0 * p / (q * q)) * c.cwiseProduct(uv.row(0));
      dt_dv[0] += -2.0 * su1 / q;
      gv.row(i) = t * g + gc * dt_dv;
      // Entries k >= 1: c, p fixed; dq/du_k = c_k^2.
      for (Index k = 1; k < uv.cols(); ++k) gu(0, k) += gc * 2.0 * p * c[k] * c[k] / (q * q);
      // u1 moves a0, hence c_1, p and q.
      const double dc1 = -da0;
      const double dp = 0.5 / su1 * c[0] + su1 * dc1;
      const double dq = c[0] * c[0] + 2.0 * u1 * c[0] * dc1;
      const double dt = -2.0 * (dp * q - p * dq) / (q * q);
      gu(0, 0) += gc * dt + g(0) * da0 * (1.0 - t);
    }
    tp.accumulate(n.parents[0], gv);
    tp.accumulate(n.parents[1], gu);
  });
}

NodeId Tape::row_project_pu(NodeId x, const ManifoldSpec& m, ZeroRowPolicy policy) {
  return row_project_pu(x, constant(m.u_diag()), policy);
}

NodeId Tape::row_push_forward(NodeId w, const ManifoldSpec& m) {
  return row_push_forward(w, constant(m.u_diag()), m.b());
}

NodeId Tape::row_push_back(NodeId v, const ManifoldSpec& m) {
  return row_push_back(v, constant(m.u_diag()));
}

NodeId Tape::dropout(NodeId x, double p, std::uint64_t seed, bool train) {
  check(x);
  if (!(p >= 0.0 && p < 1.0)) throw Error(ErrorKind::ConfigError, "dropout rate must be in [0,1)");
  const Matrix& xv = value(x);
  if (!train || p == 0.0) {
    return push(OpKind::Dropout, {x}, xv,
                [](Tape& t, const Node& n) { t.accumulate(n.parents[0], n.grad); });
  }
  Rng rng(seed);
  Matrix mask(xv.rows(), xv.cols());
  const double keep = 1.0 / (1.0 - p);
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.bernoulli(p) ? 0.0 : keep;
  Matrix y = xv.cwiseProduct(mask);
  return push(OpKind::Dropout, {x}, std::move(y), [mask = std::move(mask)](Tape& t, const Node& n) {
    t.accumulate(n.parents[0], n.grad.cwiseProduct(mask));
  });
}

NodeId Tape::log_softmax_rows(NodeId x) {
  check(x);
  const Matrix& xv = value(x);
  Matrix y(xv.rows(), xv.cols());
  for (Index i = 0; i < xv.rows(); ++i) {
    const double mx = xv.row(i).maxCoeff();
    const double lse = mx + std::log((xv.row(i).array() - mx).exp().sum());
    y.row(i) = xv.row(i).array() - lse;
  }
  return push(OpKind::LogSoftmaxRows, {x}, std::move(y), [](Tape& t, const Node& n) {
    const Matrix probs = n.value.array().exp().matrix();
    Matrix gx = n.grad;
    for (Index i = 0; i < gx.rows(); ++i) gx.row(i) -= n.grad.row(i).sum() * probs.row(i);
    t.accumulate(n.parents[0], gx);
  });
}

NodeId Tape::masked_nll(NodeId log_probs, std::span<const Index> labels,
                        std::span<const Index> mask) {
  check(log_probs);
  const Matrix& lp = value(log_probs);
  if (static_cast<Index>(labels.size()) != lp.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "masked_nll: one label per row required");
  }
  if (mask.empty()) throw Error(ErrorKind::ShapeMismatch, "masked_nll: empty mask");
  double loss = 0.0;
  for (Index i : mask) {
    if (i < 0 || i >= lp.rows()) throw Error(ErrorKind::IndexOutOfRange, "masked_nll mask");
    const Index y = labels[i];
    if (y < 0 || y >= lp.cols()) throw Error(ErrorKind::LabelOutOfRange, "masked_nll label");
    loss -= lp(i, y);
  }
  const double inv = 1.0 / static_cast<double>(mask.size());
  Matrix out(1, 1);
  out(0, 0) = loss * inv;
  std::vector<Index> lab(labels.begin(), labels.end());
  std::vector<Index> msk(mask.begin(), mask.end());
  return push(OpKind::MaskedNll, {log_probs}, std::move(out),
              [lab = std::move(lab), msk = std::move(msk), inv](Tape& t, const Node& n) {
                const Matrix& lp = t.value(n.parents[0]);
                Matrix g = Matrix::Zero(lp.rows(), lp.cols());
                for (Index i : msk) g(i, lab[i]) -= inv * n.grad(0, 0);
                t.accumulate(n.parents[0], g);
              });
}

NodeId Tape::attention_weights(std::shared_ptr<const AggregatorMatrix> pattern, NodeId z,
                               NodeId a, double alpha) {
  check(z);
  check(a);
  const Matrix& zv = value(z);
  const Matrix& av = value(a);
  const Index d = zv.cols();
  if (zv.rows() != pattern->n_nodes()) shape_error("attention_weights", zv, av);
  if (av.rows() != 1 || av.cols() != 2 * d) shape_error("attention_weights", zv, av);
  const auto offs = pattern->row_offsets();
  const auto cols = pattern->cols();
  const Eigen::VectorXd left = zv * av.leftCols(d).transpose();
  const Eigen::VectorXd right = zv * av.rightCols(d).transpose();
  Matrix w(pattern->nnz(), 1);
  for (Index i = 0; i < pattern->n_nodes(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Index k = offs[i]; k < offs[i + 1]; ++k) {
      const double s = left[i] + right[cols[k]];
      w(k, 0) = s > 0.0 ? s : alpha * s;
      mx = std::max(mx, w(k, 0));
    }
    double total = 0.0;
    for (Index k = offs[i]; k < offs[i + 1]; ++k) {
      w(k, 0) = std::exp(w(k, 0) - mx);
      total += w(k, 0);
    }
    for (Index k = offs[i]; k < offs[i + 1]; ++k) w(k, 0) /= total;
  }
  return push(OpKind::AttentionWeights, {z, a}, std::move(w),
              [pattern, alpha, d](Tape& t, const Node& n) {
                const Matrix& zv = t.value(n.parents[0]);
                const Matrix& av = t.value(n.parents[1]);
                const auto offs = pattern->row_offsets();
                const auto cols = pattern->cols();
                const Eigen::VectorXd left = zv * av.leftCols(d).transpose();
                const Eigen::VectorXd right = zv * av.rightCols(d).transpose();
                Matrix gz = Matrix::Zero(zv.rows(), d);
                Matrix ga = Matrix::Zero(1, 2 * d);
                for (Index i = 0; i < pattern->n_nodes(); ++i) {
                  double dot = 0.0;
                  for (Index k = offs[i]; k < offs[i + 1]; ++k) dot += n.value(k, 0) * n.grad(k, 0);
                  for (Index k = offs[i]; k < offs[i + 1]; ++k) {
                    const Index j = cols[k];
                    const double s = left[i] + right[j];
                    const double de = n.value(k, 0) * (n.grad(k, 0) - dot);
                    const double ds = de * (s > 0.0 ? 1.0 : alpha);
                    gz.row(i) += ds * av.leftCols(d);
                    gz.row(j) += ds * av.rightCols(d);
                    ga.leftCols(d) += ds * zv.row(i);
                    ga.rightCols(d) += ds * zv.row(j);
                  }
                }
                t.accumulate(n.parents[0], gz);
                t.accumulate(n.parents[1], ga);
              });
}

NodeId Tape::forward(OpKind kind, std::span<const NodeId> parents, const OpAttrs& attrs) {
  auto need_op = [&]() -> std::shared_ptr<const AggregatorMatrix> {
    if (!attrs.op) throw Error(ErrorKind::ShapeMismatch, std::string(to_string(kind)) + " needs an operator");
    return attrs.op;
  };
  switch (kind) {
    case OpKind::Constant: require_arity(kind, parents, 0); return constant(attrs.value);
    case OpKind::Parameter: require_arity(kind, parents, 0); return parameter(attrs.value);
    case OpKind::SpmmConst: require_arity(kind, parents, 1); return spmm(need_op(), parents[0]);
    case OpKind::SpmmValues:
      require_arity(kind, parents, 2);
      return spmm_values(need_op(), parents[0], parents[1]);
    case OpKind::Matmul: require_arity(kind, parents, 2); return matmul(parents[0], parents[1]);
    case OpKind::Add: require_arity(kind, parents, 2); return add(parents[0], parents[1]);
    case OpKind::Mul: require_arity(kind, parents, 2); return mul(parents[0], parents[1]);
    case OpKind::Scale: require_arity(kind, parents, 1); return scale(parents[0], attrs.scalar);
    case OpKind::Sum: require_arity(kind, parents, 1); return sum(parents[0]);
    case OpKind::Tanh: require_arity(kind, parents, 1); return tanh(parents[0]);
    case OpKind::Relu: require_arity(kind, parents, 1); return relu(parents[0]);
    case OpKind::LeakyRelu: require_arity(kind, parents, 1); return leaky_relu(parents[0], attrs.alpha);
    case OpKind::Softplus: require_arity(kind, parents, 1); return softplus(parents[0], attrs.scalar);
    case OpKind::RowProjectPu:
      require_arity(kind, parents, 2);
      return row_project_pu(parents[0], parents[1], attrs.zero_rows);
    case OpKind::RowPushForward:
      require_arity(kind, parents, 2);
      return row_push_forward(parents[0], parents[1], attrs.b);
    case OpKind::RowPushBack: require_arity(kind, parents, 2); return row_push_back(parents[0], parents[1]);
    case OpKind::Dropout:
      require_arity(kind, parents, 1);
      return dropout(parents[0], attrs.p, attrs.seed, attrs.train);
    case OpKind::LogSoftmaxRows: require_arity(kind, parents, 1); return log_softmax_rows(parents[0]);
    case OpKind::MaskedNll:
      require_arity(kind, parents, 1);
      return masked_nll(parents[0], attrs.labels, attrs.mask);
    case OpKind::AttentionWeights:
      require_arity(kind, parents, 2);
      return attention_weights(need_op(), parents[0], parents[1], attrs.alpha);
  }
  throw Error(ErrorKind::UnknownOp, "op kind " + std::to_string(static_cast<int>(kind)));
}

void Tape::backward(NodeId loss) {
  check(loss);
  if (value(loss).rows() != 1 || value(loss).cols() != 1) {
    throw Error(ErrorKind::NonScalarLoss, "loss has shape " + std::to_string(value(loss).rows()) +
                                              "x" + std::to_string(value(loss).cols()));
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  Node& root = mut(loss);
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (NodeId id = loss; id >= 0; --id) {
    const Node& n = node(id);
    if (n.grad.size() == 0 || !n.backprop) continue;
    n.backprop(*this, n);
  }
}

void adam_step(std::span<Matrix> params, std::span<const Matrix> grads, AdamState& state,
               std::span<const bool> decay_mask) {
  if (params.size() != grads.size()) {
    throw Error(ErrorKind::ShapeMismatch, "adam_step: params and grads differ in count");
  }
  if (!decay_mask.empty() && decay_mask.size() != params.size()) {
    throw Error(ErrorKind::ShapeMismatch, "adam_step: decay mask length");
  }
  auto& cfg = state.config;
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Matrix::Zero(p.rows(), p.cols()));
      state.v.push_back(Matrix::Zero(p.rows(), p.cols()));
    }
  }
  if (state.m.size() != params.size()) throw Error(ErrorKind::ShapeMismatch, "adam_step: state");
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = params[k];
    if (grads[k].rows() != p.rows() || grads[k].cols() != p.cols() ||
        state.m[k].rows() != p.rows() || state.m[k].cols() != p.cols()) {
      shape_error("adam_step", p, grads[k]);
    }
    Matrix g = grads[k];
    if (cfg.weight_decay != 0.0 && (decay_mask.empty() || decay_mask[k])) g += cfg.weight_decay * p;
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g;
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    const auto mhat = state.m[k].array() / bc1;
    const auto vhat = state.v[k].array() / bc2;
    p.array() -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
  }
}

Matrix glorot_init(Index rows, Index cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw Error(ErrorKind::ShapeMismatch, "glorot_init needs rows, cols >= 1");
  Rng rng(seed);
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-s, s);
  return w;
}

}  // namespace acmgnn
