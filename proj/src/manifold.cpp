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

#include "acmgnn/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acmgnn/error.hpp"

namespace acmgnn {

ManifoldSpec::ManifoldSpec(RowVector u_diag, double b) : u_diag_(std::move(u_diag)), b_(b) {
  if (u_diag_.size() == 0) throw Error(ErrorKind::InvalidManifold, "empty U diagonal");
  for (Index k = 0; k < u_diag_.size(); ++k) {
    if (!(u_diag_[k] > 0.0) || !std::isfinite(u_diag_[k])) {
      throw Error(ErrorKind::InvalidManifold,
                  "U must be positive definite (u[" + std::to_string(k) + "]=" +
                      std::to_string(u_diag_[k]) + ")");
    }
  }
  a0_ = 1.0 / std::sqrt(u_diag_[0]);
  if (b_ == a0_) throw Error(ErrorKind::InvalidManifold, "hyperplane passes through x0");
}

ManifoldSpec ManifoldSpec::sphere(Index dim, double b) {
  return ManifoldSpec(RowVector::Ones(dim), b);
}

RowVector ManifoldSpec::x0() const {
  RowVector x = RowVector::Zero(dim());
  x[0] = a0_;
  return x;
}

double ManifoldSpec::inner(const RowVector& x, const RowVector& y) const noexcept {
  return (x.array() * u_diag_.array() * y.array()).sum();
}

namespace {

void check_dim(const RowVector& x, const ManifoldSpec& m, const char* what) {
  if (x.size() != m.dim()) {
    throw Error(ErrorKind::ShapeMismatch, std::string(what) + ": vector has dim " +
                                              std::to_string(x.size()) + ", manifold has " +
                                              std::to_string(m.dim()));
  }
}

}  // namespace

RowVector project_pu(const RowVector& x, const ManifoldSpec& m) {
  check_dim(x, m, "project_pu");
  const double s = m.quad(x);
  if (!(s >= ManifoldSpec::kNormFloor * ManifoldSpec::kNormFloor)) {
    throw Error(ErrorKind::NearZeroVector, "x U x^T = " + std::to_string(s));
  }
  return x / std::sqrt(s);
}

RowVector push_forward(const RowVector& w, const ManifoldSpec& m) {
  check_dim(w, m, "push_forward");
  const double den = w[0] - m.a0();
  if (std::abs(den) < ManifoldSpec::kCenterGuard) {
    throw Error(ErrorKind::AtProjectionCenter, "|w_1 - a0| = " + std::to_string(std::abs(den)));
  }
  const double t = (m.b() - m.a0()) / den;
  RowVector out = t * w;
  out[0] = m.b();  // t * (w_1 - a0) + a0 == b, evaluated exactly
  return out;
}

RowVector push_back(const RowVector& v, const ManifoldSpec& m) {
  check_dim(v, m, "push_back");
  RowVector c = v;
  c[0] -= m.a0();
  const double q = m.quad(c);
  if (!(q >= ManifoldSpec::kNormFloor * ManifoldSpec::kNormFloor)) {
    throw Error(ErrorKind::AtProjectionCenter, "v coincides with x0");
  }
  const double p = m.u_diag()[0] * m.a0() * c[0];
  RowVector out = (-2.0 * p / q) * c;
  out[0] += m.a0();
  return out;
}

double manifold_distance(const RowVector& x, const RowVector& y, const ManifoldSpec& m) {
  check_dim(x, m, "manifold_distance");
  check_dim(y, m, "manifold_distance");
  constexpr double kOnManifoldTol = 1e-8;
  if (std::abs(m.quad(x) - 1.0) > kOnManifoldTol || std::abs(m.quad(y) - 1.0) > kOnManifoldTol) {
    throw Error(ErrorKind::NotOnManifold, "manifold_distance");
  }
  const RowVector root = m.u_diag().array().sqrt().matrix();
  const RowVector zx = x.cwiseProduct(root);
  const RowVector zy = y.cwiseProduct(root);
  return 2.0 * std::atan2((zx - zy).norm(), (zx + zy).norm());
}

Matrix project_rows(const Matrix& X, const ManifoldSpec& m, ZeroRowPolicy policy) {
  if (X.cols() != m.dim()) throw Error(ErrorKind::ShapeMismatch, "project_rows");
  Matrix out(X.rows(), X.cols());
  const RowVector center = m.x0();
  for (Index i = 0; i < X.rows(); ++i) {
    const RowVector x = X.row(i);
    const double s = m.quad(x);
    if (s >= ManifoldSpec::kNormFloor * ManifoldSpec::kNormFloor) {
      out.row(i) = x / std::sqrt(s);
    } else if (policy == ZeroRowPolicy::MapToCenter) {
      out.row(i) = center;
    } else {
      throw Error(ErrorKind::NearZeroVector, "row " + std::to_string(i));
    }
  }
  return out;
}

Matrix push_forward_rows_clamped(const Matrix& W, const ManifoldSpec& m) {
  if (W.cols() != m.dim()) throw Error(ErrorKind::ShapeMismatch, "push_forward_rows");
  Matrix out(W.rows(), W.cols());
  for (Index i = 0; i < W.rows(); ++i) {
    double den = W(i, 0) - m.a0();
    // On M_U, w_1 <= a0 always, so an exact zero is clamped to the negative side.
    if (std::abs(den) < ManifoldSpec::kCenterGuard)
      den = den > 0.0 ? ManifoldSpec::kCenterGuard : -ManifoldSpec::kCenterGuard;
    const double t = (m.b() - m.a0()) / den;
    out.row(i) = t * W.row(i);
    out(i, 0) = t * (W(i, 0) - m.a0()) + m.a0();
  }
  return out;
}

Matrix push_back_rows(const Matrix& V, const ManifoldSpec& m) {
  if (V.cols() != m.dim()) throw Error(ErrorKind::ShapeMismatch, "push_back_rows");
  Matrix out(V.rows(), V.cols());
  for (Index i = 0; i < V.rows(); ++i) out.row(i) = push_back(V.row(i), m);
  return out;
}

double max_manifold_residual(const Matrix& H, const ManifoldSpec& m) {
  double worst = 0.0;
  for (Index i = 0; i < H.rows(); ++i)
    worst = std::max(worst, std::abs(m.quad(H.row(i)) - 1.0));
  return worst;
}

}  // namespace acmgnn
