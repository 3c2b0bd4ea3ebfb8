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

#include "acmgnn/types.hpp"

namespace acmgnn {

/// The compact hypersurface M_U = { x : x U x^T = 1 } for a positive diagonal U,
/// together with the chart data used by push_forward / push_back: the center
/// x0 = (a0, 0, ..., 0) with a0 = U_11^{-1/2}, and the hyperplane N_b = { x_1 = b }.
class ManifoldSpec {
 public:
  static constexpr double kNormFloor = 1e-12;
  static constexpr double kCenterGuard = 1e-9;

  /// Throws InvalidManifold if any entry of u_diag is not strictly positive
  /// or if b coincides with a0.
  explicit ManifoldSpec(RowVector u_diag, double b = 0.0);

  /// Unit hypersphere in `dim` dimensions.
  static ManifoldSpec sphere(Index dim, double b = 0.0);

  Index dim() const noexcept { return u_diag_.size(); }
  const RowVector& u_diag() const noexcept { return u_diag_; }
  double a0() const noexcept { return a0_; }
  double b() const noexcept { return b_; }
  RowVector x0() const;

  /// x U y^T.
  double inner(const RowVector& x, const RowVector& y) const noexcept;
  /// x U x^T.
  double quad(const RowVector& x) const noexcept { return inner(x, x); }

 private:
  RowVector u_diag_;
  double a0_ = 1.0;
  double b_ = 0.0;
};

/// P_U(x) = x / sqrt(x U x^T). Throws NearZeroVector when x U x^T < kNormFloor^2.
RowVector project_pu(const RowVector& x, const ManifoldSpec& m);

/// PF(w) = ((b - a0) / (w_1 - a0)) (w - x0) + x0. Throws AtProjectionCenter
/// when |w_1 - a0| < kCenterGuard.
RowVector push_forward(const RowVector& w, const ManifoldSpec& m);

/// PB(v) = (-2 (v - x0) U x0^T / ((v - x0) U (v - x0)^T)) (v - x0) + x0.
/// Throws AtProjectionCenter when (v - x0) U (v - x0)^T < kNormFloor^2.
RowVector push_back(const RowVector& v, const ManifoldSpec& m);

/// Geodesic distance on M_U, i.e. the great-circle angle after z = x U^{1/2}.
/// Evaluated as 2 atan2(|z - w|, |z + w|), which equals arccos(x U y^T) on the
/// manifold but stays accurate near 0 and pi. Throws NotOnManifold if either
/// point misses M_U by more than 1e-8.
double manifold_distance(const RowVector& x, const RowVector& y, const ManifoldSpec& m);

/// Row-wise helpers used by models and the contraction lab.
enum class ZeroRowPolicy { Throw, MapToCenter };
Matrix project_rows(const Matrix& X, const ManifoldSpec& m,
                    ZeroRowPolicy policy = ZeroRowPolicy::Throw);
/// Row-wise PF with the chart singularity clamped: the denominator w_1 - a0
/// is pushed to magnitude kCenterGuard instead of raising.
Matrix push_forward_rows_clamped(const Matrix& W, const ManifoldSpec& m);
Matrix push_back_rows(const Matrix& V, const ManifoldSpec& m);

/// max_i |h_i U h_i^T - 1|.
double max_manifold_residual(const Matrix& H, const ManifoldSpec& m);

}  // namespace acmgnn
