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

#include "acmgnn/contraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "acmgnn/error.hpp"
#include "acmgnn/models.hpp"
#include "acmgnn/rng.hpp"
#include "json.hpp"

namespace acmgnn {

double Metric::operator()(const RowVector& x, const RowVector& y) const {
  if (manifold_) return manifold_distance(x, y, *manifold_);
  return (x - y).norm();
}

AggFn linear_agg(std::shared_ptr<const AggregatorMatrix> L) {
  return [L = std::move(L)](const Matrix& H) { return spmm(*L, H); };
}

AggFn acm_agg(std::shared_ptr<const AggregatorMatrix> L, ManifoldSpec m) {
  return [L = std::move(L), m = std::move(m)](const Matrix& H) {
    return project_rows(spmm(*L, H), m);
  };
}

AggFn attention_agg(const Graph& g, Matrix W_att, RowVector a, double alpha) {
  auto graph = std::make_shared<const Graph>(g);
  return [graph, W = std::move(W_att), a = std::move(a), alpha](const Matrix& H) {
    return spmm(gat_attention(*graph, H, W, a, alpha), H);
  };
}

PairwiseStats pairwise_stats(const Matrix& H, const Metric& metric) {
  PairwiseStats s;
  const Index n = H.rows();
  if (n < 2) return s;
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double d = metric(H.row(i), H.row(j));
      s.max = std::max(s.max, d);
      total += d;
    }
  }
  s.mean = total / (0.5 * double(n) * double(n - 1));
  return s;
}

namespace {

StepStats step_stats(const Matrix& H, const Metric& metric, const RowVector& ref) {
  const PairwiseStats p = pairwise_stats(H, metric);
  StepStats s{p.max, p.mean, 0.0};
  for (Index i = 0; i < H.rows(); ++i) s.max_to_ref = std::max(s.max_to_ref, metric(ref, H.row(i)));
  return s;
}

std::vector<Index> closed_neighborhood(const Graph& g, Index i) {
  std::vector<Index> nb{i};
  for (Index j : g.neighbors(i)) nb.push_back(j);
  return nb;
}

RowVector random_point(Index d, const Metric& metric, Rng& rng) {
  RowVector x(d);
  for (Index j = 0; j < d; ++j) x[j] = rng.normal();
  if (metric.is_manifold()) return project_pu(x, metric.spec());
  return x;
}

Matrix random_embedding(Index n, Index d, const Metric& metric, Rng& rng) {
  Matrix H(n, d);
  for (Index i = 0; i < n; ++i) H.row(i) = random_point(d, metric, rng);
  return H;
}

double max_within(const Matrix& H, const std::vector<Index>& nb, const Metric& metric) {
  double worst = 0.0;
  for (std::size_t a = 0; a < nb.size(); ++a)
    for (std::size_t b = a + 1; b < nb.size(); ++b)
      worst = std::max(worst, metric(H.row(nb[a]), H.row(nb[b])));
  return worst;
}

void record(ConditionTally& t, double excess, Witness w) {
  ++t.violations;
  if (!t.worst || excess > t.worst_excess) {
    t.worst_excess = excess;
    t.worst = std::move(w);
  }
}

// Condition 2 on one configuration; returns true if it was an equality case.
bool test_condition2(const AggFn& agg, const Matrix& H, const RowVector& x, Index i,
                     const std::vector<Index>& nb, const Metric& metric,
                     const ContractionOptions& opts, ContractionReport& r) {
  const Matrix out = agg(H);
  const double lhs = metric(x, out.row(i));
  double rhs = 0.0;
  for (Index j : nb) rhs = std::max(rhs, metric(x, H.row(j)));
  if (lhs > rhs + opts.tol) record(r.condition2, lhs - rhs, Witness{i, H, x, lhs, rhs});
  if (max_within(H, nb, metric) <= opts.strict_margin) return false;
  ++r.strictness_tested;
  if (lhs < rhs - opts.strict_margin) return false;
  ++r.equality_without_identical;
  if (!r.equality_witness) r.equality_witness = Witness{i, H, x, lhs, rhs};
  return true;
}

}  // namespace

Trajectory iterate(const AggFn& agg, const Matrix& H0, Index steps, const Metric& metric,
                   std::optional<RowVector> reference) {
  if (steps < 0) throw Error(ErrorKind::ConfigError, "steps must be >= 0");
  if (H0.rows() < 1) throw Error(ErrorKind::ShapeMismatch, "empty embedding");
  Trajectory t;
  t.reference = reference ? *reference : RowVector(H0.row(0));
  const Index stride = std::max<Index>(1, (steps + 99) / 100);
  Matrix H = H0;
  t.step_stats.reserve(static_cast<std::size_t>(steps + 1));
  for (Index k = 0;; ++k) {
    if (k % stride == 0 || k == steps) {
      t.snapshot_steps.push_back(k);
      t.snapshots.push_back(H);
    }
    t.step_stats.push_back(step_stats(H, metric, t.reference));
    if (k == steps) break;
    Matrix next = agg(H);
    if (next.rows() != H.rows() || next.cols() != H.cols())
      throw Error(ErrorKind::ShapeMismatch, "aggregation changed the embedding shape");
    H = std::move(next);
  }
  return t;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::ConsistentWithContracted: return "consistent_with_contracted";
    case Verdict::Refuted: return "refuted";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

std::optional<Witness> noncontraction_witness(const AggFn& agg, const Graph& g,
                                              const ManifoldSpec& m, double margin) {
  const Index d = m.dim();
  if (d < 2) return std::nullopt;
  const double s1 = 1.0 / std::sqrt(m.u_diag()[0]);
  const double s2 = 1.0 / std::sqrt(m.u_diag()[1]);
  auto on_plane = [&](double theta) {
    RowVector p = RowVector::Zero(d);
    p[0] = std::cos(theta) * s1;
    p[1] = std::sin(theta) * s2;
    return p;
  };
  const RowVector x0 = m.x0();
  const RowVector ref = -x0;
  const Metric metric = Metric::manifold(m);

  for (Index u0 = 0; u0 < g.n_nodes(); ++u0) {
    if (g.degree(u0) + 1 <= 2) continue;
    const Index j1 = g.neighbors(u0)[0];
    const Index j2 = g.neighbors(u0)[1];
    for (double alpha = std::numbers::pi / 4; alpha > 1e-3; alpha /= 2) {
      Matrix H = Matrix::Zero(g.n_nodes(), d);
      for (Index i = 0; i < g.n_nodes(); ++i) H.row(i) = x0;
      H.row(j1) = on_plane(alpha);
      // Second-coordinate of the aggregated u0 row as a function of j2's angle.
      auto imbalance = [&](double beta) {
        H.row(j2) = on_plane(-beta);
        return agg(H)(u0, 1);
      };
      double lo = 0.0;
      double hi = std::numbers::pi / 2;
      if (!(imbalance(lo) > 0.0) || !(imbalance(hi) < 0.0)) continue;
      for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (imbalance(mid) > 0.0 ? lo : hi) = mid;
      }
      H.row(j2) = on_plane(-lo);
      const Matrix out = agg(H);
      if (!(out(u0, 0) > 0.0)) continue;
      const double lhs = metric(ref, out.row(u0));
      double rhs = 0.0;
      for (Index j : closed_neighborhood(g, u0)) rhs = std::max(rhs, metric(ref, H.row(j)));
      if (lhs >= rhs - margin) return Witness{u0, H, ref, lhs, rhs};
    }
  }
  return std::nullopt;
}

ContractionReport check_contracted(const AggFn& agg, const Graph& g, const Metric& metric,
                                   const ContractionOptions& opts) {
  if (opts.n_samples < 1) throw Error(ErrorKind::ConfigError, "n_samples must be >= 1");
  const Index n = g.n_nodes();
  const Index d = metric.is_manifold() ? metric.spec().dim() : opts.dim;
  if (n < 1 || d < 1) throw Error(ErrorKind::ConfigError, "empty graph or dimension");

  ContractionReport r;
  r.metric = metric.name();
  for (Index i = 0; i < n; ++i)
    if (g.degree(i) + 1 > 2) {
      r.hypothesis_node = i;
      break;
    }

  Rng rng(opts.seed);
  for (Index s = 0; s < opts.n_samples; ++s) {
    ++r.samples;
    const Index i = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    const auto nb = closed_neighborhood(g, i);

    // Condition 1: a constant neighbourhood is fixed.
    Matrix H1 = random_embedding(n, d, metric, rng);
    const RowVector y = random_point(d, metric, rng);
    for (Index j : nb) H1.row(j) = y;
    const double drift = metric(agg(H1).row(i), y);
    if (drift > opts.tol) record(r.condition1, drift, Witness{i, H1, y, drift, 0.0});

    // Condition 2: the aggregated row is no farther from x than the farthest neighbour.
    const Matrix H = random_embedding(n, d, metric, rng);
    const RowVector x = random_point(d, metric, rng);
    test_condition2(agg, H, x, i, nb, metric, opts, r);
  }

  if (opts.targeted_search) {
    r.targeted_search = true;
    if (metric.is_manifold()) {
      if (r.hypothesis_node >= 0) {
        ++r.samples;
        if (auto w = noncontraction_witness(agg, g, metric.spec(), opts.strict_margin)) {
          ++r.strictness_tested;
          ++r.equality_without_identical;
          if (!r.equality_witness) r.equality_witness = std::move(w);
        }
      }
    } else {
      // Node i held farthest from x = 0, neighbours strictly closer.
      for (Index i = 0; i < n; ++i) {
        if (g.degree(i) == 0) continue;
        ++r.samples;
        const auto nb = closed_neighborhood(g, i);
        Matrix H = random_embedding(n, d, metric, rng);
        for (Index j : nb) {
          const double norm = H.row(j).norm();
          if (norm > 0.0) H.row(j) *= rng.uniform(0.1, 1.0) / norm;
        }
        H.row(i) = RowVector::Zero(d);
        H(i, 0) = 2.0;
        test_condition2(agg, H, RowVector::Zero(d), i, nb, metric, opts, r);
      }
    }
  }

  if (r.condition1.violations || r.condition2.violations || r.equality_without_identical)
    r.verdict = Verdict::Refuted;
  else if (r.strictness_tested > 0)
    r.verdict = Verdict::ConsistentWithContracted;
  else
    r.verdict = Verdict::Inconclusive;
  return r;
}

double check_equiv_contracted_sym(const Graph& g, double lambda, const Matrix& H0, Index steps) {
  const AggregatorMatrix sym = make_aggregator(g, AggregatorKind::SymNorm, lambda);
  const AggregatorMatrix rw = make_aggregator(g, AggregatorKind::RowNorm, lambda);
  if (H0.rows() != g.n_nodes()) throw Error(ErrorKind::ShapeMismatch, "H0 rows != nodes");
  const auto deg = augmented_degrees(g);
  Eigen::VectorXd sq(g.n_nodes());
  for (Index i = 0; i < g.n_nodes(); ++i) sq[i] = std::sqrt(deg[static_cast<std::size_t>(i)]);

  Matrix A = H0;
  Matrix B = sq.cwiseInverse().asDiagonal() * H0;
  // k = 0 compares H0 with g(g^{-1}(H0)), which is H0 by definition.
  double worst = 0.0;
  for (Index k = 1; k <= steps; ++k) {
    A = spmm(sym, A);
    B = spmm(rw, B);
    worst = std::max(worst, (A - sq.asDiagonal() * B).cwiseAbs().maxCoeff());
  }
  return worst;
}

CollapseResult collapse_check(const AggFn& agg, const Matrix& H0, const Metric& metric,
                              double tol, Index max_steps,
                              const std::function<Matrix(const Matrix&)>& transform) {
  Matrix H = H0;
  CollapseResult r;
  for (Index k = 0;; ++k) {
    r.final_stat = pairwise_stats(transform ? transform(H) : H, metric).max;
    r.steps = k;
    if (r.final_stat < tol) {
      r.collapsed = true;
      return r;
    }
    if (k == max_steps) return r;
    H = agg(H);
  }
}

namespace {

double max_pairwise_euclidean(const Matrix& H, const std::vector<Index>& rows) {
  double worst = 0.0;
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = a + 1; b < rows.size(); ++b)
      worst = std::max(worst, (H.row(rows[a]) - H.row(rows[b])).squaredNorm());
  return std::sqrt(worst);
}

std::function<Matrix(const Matrix&)> measure_transform(const Graph& g, AggregatorKind kind) {
  if (kind != AggregatorKind::SymNorm) return {};
  const auto deg = augmented_degrees(g);
  Eigen::VectorXd inv(g.n_nodes());
  for (Index i = 0; i < g.n_nodes(); ++i) inv[i] = 1.0 / std::sqrt(deg[static_cast<std::size_t>(i)]);
  return [inv](const Matrix& H) -> Matrix { return inv.asDiagonal() * H; };
}

}  // namespace

CollapseResult collapse_check(const Graph& g, AggregatorKind kind, double lambda,
                              const Matrix& H0, double tol, Index max_steps) {
  if (!is_connected(g))
    throw Error(ErrorKind::GraphNotConnected, "collapse_check needs a connected graph");
  if (H0.rows() != g.n_nodes()) throw Error(ErrorKind::ShapeMismatch, "H0 rows != nodes");
  auto L = std::make_shared<const AggregatorMatrix>(make_aggregator(g, kind, lambda));
  return collapse_check(linear_agg(L), H0, Metric::euclidean(), tol, max_steps,
                        measure_transform(g, kind));
}

ComponentCollapse collapse_by_component(const Graph& g, AggregatorKind kind, double lambda,
                                        const Matrix& H0, double tol, Index max_steps) {
  if (H0.rows() != g.n_nodes()) throw Error(ErrorKind::ShapeMismatch, "H0 rows != nodes");
  const AggregatorMatrix L = make_aggregator(g, kind, lambda);
  const auto transform = measure_transform(g, kind);
  ComponentCollapse out;
  out.component = connected_components(g);
  const Index nc = out.component.empty()
                       ? 0
                       : *std::max_element(out.component.begin(), out.component.end()) + 1;
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(nc));
  for (Index i = 0; i < g.n_nodes(); ++i)
    members[static_cast<std::size_t>(out.component[static_cast<std::size_t>(i)])].push_back(i);
  out.results.resize(static_cast<std::size_t>(nc));

  Matrix H = H0;
  for (Index k = 0;; ++k) {
    const Matrix M = transform ? transform(H) : H;
    bool all = true;
    for (std::size_t c = 0; c < members.size(); ++c) {
      auto& r = out.results[c];
      if (r.collapsed) continue;
      r.final_stat = max_pairwise_euclidean(M, members[c]);
      r.steps = k;
      r.collapsed = r.final_stat < tol;
      all = all && r.collapsed;
    }
    if (all || k == max_steps) break;
    H = spmm(L, H);
  }
  out.final_embedding = std::move(H);
  return out;
}

double worst_increase(const std::vector<double>& seq) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < seq.size(); ++k) worst = std::max(worst, seq[k] - seq[k - 1]);
  return seq.size() < 2 ? 0.0 : worst;
}

std::vector<double> max_to_ref_sequence(const Trajectory& t) {
  std::vector<double> out;
  out.reserve(t.step_stats.size());
  for (const auto& s : t.step_stats) out.push_back(s.max_to_ref);
  return out;
}

void write_trajectory_csv(const std::string& path, const Trajectory& t) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorKind::MissingFile, "cannot write " + path);
  std::fprintf(f, "step,max_pairwise,mean_pairwise,max_to_ref\n");
  for (std::size_t k = 0; k < t.step_stats.size(); ++k) {
    const auto& s = t.step_stats[k];
    std::fprintf(f, "%zu,%.17g,%.17g,%.17g\n", k, s.max_pairwise, s.mean_pairwise, s.max_to_ref);
  }
  std::fclose(f);
}

namespace {

nlohmann::json witness_json(const std::optional<Witness>& w) {
  if (!w) return nullptr;
  nlohmann::json H = nlohmann::json::array();
  for (Index i = 0; i < w->H.rows(); ++i) {
    std::vector<double> row(w->H.row(i).data(), w->H.row(i).data() + w->H.cols());
    H.push_back(row);
  }
  return {{"node", w->node},
          {"lhs", w->lhs},
          {"rhs", w->rhs},
          {"reference", std::vector<double>(w->reference.data(),
                                            w->reference.data() + w->reference.size())},
          {"H", H}};
}

nlohmann::json tally_json(const ConditionTally& t) {
  return {{"violations", t.violations}, {"worst_excess", t.worst_excess}, {"worst", witness_json(t.worst)}};
}

}  // namespace

std::string report_json(const ContractionReport& r) {
  nlohmann::json j = {{"metric", r.metric},
                      {"samples", r.samples},
                      {"condition1", tally_json(r.condition1)},
                      {"condition2", tally_json(r.condition2)},
                      {"equality_without_identical", r.equality_without_identical},
                      {"equality_witness", witness_json(r.equality_witness)},
                      {"strictness_tested", r.strictness_tested},
                      {"hypothesis_node", r.hypothesis_node},
                      {"targeted_search", r.targeted_search},
                      {"verdict", to_string(r.verdict)}};
  return j.dump(2);
}

void write_report_json(const std::string& path, const ContractionReport& r) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::MissingFile, "cannot write " + path);
  f << report_json(r) << '\n';
}

}  // namespace acmgnn
