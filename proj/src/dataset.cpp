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

#include "acmgnn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "acmgnn/error.hpp"
#include "acmgnn/rng.hpp"
#include "json.hpp"

namespace acmgnn {

namespace fs = std::filesystem;

void validate(const Dataset& ds) {
  const Index n = ds.graph.n_nodes();
  if (ds.features.rows() != n)
    throw Error(ErrorKind::ShapeMismatch, "features have " + std::to_string(ds.features.rows()) +
                                              " rows for " + std::to_string(n) + " nodes");
  if (static_cast<Index>(ds.labels.size()) != n)
    throw Error(ErrorKind::ShapeMismatch, "labels have " + std::to_string(ds.labels.size()) +
                                              " entries for " + std::to_string(n) + " nodes");
  for (std::size_t i = 0; i < ds.labels.size(); ++i)
    if (ds.labels[i] < 0 || ds.labels[i] >= ds.n_classes)
      throw Error(ErrorKind::LabelOutOfRange, "node " + std::to_string(i) + " has label " +
                                                  std::to_string(ds.labels[i]));
  std::vector<int> owner(static_cast<std::size_t>(n), -1);
  const std::vector<Index>* sets[] = {&ds.split.train, &ds.split.val, &ds.split.test};
  const char* names[] = {"train", "val", "test"};
  for (int s = 0; s < 3; ++s) {
    for (Index v : *sets[s]) {
      if (v < 0 || v >= n)
        throw Error(ErrorKind::IndexOutOfRange,
                    std::string(names[s]) + " index " + std::to_string(v) + " out of range");
      int& o = owner[static_cast<std::size_t>(v)];
      if (o >= 0)
        throw Error(ErrorKind::SplitOverlap, "node " + std::to_string(v) + " in both " +
                                                 names[o] + " and " + names[s]);
      o = s;
    }
  }
}

namespace {

std::ifstream open_input(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw Error(ErrorKind::MissingFile, "cannot open " + p.string());
  return f;
}

[[noreturn]] void parse_fail(const fs::path& p, std::size_t line, const std::string& what) {
  throw Error(ErrorKind::ParseError, p.filename().string() + ":" + std::to_string(line) + ": " + what);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  while (!s.empty() && (s.front() == ' ')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Lines with trailing CR stripped; a final empty line is not yielded.
std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream f = open_input(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::vector<Index> read_labels(const fs::path& p) {
  const auto lines = read_lines(p);
  std::vector<Index> labels;
  labels.reserve(lines.size());
  for (std::size_t k = 0; k < lines.size(); ++k) {
    Index y = 0;
    if (!parse_number(lines[k], y)) parse_fail(p, k + 1, "expected an integer label");
    labels.push_back(y);
  }
  return labels;
}

std::vector<Edge> read_edges(const fs::path& p) {
  const auto lines = read_lines(p);
  std::vector<Edge> edges;
  edges.reserve(lines.size());
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const std::string& l = lines[k];
    if (l.empty()) continue;
    const auto tab = l.find('\t');
    Index a = 0;
    Index b = 0;
    if (tab == std::string::npos || l.find('\t', tab + 1) != std::string::npos ||
        !parse_number(std::string_view(l).substr(0, tab), a) ||
        !parse_number(std::string_view(l).substr(tab + 1), b))
      parse_fail(p, k + 1, "expected two tab-separated integers");
    edges.emplace_back(a, b);
  }
  return edges;
}

Matrix read_features(const fs::path& p) {
  const auto lines = read_lines(p);
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    std::string_view l = lines[k];
    if (l.empty() && k + 1 == lines.size()) break;
    Index c = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = l.find(',', start);
      double v = 0.0;
      if (!parse_number(l.substr(start, comma == std::string_view::npos ? l.npos : comma - start), v))
        parse_fail(p, k + 1, "expected comma-separated decimals");
      values.push_back(v);
      ++c;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cols >= 0 && c != cols)
      parse_fail(p, k + 1, "row has " + std::to_string(c) + " columns, expected " + std::to_string(cols));
    cols = c;
    ++rows;
  }
  if (rows == 0) return Matrix(0, 0);
  Matrix X(rows, cols);
  std::copy(values.begin(), values.end(), X.data());
  return X;
}

Split read_splits(const fs::path& p) {
  std::ifstream f = open_input(p);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, p.filename().string() + ": " + e.what());
  }
  Split s;
  auto get = [&](const char* key, std::vector<Index>& out) {
    if (!j.is_object() || !j.contains(key) || !j[key].is_array())
      throw Error(ErrorKind::ParseError, p.filename().string() + ": missing array '" + key + "'");
    for (const auto& v : j[key]) {
      if (!v.is_number_integer())
        throw Error(ErrorKind::ParseError, p.filename().string() + ": non-integer in '" + key + "'");
      out.push_back(v.get<Index>());
    }
  };
  get("train", s.train);
  get("val", s.val);
  get("test", s.test);
  return s;
}

}  // namespace

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw Error(ErrorKind::MissingFile, "no dataset directory " + dir);
  for (const char* name : {"edges.tsv", "features.csv", "labels.csv", "splits.json"})
    if (!fs::exists(root / name)) throw Error(ErrorKind::MissingFile, "missing " + (root / name).string());

  Dataset ds;
  ds.labels = read_labels(root / "labels.csv");
  const Index n = static_cast<Index>(ds.labels.size());
  ds.n_classes = ds.labels.empty() ? 0 : *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  const auto edges = read_edges(root / "edges.tsv");
  ds.graph = build_graph(edges, n);
  ds.features = read_features(root / "features.csv");
  ds.split = read_splits(root / "splits.json");
  validate(ds);
  return ds;
}

void write_dataset(const std::string& dir, const Dataset& ds) {
  validate(ds);
  const fs::path root(dir);
  fs::create_directories(root);
  auto open = [&](const char* name) {
    std::FILE* f = std::fopen((root / name).string().c_str(), "w");
    if (!f) throw Error(ErrorKind::MissingFile, "cannot write " + (root / name).string());
    return f;
  };
  std::FILE* f = open("edges.tsv");
  for (const auto& [a, b] : ds.graph.edge_list()) std::fprintf(f, "%lld\t%lld\n", (long long)a, (long long)b);
  std::fclose(f);

  f = open("features.csv");
  for (Index i = 0; i < ds.features.rows(); ++i) {
    for (Index j = 0; j < ds.features.cols(); ++j)
      std::fprintf(f, j ? ",%.17g" : "%.17g", ds.features(i, j));
    std::fprintf(f, "\n");
  }
  std::fclose(f);

  f = open("labels.csv");
  for (Index y : ds.labels) std::fprintf(f, "%lld\n", (long long)y);
  std::fclose(f);

  const nlohmann::json j = {{"train", ds.split.train}, {"val", ds.split.val}, {"test", ds.split.test}};
  std::ofstream s(root / "splits.json");
  s << j.dump() << '\n';
}

Dataset synth_sbm(const SbmConfig& cfg) {
  auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob_ok(cfg.p_in) || !prob_ok(cfg.p_out))
    throw Error(ErrorKind::InvalidProbability, "p_in and p_out must lie in [0, 1]");
  if (cfg.n_blocks < 1 || cfg.n < 1 || cfg.n % cfg.n_blocks != 0)
    throw Error(ErrorKind::IndivisibleBlocks, std::to_string(cfg.n) + " nodes into " +
                                                  std::to_string(cfg.n_blocks) + " blocks");
  if (cfg.feat_dim < 1 || !(cfg.sigma >= 0.0))
    throw Error(ErrorKind::ConfigError, "feat_dim must be >= 1 and sigma >= 0");

  Rng rng(cfg.seed);
  const Index n = cfg.n;
  const Index size = n / cfg.n_blocks;
  Dataset ds;
  ds.n_classes = cfg.n_blocks;
  ds.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ds.labels[static_cast<std::size_t>(i)] = i / size;

  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      if (rng.bernoulli(i / size == j / size ? cfg.p_in : cfg.p_out)) edges.emplace_back(i, j);
  ds.graph = build_graph(edges, n);

  Matrix means(cfg.n_blocks, cfg.feat_dim);
  for (Index b = 0; b < cfg.n_blocks; ++b) {
    do {
      for (Index j = 0; j < cfg.feat_dim; ++j) means(b, j) = rng.normal();
    } while (means.row(b).norm() == 0.0);
    means.row(b).normalize();
  }
  ds.features.resize(n, cfg.feat_dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < cfg.feat_dim; ++j)
      ds.features(i, j) = means(i / size, j) + cfg.sigma * rng.normal();

  for (Index b = 0; b < cfg.n_blocks; ++b) {
    std::vector<Index> members(static_cast<std::size_t>(size));
    for (Index k = 0; k < size; ++k) members[static_cast<std::size_t>(k)] = b * size + k;
    // Explicit Fisher-Yates: std::shuffle draws are implementation-defined.
    for (std::size_t k = members.size(); k > 1; --k)
      std::swap(members[k - 1], members[rng.uniform_index(k)]);
    const auto tr = std::min<std::size_t>(members.size(), static_cast<std::size_t>(cfg.train_per_class));
    const auto va = std::min<std::size_t>(members.size() - tr, static_cast<std::size_t>(cfg.val_per_class));
    ds.split.train.insert(ds.split.train.end(), members.begin(), members.begin() + tr);
    ds.split.val.insert(ds.split.val.end(), members.begin() + tr, members.begin() + tr + va);
    ds.split.test.insert(ds.split.test.end(), members.begin() + tr + va, members.end());
  }
  for (auto* s : {&ds.split.train, &ds.split.val, &ds.split.test}) std::sort(s->begin(), s->end());
  return ds;
}

Dataset apply_missing_features(const Dataset& ds) {
  Dataset out = ds;
  for (Index v : ds.split.val) out.features.row(v).setZero();
  for (Index v : ds.split.test) out.features.row(v).setZero();
  return out;
}

double modularity(const Graph& g, const std::vector<Index>& labels) {
  if (static_cast<Index>(labels.size()) != g.n_nodes())
    throw Error(ErrorKind::ShapeMismatch, "one label per node expected");
  const double m2 = 2.0 * double(g.n_edges());
  if (m2 == 0.0) return 0.0;
  Index k = 0;
  for (Index y : labels) k = std::max(k, y + 1);
  std::vector<double> within(static_cast<std::size_t>(k), 0.0);
  std::vector<double> degree_sum(static_cast<std::size_t>(k), 0.0);
  for (Index i = 0; i < g.n_nodes(); ++i) {
    const auto c = static_cast<std::size_t>(labels[static_cast<std::size_t>(i)]);
    degree_sum[c] += double(g.degree(i));
    for (Index j : g.neighbors(i))
      if (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(i)]) within[c] += 1.0;
  }
  double q = 0.0;
  for (std::size_t c = 0; c < within.size(); ++c) q += within[c] / m2 - std::pow(degree_sum[c] / m2, 2);
  return q;
}

}  // namespace acmgnn
