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
#include <string>
#include <vector>

#include "acmgnn/graph.hpp"
#include "acmgnn/types.hpp"

namespace acmgnn {

struct Split {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;
};

struct Dataset {
  Graph graph;
  Matrix features;
  std::vector<Index> labels;
  Index n_classes = 0;
  Split split;
};

/// Throws ShapeMismatch, LabelOutOfRange, IndexOutOfRange or SplitOverlap.
void validate(const Dataset& ds);

/// Reads edges.tsv, features.csv, labels.csv and splits.json from `dir`.
/// The node count is the number of labels; n_classes is max label + 1.
Dataset load_dataset(const std::string& dir);
/// Writes the same four files; floats use 17 significant digits.
void write_dataset(const std::string& dir, const Dataset& ds);

struct SbmConfig {
  Index n = 200;
  Index n_blocks = 2;
  double p_in = 0.1;
  double p_out = 0.01;
  Index feat_dim = 8;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  Index train_per_class = 20;
  Index val_per_class = 30;
};

/// Planted-partition graph with Gaussian features around unit-norm block means.
Dataset synth_sbm(const SbmConfig& cfg);

/// Zeroes the feature rows of every validation and test node.
Dataset apply_missing_features(const Dataset& ds);

/// Newman modularity of a partition.
double modularity(const Graph& g, const std::vector<Index>& labels);

}  // namespace acmgnn
