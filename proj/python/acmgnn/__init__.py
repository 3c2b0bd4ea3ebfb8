# Copyright 2026 The acmgnn Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Graph neural networks with contracted aggregation on manifolds.

Geometry, graph operators and datasets are exposed directly. The experiment
functions accept a run configuration as a dict or a JSON string, using the
same schema as the command-line tool.
"""

import json as _json

from ._acmgnn import (
    Aggregator,
    AggregatorKind,
    Dataset,
    Error,
    Graph,
    ManifoldSpec,
    apply_missing_features,
    check_theory,
    complete_graph,
    cycle_graph,
    distance,
    load_dataset,
    make_aggregator,
    modularity,
    path_graph,
    project,
    project_rows,
    push_back,
    push_forward,
    self_check,
    synth_sbm,
    write_dataset,
)
from . import _acmgnn

__all__ = [
    "Aggregator", "AggregatorKind", "Dataset", "Error", "Graph", "ManifoldSpec",
    "apply_missing_features", "check_theory", "complete_graph", "cycle_graph", "diagnose",
    "distance", "load_dataset", "make_aggregator", "modularity", "normalize_config",
    "path_graph", "project", "project_rows", "push_back", "push_forward", "self_check",
    "sweep", "synth_sbm", "train", "write_dataset",
]


def _config_text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def normalize_config(config):
    """Parses and validates a run configuration, returning it with defaults filled in."""
    return _json.loads(_acmgnn._validate_config(_config_text(config)))


def train(config):
    """Trains `train.repeats` models and returns the run summary as a dict."""
    return _json.loads(_acmgnn._train(_config_text(config)))


def sweep(config, layers):
    """Trains at each depth in `layers`; returns one dict per (depth, repeat)."""
    return _acmgnn._sweep(_config_text(config), list(layers))


def diagnose(config, trained=False):
    """Per-layer dispersion of node embeddings for the first repeat's model."""
    return _acmgnn._diagnose(_config_text(config), bool(trained))
