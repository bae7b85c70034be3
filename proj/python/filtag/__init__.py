# Copyright 2026 The FilTag Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================
"""Filter tagging: label convolutional filters with classes and explain predictions."""

from filtag._filtag import (
    Dump,
    FiltagError,
    Model,
    TagStore,
    build_tag_store,
    conv2d,
    edge_world_model,
    evaluate,
    explain,
    feature_map_scores,
    load_model,
    load_tag_store,
    maxpool2d,
    open_dump,
    quantile_count,
    relu,
    run_cli,
    scale_layer,
    select_k_best,
    select_q_quantile,
    softmax,
    spearman,
    split_dataset,
    sweep,
)

__all__ = [
    "Dump",
    "FiltagError",
    "Model",
    "TagStore",
    "build_tag_store",
    "conv2d",
    "edge_world_model",
    "evaluate",
    "explain",
    "feature_map_scores",
    "load_model",
    "load_tag_store",
    "maxpool2d",
    "open_dump",
    "quantile_count",
    "relu",
    "run_cli",
    "scale_layer",
    "select_k_best",
    "select_q_quantile",
    "softmax",
    "spearman",
    "split_dataset",
    "sweep",
]
