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
"""Smoke tests for the Python module."""

import json

import numpy as np
import pytest

import filtag


def test_conv_relu_pool():
    image = np.arange(16, dtype=np.float32).reshape(1, 4, 4)
    ones = np.ones((1, 1, 2, 2), dtype=np.float32)
    out = filtag.conv2d(image, ones)
    assert out.shape == (1, 3, 3)
    assert out[0, 0, 0] == pytest.approx(0 + 1 + 4 + 5)
    same = filtag.conv2d(image, ones, padding="same-zero")
    assert same.shape == (1, 4, 4)
    assert filtag.relu(np.array([[[-1.0, 2.0]]])).tolist() == [[[0.0, 2.0]]]
    assert filtag.maxpool2d(image, 2, 2)[0].tolist() == [[5.0, 7.0], [13.0, 15.0]]


def test_scaling_and_scores():
    raw = np.array([[[0.0, 2.0], [4.0, 4.0]], [[1.0, 1.0], [1.0, 1.0]]], dtype=np.float32)
    scaled = filtag.scale_layer(raw)
    assert scaled.min() == 0.0 and scaled.max() == 1.0
    assert filtag.feature_map_scores(raw) == pytest.approx([0.625, 0.25])
    assert filtag.feature_map_scores(np.zeros((2, 3, 3))) == [0.0, 0.0]


def test_selection():
    z = np.array([[0.1, 0.9, 0.5, 0.5], [0.3, 0.3, 0.3, 0.3]])
    assert filtag.select_k_best(z, 2) == [[1, 2], [0, 1]]
    assert filtag.select_q_quantile(z, 0.5) == [[1, 2], [0, 1]]
    assert filtag.quantile_count(0.3, 10) == 3
    with pytest.raises(filtag.FiltagError) as info:
        filtag.select_k_best(z, 0)
    assert info.value.code == "domain"


def test_spearman():
    assert filtag.spearman([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)
    assert filtag.spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert filtag.spearman([1, 1, 1], [1, 2, 3]) is None


def test_split():
    images = [(i, i % 2) for i in range(10)]
    split = filtag.split_dataset(images, 0.8, 3)
    assert sum(len(v) for v in split["tagging"].values()) == 8
    assert split == filtag.split_dataset(images, 0.8, 3)


def test_edge_world_pipeline(tmp_path):
    world = tmp_path / "world"
    code, _, err = filtag.run_cli(["make-edge-world", "--out", str(world),
                                   "--per-class", "20", "--seed", "1"])
    assert code == 0, err
    dump = tmp_path / "dump"
    code, _, err = filtag.run_cli(["dump-activations", "--model", str(world / "model.json"),
                                   "--images", str(world / "images"), "--dump", str(dump)])
    assert code == 0, err

    d = filtag.open_dump(dump)
    assert d.classes[:2] == ["vertical", "horizontal"]
    first = d.images[0]["image_id"]
    maps = d.read_image(first)
    assert all(a.ndim == 3 and a.min() >= 0 for a in maps.values())

    store = filtag.build_tag_store(dump, k=1, seed=7)
    assert store.dump_id == d.dump_id
    assert store.tags(0, 0)[0][0] == "vertical"
    assert store.tags(0, 1)[0][0] == "horizontal"
    store_path = tmp_path / "tags.json"
    store.save(store_path)
    again = filtag.load_tag_store(store_path)
    assert again.to_json() == store.to_json()
    assert json.loads(store.to_json())["method"]

    report = filtag.evaluate(dump, store, n=[1])
    assert report["overall"][0]["rate"] == pytest.approx(1.0)

    e = filtag.explain(dump, store, first)
    assert e["image_id"] == first

    table = filtag.sweep(dump, k=[1, 2], n=[1], seed=7)
    assert len(table["grid"]) == 2


def test_model_forward():
    model = filtag.edge_world_model()
    assert model.class_names == ["vertical", "horizontal"]
    c, h, w = model.input_shape
    out = model.forward(np.zeros((c, h, w), dtype=np.float32))
    assert sum(out["probabilities"]) == pytest.approx(1.0)
    assert len(out["conv_outputs"]) == 1


def test_errors_map_to_exception(tmp_path):
    with pytest.raises(filtag.FiltagError):
        filtag.open_dump(tmp_path / "missing")
    code, _, _ = filtag.run_cli(["tag"])
    assert code == 2
