# Copyright 2026 The certgrad Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import numpy as np
import pytest

import certgrad


def small_run(**kw):
    X, y = certgrad.halfmoons(32, seed=4)
    args = dict(layers=[2, 4, 1], loss="hinge", learning_rate=0.2, batch_size=8,
                epochs=2, seed=4)
    args.update(kw)
    return X, y, args


def test_halfmoons_shapes():
    X, y = certgrad.halfmoons(20, seed=1)
    assert X.shape == (20, 2)
    assert set(np.unique(y)) == {0.0, 1.0}
    assert certgrad.poly_features(X, 3).shape == (20, 9)


def test_train_trajectory():
    X, y, args = small_run()
    traj = certgrad.train(X, y, **args)
    assert traj.shape == (9, 17)


def test_zero_budget_collapses_to_nominal():
    X, y, args = small_run()
    out = certgrad.abstract_train(X, y, model="bounded", n=0, epsilon=0.1, **args)
    np.testing.assert_array_equal(out["lower"], out["nominal"])
    np.testing.assert_array_equal(out["upper"], out["nominal"])
    np.testing.assert_array_equal(out["nominal"], certgrad.train(X, y, **args))


def test_label_flip_bounds_contain_retrainings():
    X, y, args = small_run()
    out = certgrad.abstract_train(X, y, model="bounded", n=1, q="0", nu=1.0, **args)
    lo, hi = out["lower"][-1], out["upper"][-1]
    for i in range(len(y)):
        flipped = y.copy()
        flipped[i] = 1.0 - flipped[i]
        final = certgrad.train(X, flipped, **args)[-1]
        assert np.all(lo - 1e-9 <= final) and np.all(final <= hi + 1e-9)


def test_certification():
    X, y, args = small_run()
    out = certgrad.abstract_train(X, y, model="removal", n=1, **args)
    lo, hi, nom = out["lower"][-1], out["upper"][-1], out["nominal"][-1]
    acc = certgrad.certified_accuracy([2, 4, 1], lo, hi, nom, X, y, loss="hinge")
    assert 0.0 <= acc <= 1.0
    holds, predicted = certgrad.certify_stable([2, 4, 1], nom, nom, nom, X[0], loss="hinge")
    assert holds and predicted in (0, 1)


def test_privacy_helpers():
    assert certgrad.smooth_sensitivity_bound(0, 0.3) == 1.0
    scale = certgrad.noise_scale("cauchy", certgrad.smooth_sensitivity_bound(3, 1 / 3), 2.0, 1 / 3)
    assert math.isclose(scale, 3 * math.exp(-1), rel_tol=0, abs_tol=1e-12)


def test_errors_map_to_python():
    X, y, args = small_run()
    with pytest.raises(certgrad.ConfigError):
        certgrad.abstract_train(X, y, model="substitution", n=1, **args)
    with pytest.raises(ValueError):
        certgrad.train(X, y[:-1], **args)


def test_run_experiment():
    doc = certgrad.run_experiment({
        "seed": 2,
        "dataset": {"source": "halfmoons", "n": 16},
        "model": {"hidden": [3]},
        "train": {"loss": "hinge", "batch_size": 4, "epochs": 1, "learning_rate": 0.1},
        "perturbation": {"model": "removal", "n": 1},
    })
    assert doc["schema_version"] == 1
    assert "train" in doc
