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

"""Certified parameter bounds for gradient-based training."""

import json

from certgrad._certgrad import (
    ConfigError,
    DataError,
    InvariantError,
    __version__,
    _run_experiment,
    abstract_train,
    certified_accuracy,
    certify_stable,
    halfmoons,
    noise_scale,
    poly_features,
    smooth_sensitivity_bound,
    train,
)


def run_experiment(config):
    """Runs every configured stage and returns the results document."""
    return json.loads(_run_experiment(json.dumps(config)))


__all__ = [
    "ConfigError",
    "DataError",
    "InvariantError",
    "__version__",
    "abstract_train",
    "certified_accuracy",
    "certify_stable",
    "halfmoons",
    "noise_scale",
    "poly_features",
    "run_experiment",
    "smooth_sensitivity_bound",
    "train",
]
