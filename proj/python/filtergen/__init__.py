# Copyright 2026 The filtergen Authors.
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
"""Discriminator-guided rejection sampling for sequence generators."""

import json

from filtergen import _core
from filtergen._core import (
    ConfigError,
    acceptance_probability,
    bleu,
    fed,
    filter_prob,
    scenario_ids,
    self_bleu,
)

__all__ = [
    "ConfigError",
    "acceptance_probability",
    "bleu",
    "estimate_uc",
    "fed",
    "filter_prob",
    "oracle_check",
    "run_pipeline",
    "scenario",
    "scenario_ids",
    "self_bleu",
    "validate_config",
]

__version__ = "0.1.0"


def scenario(name):
    """Returns the definition of a bundled scenario as a dict."""
    return json.loads(_core.scenario_json(name))


def oracle_check(name, c=0.5, seed=0, mc_samples=200000):
    """Runs the exact filter checks on a scenario and returns the report."""
    return json.loads(_core.oracle_check(name, c, seed, mc_samples))


def estimate_uc(name, c, seed=0):
    """Estimates the sampling boundary on a scenario.

    The result also holds the exact acceptance at the estimate and the
    exact optimum for comparison.
    """
    return json.loads(_core.estimate_uc(name, c, seed))


def validate_config(path):
    """Parses an experiment config; raises ConfigError with every problem."""
    return json.loads(_core.validate_config(str(path)))


def run_pipeline(config, out_dir="", workers=1):
    """Runs every pipeline stage and returns the run manifest."""
    return json.loads(_core.run_pipeline(str(config), str(out_dir), workers))
