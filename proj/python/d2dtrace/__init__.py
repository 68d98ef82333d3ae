"""Trace analytics and propagation simulation for D2D content sharing.

Thin convenience layer over the native module: structured results come back
as parsed JSON objects instead of strings.
"""

import json as _json

from ._core import (  # noqa: F401
    InputError,
    Trace,
    auc_from_scores,
    category_redundancy_ranking,
    coverage,
    dataset_csv,
    fit_powerlaw,
    generate_trace,
    group_size_histogram,
    load_trace,
    metrics_csv,
    redundancy_csv,
    sample_powerlaw_sizes,
    sha256_hex,
    shannon_entropy,
    __version__,
)
from . import _core


def default_generator_config():
    return _json.loads(_core.default_generator_config_json())


def summary(trace):
    return _json.loads(_core.summary_json(trace))


def groups(trace):
    return {int(k): v for k, v in _json.loads(_core.groups_json(trace)).items()}


def seeds(trace, split=0.5, strategy="tree_root", seed=1):
    return _json.loads(_core.seeds_json(trace, split, strategy, seed))


def feature_sweep(trace, **kwargs):
    return _json.loads(_core.feature_sweep_json(trace, **kwargs))


def run_pipeline(config, out_dir="", threads=1):
    if not isinstance(config, str):
        config = _json.dumps(config)
    return _json.loads(_core.run_pipeline(config, out_dir, threads))
