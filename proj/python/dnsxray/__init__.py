"""Passive DNS feature extraction, DGA classifiers and Shapley explanations.

The subcommand functions mirror the ``dnsxray`` command-line tool: each writes
its artifacts into ``out_dir`` and returns the run manifest as a dict.
"""
import json as _json

from . import _dnsxray
from ._dnsxray import DnsxrayError, Model, __version__, feature_names, kernel_shap, roc_auc, ttl_features

__all__ = [
    "DnsxrayError",
    "Model",
    "__version__",
    "evaluate",
    "explain",
    "extract",
    "feature_names",
    "kernel_shap",
    "pairs",
    "roc_auc",
    "synth",
    "train",
    "ttl_features",
]


def _json_arg(value):
    """Dicts become JSON text; strings (JSON text or a path) pass through."""
    if value is None or isinstance(value, str):
        return value
    return _json.dumps(value)


def synth(out_dir, **kwargs):
    return _json.loads(_dnsxray.synth(str(out_dir), **kwargs))


def extract(out_dir, **kwargs):
    return _json.loads(_dnsxray.extract(str(out_dir), **kwargs))


def train(out_dir, *, params=None, grid=None, **kwargs):
    return _json.loads(_dnsxray.train(str(out_dir), params=_json_arg(params), grid=_json_arg(grid), **kwargs))


def evaluate(out_dir, **kwargs):
    return _json.loads(_dnsxray.evaluate(str(out_dir), **kwargs))


def explain(out_dir, **kwargs):
    return _json.loads(_dnsxray.explain(str(out_dir), **kwargs))


def pairs(out_dir, **kwargs):
    return _json.loads(_dnsxray.pairs(str(out_dir), **kwargs))
