"""Python access to the meshsim simulator."""

import json
from pathlib import Path

from . import _meshsim
from ._meshsim import (
    blom_keys,
    blom_pairwise_key,
    chi2_row_test,
    classify,
    estimate_bandwidth,
    update_reliability,
)

__all__ = [
    "RunResult",
    "blom_keys",
    "blom_pairwise_key",
    "chi2_row_test",
    "classify",
    "detect",
    "estimate_bandwidth",
    "run",
    "sweep",
    "update_reliability",
    "validate",
]


def _text(scenario):
    if isinstance(scenario, dict):
        return json.dumps(scenario)
    path = Path(scenario)
    if path.suffix == ".json" and path.exists():
        return path.read_text()
    return str(scenario)


class RunResult:
    def __init__(self, raw):
        self.metrics = json.loads(raw["metrics_json"])
        self.metrics_json = raw["metrics_json"]
        self.trace_csv = raw["trace_csv"]
        self.classification_csv = raw["classification_csv"]
        self.overflow = raw["overflow"]
        self.failure = raw["failure"]

    def pdr(self, flow_id):
        for f in self.metrics["flows"]:
            if f["id"] == flow_id:
                return f["pdr"]
        raise KeyError(flow_id)


def validate(scenario):
    """List of validation errors; empty when the scenario is usable."""
    return _meshsim.validate_scenario(_text(scenario))


def run(scenario, seed=None, out_dir=None):
    """Run a scenario given as a dict, a JSON string or a path to a .json file."""
    out = None if out_dir is None else str(out_dir)
    return RunResult(_meshsim.run_scenario(_text(scenario), seed, out))


def sweep(scenario, first_seed, last_seed, out_dir=None, threads=0):
    out = None if out_dir is None else str(out_dir)
    return json.loads(_meshsim.run_sweep(_text(scenario), first_seed, last_seed, out, threads))


def detect(trace_csv, params=None):
    """Offline detection over trace CSV text; returns classification CSV text."""
    if isinstance(params, dict):
        params = json.dumps(params)
    return _meshsim.detect_trace(trace_csv, params)
