"""Python bindings for the contraction library."""

import json

from ._core import (
    Certificate,
    Classification,
    ContractionError,
    Scenario,
    describe_scenario,
    lq_riccati,
    scenario_names,
)
from . import _core

__all__ = [
    "Certificate",
    "Classification",
    "ContractionError",
    "Scenario",
    "describe_scenario",
    "load_scenario",
    "lq_riccati",
    "run_command",
    "scenario_names",
]


def load_scenario(name, params=None, seed=0):
    return _core._load_scenario(name, json.dumps(params or {}), seed)


def run_command(command, scenario="", out="out", **fields):
    """Runs a CLI command in-process; returns (exit_code, message, files)."""
    config = {"command": command, "scenario": scenario, "out": out}
    config.update(fields)
    return _core._run_command(json.dumps(config))
