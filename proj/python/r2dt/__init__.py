"""Reference-dependent Phase I-II dose finding.

Thin wrappers over the compiled core; structured values are plain dicts.
"""

import json

from . import _core
from ._core import (
    Error,
    InconsistentAnswer,
    InvalidCohort,
    InvalidConfig,
    InvalidParams,
    OutOfOrder,
)

__all__ = [
    "Error", "InvalidParams", "InvalidConfig", "InvalidCohort", "InconsistentAnswer",
    "OutOfOrder", "utility", "contour", "dose_transform", "default_config",
    "simulate_trial", "run_study", "ElicitationSession", "Service",
]


def _params(params):
    # None -> defaults, str -> named preset, dict -> explicit parameters
    return "" if params is None else json.dumps(params)


def utility(piE, piT, params=None):
    """Joint and marginal utilities at (piE, piT)."""
    return json.loads(_core.evaluate_utility(piE, piT, _params(params)))


def contour(level, params=None, resolution=201):
    """List of (piE, piT) on the level set, by increasing piE."""
    return _core.contour(level, _params(params), resolution)


def dose_transform(doses):
    return json.loads(_core.dose_transform(list(doses)))


def default_config():
    return json.loads(_core.default_config())


def simulate_trial(design, scenario, replicate=0, seed=20240601):
    """One simulated trial of a named design on a reference scenario."""
    return json.loads(_core.simulate_trial(design, scenario, replicate, seed))


def run_study(config=None, scenarios="", designs=(), reps=None, seed=None, threads=None):
    """Simulation study; returns the summary document."""
    return json.loads(_core.run_study(
        "" if config is None else json.dumps(config),
        scenarios if isinstance(scenarios, str) else ",".join(map(str, scenarios)),
        list(designs),
        -1 if reps is None else reps,
        -1 if seed is None else seed,
        -1 if threads is None else threads,
    ))


class ElicitationSession:
    def __init__(self, script=None):
        self._s = _core.ElicitationSession("" if script is None else json.dumps(script))

    @property
    def phase(self):
        return self._s.phase()

    def next_question(self):
        return json.loads(self._s.next_question())

    def answer(self, phase, index, value):
        return json.loads(self._s.answer(phase, index, value))

    def reopen(self, phase):
        return json.loads(self._s.reopen(phase))

    @property
    def complete(self):
        return self._s.complete()

    def params(self):
        return json.loads(self._s.params())

    def log(self):
        return json.loads(self._s.log())


class Service:
    """In-process HTTP router; request() returns (status, body dict)."""

    def __init__(self, data_dir, workers=1, token=""):
        self._s = _core.Service(str(data_dir), workers, token)

    def request(self, method, path, body=None, query=None, authorization=""):
        text = "" if body is None else (body if isinstance(body, str) else json.dumps(body))
        status, out = self._s.request(method, path, text, query or {}, authorization)
        return status, json.loads(out)

    def wait_for_jobs(self):
        self._s.wait_for_jobs()
