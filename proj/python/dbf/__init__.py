"""Python front end for the dbf_core solver."""

import json

import numpy as np

from . import _core
from ._core import DbfError

__all__ = [
    "DbfError",
    "run",
    "verify",
    "canonical_scenario",
    "basis",
    "kernel_modes",
    "generator_norm",
    "diagnose_naive_formulation",
    "inverse_derivative",
    "delay",
    "weighted_norm",
]


def _doc(scenario):
    return scenario if isinstance(scenario, str) else json.dumps(scenario)


def _samples(u):
    a = np.asarray(u, dtype=complex)
    return a.reshape(-1, 1) if a.ndim == 1 else a


def run(scenario):
    """Solve a scenario (dict or JSON text). Field arrays have shape (samples, modes)."""
    out = _core.run(_doc(scenario))
    out["diagnostics"] = json.loads(out["diagnostics"])
    return out


def verify(scenario):
    return _core.verify(_doc(scenario))


def canonical_scenario(scenario):
    return json.loads(_core.canonical_scenario(_doc(scenario)))


def basis(K):
    return json.loads(_core.basis(K))


kernel_modes = _core.kernel_modes
generator_norm = _core.generator_norm
diagnose_naive_formulation = _core.diagnose_naive_formulation


def inverse_derivative(u, t_start, dt, nu, pad_fraction=0.5):
    return _core.inverse_derivative(_samples(u), t_start, dt, nu, pad_fraction)


def delay(u, t_start, dt, nu, h, pad_fraction=0.5):
    return _core.delay(_samples(u), t_start, dt, nu, h, pad_fraction)


def weighted_norm(u, t_start, dt, nu, k=0, pad_fraction=0.5):
    return _core.weighted_norm(_samples(u), t_start, dt, nu, k, pad_fraction)
