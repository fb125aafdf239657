"""Bundled worked examples with their reference values.

Two fixtures ship with the package.  "scalar" is a one-state endosystem
tracking a harmonic reference under a constant disturbance, measured for
three steps; it is informative through the equation route.  "planar" is
a two-state endosystem measured for two steps, which leaves a family of
compatible systems; it is informative through the pointwise route.  The
reference dictionaries hold the known gains, witnesses and closed-loop
quantities used by the example command and the test-suite.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

__all__ = ["EXAMPLE_NAMES", "REFERENCE", "fixture_text"]

EXAMPLE_NAMES = ("scalar", "planar")

REFERENCE = {
    "scalar": {
        "condition": "condition2",
        "true_A2": np.array([[1.0]]),
        "true_B2": np.array([[1.0]]),
        "W": np.array([[-1.0, 1.0, -1.0], [2.0 / 3.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
        "X_dagger": np.array([[-0.5], [2.0 / 3.0], [0.0]]),
        "K1": np.array([[-0.5, 1.0, -1.0]]),
        "K2": np.array([[-0.5]]),
        "T": np.array([[1.0, 0.0, 0.0]]),
        "V": np.array([[-1.0, 1.0, -1.0]]),
        "closed_loop": np.array([[0.5]]),
        "x1_0": np.array([1.0, 0.0, 0.5]),
        "x2_0": np.array([0.0]),
    },
    "planar": {
        "condition": "condition1",
        "true_A2": np.array([[2.0, 0.125], [4.0, 1.25]]),
        "true_B2": np.array([[1.5], [3.0]]),
        "K1": np.array([[0.5, 0.0, 0.0]]),
        "K2": np.array([[-1.0, -0.25]]),
        "closed_loop": np.array([[0.5, -0.25], [1.0, 0.5]]),
        "eigenvalues": np.array([0.5 + 0.5j, 0.5 - 0.5j]),
        "x1_0": np.array([1.0, 0.0, 1.0]),
        "x2_0": np.array([1.0, 0.0]),
    },
}


def fixture_text(name: str) -> str:
    """JSON text of a bundled problem file."""
    if name not in EXAMPLE_NAMES:
        raise ValueError(f"unknown example {name!r}, expected one of {EXAMPLE_NAMES}")
    return (
        resources.files("ddreg").joinpath("fixtures", f"{name}.json").read_text()
    )
