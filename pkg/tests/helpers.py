"""Builders for small model documents used across the tests."""
from __future__ import annotations

import copy

import numpy as np

from jumpstop import load_model


BASE = {
    "dimension": 1,
    "horizon": 1.0,
    "coefficients": {
        "mu_x": {"family": "constant", "params": {"value": [0.0]}},
        "sigma_x": {"family": "constant", "params": {"value": [[0.0]]}},
    },
    "controls": {"points": [[0.0]]},
    "payoff": {"family": "clipped_abs", "params": {"center": [0.0], "scale": 1.0, "cap": 1.0}, "sup_bound": 1.0},
}


def make_doc(**over) -> dict:
    """Minimal 1D model document with selected top-level fields replaced."""
    doc = copy.deepcopy(BASE)
    for k, v in over.items():
        if k in ("mu_x", "sigma_x", "beta"):
            doc["coefficients"][k] = v
        else:
            doc[k] = v
    return doc


def make_model(**over):
    return load_model(make_doc(**over))


def const(v):
    return {"family": "constant", "params": {"value": v}}


def affine(**terms):
    return {"family": "affine_in_x", "params": terms}


TENT = {"family": "tent", "params": {"center": [0.0], "width": 1.0, "height": 1.0}, "sup_bound": 1.0}
RAMP = {"family": "clipped_linear", "params": {"slope": [1.0], "offset": 0.0, "lo": 0.0, "hi": 1.0}, "sup_bound": 1.0}
THREE = {"points": [[-1.0], [0.0], [1.0]]}


def rng_points(seed, n, lo=-3, hi=3, d=1):
    return np.random.default_rng(seed).uniform(lo, hi, size=(n, d))


# verdict lines of the acceptance suite, printed in the terminal summary
VERDICTS: dict[int, str] = {}


def verdict(number: int, title: str, ok: bool, detail: str) -> bool:
    VERDICTS[number] = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(VERDICTS[number])
    return ok
