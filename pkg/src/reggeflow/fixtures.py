"""Reported 16-cell Einstein metrics and the shipped JSON fixtures.

The published vectors are written in block order AB, AC, AD, BC, BD, CD.
The numbers behave as edge *lengths*: read as lengths, the first one solves
``R = lambda g`` to about 2e-4, read as squared lengths only to about 2e-2.
``published_fixed_point`` therefore squares them by default.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .complex import Triangulation3, build_16cell, metric_from_block_vector, parse_triangulation
from .metric import parse_metric

__all__ = ["PUBLISHED_VALUES", "published_vector", "published_fixed_point", "load_fixture", "fixture_text"]

PUBLISHED_VALUES = {
    1: {"a": 10.0095, "b": 6.9633},
    2: {"c": 58.7223, "d": 64.9735, "e": 52.1413},
}


def published_vector(which: int) -> np.ndarray:
    """The 24 printed numbers of fixed point 1 or 2, in block order."""
    if which == 1:
        a, b = PUBLISHED_VALUES[1]["a"], PUBLISHED_VALUES[1]["b"]
        return np.array([a] * 12 + [b] * 12)
    if which == 2:
        v = PUBLISHED_VALUES[2]
        return np.array([v["c"]] * 8 + [v["d"]] * 4 + [v["e"]] * 4 + [v["c"]] * 8)
    raise ValueError(f"unknown fixed point {which}")


def published_fixed_point(
    tri: Triangulation3 | None = None, which: int = 1, as_lengths: bool = True
) -> np.ndarray:
    """Squared-length metric for a published fixed point on the 16-cell."""
    tri = build_16cell() if tri is None else tri
    vals = published_vector(which)
    return metric_from_block_vector(tri, vals**2 if as_lengths else vals)


def fixture_text(name: str) -> str:
    return resources.files("reggeflow").joinpath("data", name).read_text(encoding="utf-8")


def load_fixture(name: str, tri: Triangulation3 | None = None):
    """Load ``16cell.json`` as a complex, or a metric fixture against ``tri``."""
    text = fixture_text(name)
    if name == "16cell.json":
        return parse_triangulation(text)
    return parse_metric(text, build_16cell() if tri is None else tri)
