"""Piecewise-linear metrics stored as squared edge lengths ``g = l**2``.

A metric on a :class:`~reggeflow.complex.Triangulation3` is a float array of
shape ``(n_edges,)`` in the complex's edge order.  Admissibility is decided
per tetrahedron by Cholesky pivots of the Gram matrix of the edge vectors
from the first vertex; the admissible set is an open convex cone.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .complex import Triangulation3

__all__ = [
    "MetricError",
    "DEFAULT_EPS",
    "tet_squared_lengths",
    "gram_matrix",
    "gram_matrix_simplex",
    "cholesky_pivots",
    "is_admissible_simplex",
    "is_admissible_tet",
    "admissible_tets",
    "is_admissible",
    "first_inadmissible_tet",
    "scale",
    "uniform_metric",
    "random_admissible",
    "parse_metric",
    "metric_to_json",
]

DEFAULT_EPS = 1e-12


class MetricError(ValueError):
    pass


def tet_squared_lengths(tri: Triangulation3, g: np.ndarray) -> np.ndarray:
    """(T, 6) squared lengths in local order 01, 02, 03, 12, 13, 23."""
    g = np.asarray(g, dtype=float)
    if g.shape != (tri.n_edges,):
        raise MetricError(
            f"metric has shape {g.shape}, complex has {tri.n_edges} edges"
        )
    return g[tri.tet_edges]


def gram_matrix(g6: np.ndarray) -> np.ndarray:
    """Gram matrix of the vectors v0->v1, v0->v2, v0->v3.

    ``g6`` holds the six squared lengths (01, 02, 03, 12, 13, 23) in its last
    axis; leading axes are broadcast.
    """
    g6 = np.asarray(g6, dtype=float)
    if g6.shape[-1] != 6:
        raise MetricError(f"need 6 squared lengths per tetrahedron, got {g6.shape[-1]}")
    g01, g02, g03, g12, g13, g23 = np.moveaxis(g6, -1, 0)
    m12 = 0.5 * (g01 + g02 - g12)
    m13 = 0.5 * (g01 + g03 - g13)
    m23 = 0.5 * (g02 + g03 - g23)
    return np.stack(
        [
            np.stack([g01, m12, m13], axis=-1),
            np.stack([m12, g02, m23], axis=-1),
            np.stack([m13, m23, g03], axis=-1),
        ],
        axis=-2,
    )


def gram_matrix_simplex(sq: np.ndarray) -> np.ndarray:
    """Gram matrix of an n-simplex from its (n+1)x(n+1) squared-distance matrix."""
    sq = np.asarray(sq, dtype=float)
    d0 = sq[..., 0, 1:]
    return 0.5 * (d0[..., :, None] + d0[..., None, :] - sq[..., 1:, 1:])


def cholesky_pivots(gram: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unpivoted Cholesky of a stack of symmetric matrices.

    Returns ``(L, pivots)`` where ``pivots[..., k]`` is the Schur complement
    entry before the square root.  Rows past the first non-positive pivot are
    filled with NaN rather than raising, so whole batches can be screened.
    """
    a = np.array(gram, dtype=float)
    n = a.shape[-1]
    L = np.zeros_like(a)
    piv = np.empty(a.shape[:-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        for k in range(n):
            d = a[..., k, k] - np.sum(L[..., k, :k] ** 2, axis=-1)
            piv[..., k] = d
            root = np.sqrt(np.where(d > 0, d, np.nan))
            L[..., k, k] = root
            for i in range(k + 1, n):
                s = a[..., i, k] - np.sum(L[..., i, :k] * L[..., k, :k], axis=-1)
                L[..., i, k] = s / root
    return L, piv


def _pivots_ok(gram: np.ndarray, eps: float) -> np.ndarray:
    _, piv = cholesky_pivots(gram)
    diag = np.max(np.diagonal(gram, axis1=-2, axis2=-1), axis=-1)
    ok = np.all(piv > eps * diag[..., None], axis=-1) & (diag > 0)
    return ok & np.all(np.isfinite(piv), axis=-1)


def is_admissible_simplex(sq: np.ndarray, eps: float = DEFAULT_EPS) -> bool:
    """Whether a squared-distance matrix belongs to a nondegenerate Euclidean n-simplex."""
    return bool(_pivots_ok(gram_matrix_simplex(sq), eps))


def is_admissible_tet(g6: np.ndarray, eps: float = DEFAULT_EPS) -> bool:
    return bool(np.all(_pivots_ok(gram_matrix(g6), eps)))


def admissible_tets(tri: Triangulation3, g: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Boolean mask over tetrahedra."""
    g6 = tet_squared_lengths(tri, g)
    positive = np.all(np.isfinite(g6) & (g6 > 0), axis=1)
    return positive & _pivots_ok(gram_matrix(np.where(positive[:, None], g6, 1.0)), eps)


def is_admissible(tri: Triangulation3, g: np.ndarray, eps: float = DEFAULT_EPS) -> bool:
    return bool(np.all(admissible_tets(tri, g, eps)))


def first_inadmissible_tet(
    tri: Triangulation3, g: np.ndarray, eps: float = DEFAULT_EPS
) -> int | None:
    bad = np.flatnonzero(~admissible_tets(tri, g, eps))
    return int(bad[0]) if bad.size else None


def scale(g: np.ndarray, c: float) -> np.ndarray:
    if not c > 0:
        raise MetricError(f"scale factor must be positive, got {c}")
    return np.asarray(g, dtype=float) * c


def uniform_metric(tri: Triangulation3, value: float = 1.0) -> np.ndarray:
    if not value > 0:
        raise MetricError(f"uniform value must be positive, got {value}")
    return np.full(tri.n_edges, float(value))


def random_admissible(
    tri: Triangulation3,
    rng,
    sigma: float = 0.3,
    base: np.ndarray | None = None,
    max_tries: int = 10_000,
) -> np.ndarray:
    """Log-uniform perturbation ``base * exp(u)``, ``u ~ U[-sigma, sigma]``, with rejection.

    ``rng`` needs a ``uniform(low, high, size)`` method; both
    :class:`reggeflow.rng.SplitMix64` and ``numpy.random.Generator`` qualify.
    """
    base = uniform_metric(tri) if base is None else np.asarray(base, dtype=float)
    for _ in range(max_tries):
        u = np.asarray(rng.uniform(-sigma, sigma, tri.n_edges), dtype=float)
        g = base * np.exp(u)
        if is_admissible(tri, g):
            return g
    raise MetricError(f"no admissible sample after {max_tries} tries (sigma={sigma})")


def parse_metric(text: bytes | str, tri: Triangulation3) -> np.ndarray:
    """Read ``{"edges": {"A1-B1": g, ...}}``; every edge key required, none extra."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MetricError(
            f"malformed metric JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict) or not isinstance(doc.get("edges"), dict):
        raise MetricError("schema error: metric must be an object with an 'edges' object")
    entries = doc["edges"]
    keys = tri.edge_keys
    known = set(keys)
    unknown = sorted(k for k in entries if k not in known)
    if unknown:
        raise MetricError(f"unknown edge key {unknown[0]!r}")
    g = np.empty(len(keys))
    for i, k in enumerate(keys):
        if k not in entries:
            raise MetricError(f"missing edge key {k!r}")
        v = entries[k]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v <= 0:
            raise MetricError(f"edge {k!r}: squared length must be a positive number, got {v!r}")
        g[i] = float(v)
    return g


def metric_to_json(tri: Triangulation3, g: np.ndarray) -> str:
    g = np.asarray(g, dtype=float)
    doc = {"edges": {k: float(v) for k, v in zip(tri.edge_keys, g)}}
    return json.dumps(doc, indent=2) + "\n"
