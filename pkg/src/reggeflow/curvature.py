"""Discrete Ricci curvature, Regge action and the derived functionals.

Edge sums run over unordered edges.  ``lambda_`` and ``Q`` use
``sum_e l_e**3`` as the volume, while ``V_total`` is the vertex-summed
volume ``sum_i V_i``, which counts each edge twice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .complex import Triangulation3
from .geometry import VERTEX_EDGES, InadmissibleError, dihedral_angles, solid_angles
from .metric import DEFAULT_EPS, admissible_tets, tet_squared_lengths

__all__ = [
    "CurvatureReport",
    "check_admissible",
    "ricci",
    "cooper_rivin",
    "action",
    "functionals",
    "lambda_alpha",
    "einstein_residual",
    "normalized_action",
]


def check_admissible(tri: Triangulation3, g: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Return the (T, 6) squared lengths, raising on the first bad tetrahedron."""
    g6 = tet_squared_lengths(tri, g)
    ok = admissible_tets(tri, g, eps)
    if not np.all(ok):
        ti = int(np.flatnonzero(~ok)[0])
        raise InadmissibleError(
            f"metric is not admissible: tetrahedron {ti} ({tri.tet_labels(ti)}) "
            "has no Euclidean realization",
            ti,
        )
    return g6


def _edge_sum(tri: Triangulation3, per_tet_edge: np.ndarray) -> np.ndarray:
    # bincount walks the flattened (tet, local edge) array in order, so every
    # edge accumulates its tetrahedra in ascending index order
    return np.bincount(tri.tet_edges.ravel(), weights=per_tet_edge.ravel(), minlength=tri.n_edges)


def _vertex_sum(tri: Triangulation3, per_edge: np.ndarray) -> np.ndarray:
    idx = np.concatenate([tri.edges[:, 0], tri.edges[:, 1]])
    return np.bincount(idx, weights=np.concatenate([per_edge, per_edge]), minlength=tri.n_vertices)


def ricci(tri: Triangulation3, g: np.ndarray) -> np.ndarray:
    """``2*pi`` (``pi`` on boundary edges) minus the incident dihedral angles."""
    beta = dihedral_angles(check_admissible(tri, g))
    base = np.where(tri.boundary_mask, np.pi, 2.0 * np.pi)
    return base - _edge_sum(tri, beta)


def cooper_rivin(tri: Triangulation3, g: np.ndarray) -> np.ndarray:
    """``4*pi`` minus the solid angles of the incident tetrahedra, per vertex."""
    alpha = solid_angles(check_admissible(tri, g))
    sums = np.bincount(tri.tetrahedra.ravel(), weights=alpha.ravel(), minlength=tri.n_vertices)
    return 4.0 * np.pi - sums


def action(tri: Triangulation3, g: np.ndarray) -> float:
    """Regge action ``sum_e R_e l_e``."""
    return float(np.sum(ricci(tri, g) * np.sqrt(g)))


def lambda_alpha(R: np.ndarray, l: np.ndarray, alpha: float) -> float:
    return float(np.sum(R * l) / np.sum(l ** (alpha + 1.0)))


def normalized_action(tri: Triangulation3, g: np.ndarray, alpha: float = 2.0) -> float:
    if alpha == -1:
        raise ValueError("Q_alpha is undefined for alpha = -1")
    l = np.sqrt(np.asarray(g, dtype=float))
    E = float(np.sum(ricci(tri, g) * l))
    return E / float(np.sum(l ** (alpha + 1.0))) ** (1.0 / (alpha + 1.0))


@dataclass(frozen=True)
class CurvatureReport:
    R: np.ndarray
    S_cr: np.ndarray
    S: np.ndarray
    V_vertex: np.ndarray
    SstarV: np.ndarray
    E: float
    V_total: float
    sum_l3: float
    lambda_: float
    Q: float
    alpha: float
    lambda_alpha: float
    Q_alpha: float
    residual: float

    def to_dict(self, tri: Triangulation3) -> dict:
        keys = tri.edge_keys
        labels = tri.vertices

        def per_edge(x):
            return {k: float(v) for k, v in zip(keys, x)}

        def per_vertex(x):
            return {k: float(v) for k, v in zip(labels, x)}

        return {
            "alpha": self.alpha,
            "R": per_edge(self.R),
            "S_cr": per_vertex(self.S_cr),
            "S": per_vertex(self.S),
            "V_vertex": per_vertex(self.V_vertex),
            "SstarV": per_vertex(self.SstarV),
            "E": self.E,
            "V_total": self.V_total,
            "sumL3": self.sum_l3,
            "lambda": self.lambda_,
            "Q": self.Q,
            "lambda_alpha": self.lambda_alpha,
            "Q_alpha": self.Q_alpha,
            "residual": self.residual,
        }

    def to_json(self, tri: Triangulation3) -> str:
        return json.dumps(self.to_dict(tri), indent=2) + "\n"


def functionals(tri: Triangulation3, g: np.ndarray, alpha: float = 2.0) -> CurvatureReport:
    if alpha == -1:
        raise ValueError("Q_alpha is undefined for alpha = -1")
    g = np.asarray(g, dtype=float)
    g6 = check_admissible(tri, g)
    beta = dihedral_angles(g6)
    base = np.where(tri.boundary_mask, np.pi, 2.0 * np.pi)
    R = base - _edge_sum(tri, beta)
    solid = np.stack([beta[:, list(ix)].sum(axis=1) - np.pi for ix in VERTEX_EDGES], axis=1)
    S_cr = 4.0 * np.pi - np.bincount(
        tri.tetrahedra.ravel(), weights=solid.ravel(), minlength=tri.n_vertices
    )
    l = np.sqrt(g)
    l3 = l**3
    S = _vertex_sum(tri, R / g)
    V_vertex = _vertex_sum(tri, l3)
    SstarV = _vertex_sum(tri, (R / g) * l3)
    E = float(np.sum(R * l))
    sum_l3 = float(np.sum(l3))
    lam_a = E / float(np.sum(l ** (alpha + 1.0)))
    Q_a = E / float(np.sum(l ** (alpha + 1.0))) ** (1.0 / (alpha + 1.0))
    return CurvatureReport(
        R=R,
        S_cr=S_cr,
        S=S,
        V_vertex=V_vertex,
        SstarV=SstarV,
        E=E,
        V_total=float(np.sum(V_vertex)),
        sum_l3=sum_l3,
        lambda_=E / sum_l3,
        Q=E / sum_l3 ** (1.0 / 3.0),
        alpha=float(alpha),
        lambda_alpha=lam_a,
        Q_alpha=Q_a,
        residual=_sup_residual(R, g, l, alpha, lam_a),
    )


def _sup_residual(R, g, l, alpha, lam) -> float:
    target = lam * l**alpha
    floor = 1e-15 * float(np.max(g))
    return float(np.max(np.abs(R - target)) / max(float(np.max(np.abs(target))), floor))


def einstein_residual(
    tri: Triangulation3, g: np.ndarray, alpha: float = 2.0
) -> tuple[float, np.ndarray, float]:
    """Distance from ``R = lambda_alpha * l**alpha``.

    Returns ``(lambda_alpha, R - lambda_alpha * l**alpha, sup_norm)`` where the
    sup norm is scaled by ``max_e |lambda_alpha| l_e**alpha``.
    """
    g = np.asarray(g, dtype=float)
    R = ricci(tri, g)
    l = np.sqrt(g)
    lam = lambda_alpha(R, l, alpha)
    return lam, R - lam * l**alpha, _sup_residual(R, g, l, alpha, lam)
