"""Euclidean tetrahedron kernels driven by squared edge lengths.

Every kernel takes ``g6``, the six squared lengths in local edge order
``01, 02, 03, 12, 13, 23``, in its last axis and broadcasts over leading
axes, so a whole complex is handled in one call.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complex import LOCAL_EDGES
from .metric import DEFAULT_EPS, cholesky_pivots, gram_matrix, _pivots_ok

__all__ = [
    "InadmissibleError",
    "VERTEX_EDGES",
    "FACE_EDGES",
    "EDGE_FACES",
    "TetGeometry",
    "embed_tet",
    "face_area",
    "face_areas",
    "cayley_menger_144v2",
    "tet_volume_cm",
    "tet_volume_gram",
    "dihedral_angles",
    "dihedral_sin_formula",
    "solid_angles",
    "tet_geometry",
]

# local edges meeting at each vertex
VERTEX_EDGES = ((0, 1, 2), (0, 3, 4), (1, 3, 5), (2, 4, 5))
# local edges of the face opposite each vertex
FACE_EDGES = ((3, 4, 5), (1, 2, 5), (0, 2, 4), (0, 1, 3))
# the two faces (by opposite vertex) that share each local edge
EDGE_FACES = tuple(tuple(v for v in range(4) if v not in e) for e in LOCAL_EDGES)


class InadmissibleError(ValueError):
    """Squared lengths that do not span a nondegenerate Euclidean tetrahedron."""

    def __init__(self, msg: str, tet: int | None = None):
        super().__init__(msg)
        self.tet = tet


def _check(g6: np.ndarray, eps: float) -> None:
    ok = np.atleast_1d(_pivots_ok(gram_matrix(g6), eps))
    if not np.all(ok):
        bad = int(np.flatnonzero(~ok.ravel())[0])
        raise InadmissibleError(f"tetrahedron {bad} is not a Euclidean tetrahedron", bad)


def embed_tet(g6: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Vertex coordinates, shape ``(..., 4, 3)``.

    v0 sits at the origin and v1..v3 are the rows of the lower Cholesky
    factor of the Gram matrix, so the frame is positively oriented.
    """
    g6 = np.asarray(g6, dtype=float)
    _check(g6, eps)
    L, _ = cholesky_pivots(gram_matrix(g6))
    zero = np.zeros(L.shape[:-2] + (1, 3))
    return np.concatenate([zero, L], axis=-2)


def face_area(ga, gb, gc) -> np.ndarray:
    """Triangle area from three squared side lengths (Heron, Kahan's ordering)."""
    s = np.sort(np.sqrt(np.stack(np.broadcast_arrays(ga, gb, gc), axis=-1).astype(float)), axis=-1)
    c, b, a = s[..., 0], s[..., 1], s[..., 2]
    prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    if np.any(~(prod > 0)):
        raise InadmissibleError("degenerate triangle: strict triangle inequality fails")
    out = 0.25 * np.sqrt(prod)
    return out if out.ndim else float(out)


def face_areas(g6: np.ndarray) -> np.ndarray:
    """Areas of the four faces, indexed by the opposite vertex."""
    g6 = np.asarray(g6, dtype=float)
    return np.stack([face_area(*(g6[..., i] for i in f)) for f in FACE_EDGES], axis=-1)


def cayley_menger_144v2(g6: np.ndarray) -> np.ndarray:
    """``144 V**2`` expanded in squared lengths (signed; <= 0 means degenerate)."""
    g6 = np.asarray(g6, dtype=float)
    ab, ac, ad, bc, bd, cd = np.moveaxis(g6, -1, 0)
    return (
        ab * cd * (ac + ad + bc + bd - ab - cd)
        + ad * bc * (ab + cd + ac + bd - ad - bc)
        + ac * bd * (ab + cd + ad + bc - ac - bd)
        - ab * bc * ac
        - ac * ad * cd
        - ab * ad * bd
        - bc * cd * bd
    )


def tet_volume_cm(g6: np.ndarray) -> np.ndarray:
    expr = cayley_menger_144v2(g6)
    if np.any(~(expr > 0)):
        raise InadmissibleError("Cayley-Menger expression is not positive: degenerate tetrahedron")
    v = np.sqrt(expr / 144.0)
    return v if v.ndim else float(v)


def tet_volume_gram(g6: np.ndarray) -> np.ndarray:
    """Volume as ``|det[v1; v2; v3]| / 6`` from the embedding."""
    P = embed_tet(g6)
    v = np.abs(np.linalg.det(P[..., 1:, :])) / 6.0
    return v if v.ndim else float(v)


def _dihedrals_from_points(P: np.ndarray) -> np.ndarray:
    out = []
    for a, b in LOCAL_EDGES:
        c, d = (v for v in range(4) if v not in (a, b))
        e = P[..., b, :] - P[..., a, :]
        n1 = np.cross(e, P[..., c, :] - P[..., a, :])
        n2 = np.cross(e, P[..., d, :] - P[..., a, :])
        out.append(
            np.arctan2(np.linalg.norm(np.cross(n1, n2), axis=-1), np.sum(n1 * n2, axis=-1))
        )
    return np.stack(out, axis=-1)


def dihedral_angles(g6: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Interior dihedral angles at the six local edges, radians in (0, pi).

    Computed with atan2 on face normals of the embedding, which stays
    accurate for obtuse angles where an arcsin would fold them back.
    """
    return _dihedrals_from_points(embed_tet(g6, eps))


def dihedral_sin_formula(g6: np.ndarray) -> np.ndarray:
    """``3 l_e V / (2 A_f A_g)`` for each local edge; equals ``sin`` of the dihedral."""
    g6 = np.asarray(g6, dtype=float)
    V = np.asarray(tet_volume_cm(g6))[..., None]
    A = face_areas(g6)
    f = np.array(EDGE_FACES)
    return 3.0 * np.sqrt(g6) * V / (2.0 * A[..., f[:, 0]] * A[..., f[:, 1]])


def solid_angles(g6: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Solid angle at each vertex as the spherical excess of its link triangle."""
    beta = dihedral_angles(g6, eps)
    return np.stack([beta[..., list(ix)].sum(axis=-1) - np.pi for ix in VERTEX_EDGES], axis=-1)


@dataclass(frozen=True)
class TetGeometry:
    volume: float
    face_areas: np.ndarray
    dihedral: np.ndarray
    solid: np.ndarray


def tet_geometry(g6: np.ndarray, eps: float = DEFAULT_EPS) -> TetGeometry:
    g6 = np.asarray(g6, dtype=float)
    if g6.shape != (6,):
        raise ValueError("tet_geometry takes a single tetrahedron")
    beta = dihedral_angles(g6, eps)
    solid = np.array([beta[list(ix)].sum() - np.pi for ix in VERTEX_EDGES])
    return TetGeometry(
        volume=tet_volume_cm(g6),
        face_areas=face_areas(g6),
        dihedral=beta,
        solid=solid,
    )
