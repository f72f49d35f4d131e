"""Simplicial 3-complexes: construction, incidence tables, JSON ingestion."""

from __future__ import annotations

import itertools
import json
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Triangulation3",
    "TriangulationError",
    "TriangulationParseError",
    "build_from_tetrahedra",
    "build_16cell",
    "parse_triangulation",
    "triangulation_to_json",
    "edge_key",
    "SIXTEEN_CELL_BLOCK_ORDER",
    "block_order_indices",
    "metric_from_block_vector",
]

# local edge order inside a tetrahedron (v0, v1, v2, v3)
LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
LOCAL_TRIANGLES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))


class TriangulationError(ValueError):
    pass


class TriangulationParseError(TriangulationError):
    pass


def edge_key(a: str, b: str) -> str:
    """Canonical file key of the edge between labels ``a`` and ``b``."""
    a, b = sorted((a, b))
    return f"{a}-{b}"


class Triangulation3:
    """Immutable simplicial 3-complex.

    Vertices are re-indexed by sorted label, each tetrahedron is stored with
    ascending vertex indices and the tetrahedron list itself is sorted, so
    every derived table is independent of the input order.

    Attributes
    ----------
    vertices : tuple of str
    tetrahedra : (T, 4) int array
    edges : (E, 2) int array, lexicographic
    triangles : (F, 3) int array, lexicographic
    tet_edges : (T, 6) int array
        Global edge index of each local edge ``LOCAL_EDGES`` of every tet.
    edge_to_tets, vertex_to_tets, vertex_to_edges : tuple of tuples
    boundary_edges : frozenset of int
    """

    def __init__(self, vertices: Sequence[str], tetrahedra: np.ndarray):
        self.vertices = tuple(vertices)
        tets = np.asarray(tetrahedra, dtype=np.int64).reshape(-1, 4)
        tets = np.sort(tets, axis=1)
        tets = tets[np.lexsort(tets.T[::-1])]
        tets.setflags(write=False)
        self.tetrahedra = tets

        edge_set = sorted({(int(t[a]), int(t[b])) for t in tets for a, b in LOCAL_EDGES})
        self._edge_index = {e: k for k, e in enumerate(edge_set)}
        self.edges = np.array(edge_set, dtype=np.int64).reshape(-1, 2)
        self.edges.setflags(write=False)

        tri_count: dict[tuple[int, int, int], int] = {}
        for t in tets:
            for face in LOCAL_TRIANGLES:
                key = tuple(int(t[i]) for i in face)
                tri_count[key] = tri_count.get(key, 0) + 1
        bad = [f for f, n in tri_count.items() if n > 2]
        if bad:
            labels = "".join(self.vertices[i] for i in bad[0])
            raise TriangulationError(
                f"triangle {labels} belongs to more than two tetrahedra"
            )
        self.triangles = np.array(sorted(tri_count), dtype=np.int64).reshape(-1, 3)
        self.triangles.setflags(write=False)

        tet_edges = np.array(
            [[self._edge_index[(int(t[a]), int(t[b]))] for a, b in LOCAL_EDGES] for t in tets],
            dtype=np.int64,
        ).reshape(-1, 6)
        tet_edges.setflags(write=False)
        self.tet_edges = tet_edges

        n_v, n_e = len(self.vertices), len(self.edges)
        e2t: list[list[int]] = [[] for _ in range(n_e)]
        v2t: list[list[int]] = [[] for _ in range(n_v)]
        for ti, t in enumerate(tets):
            for e in tet_edges[ti]:
                e2t[e].append(ti)
            for v in t:
                v2t[v].append(ti)
        v2e: list[list[int]] = [[] for _ in range(n_v)]
        for ei, (a, b) in enumerate(self.edges):
            v2e[a].append(ei)
            v2e[b].append(ei)
        self.edge_to_tets = tuple(tuple(x) for x in e2t)
        self.vertex_to_tets = tuple(tuple(x) for x in v2t)
        self.vertex_to_edges = tuple(tuple(x) for x in v2e)

        boundary = set()
        for (a, b, c), n in tri_count.items():
            if n == 1:
                boundary.update(
                    self._edge_index[e] for e in ((a, b), (a, c), (b, c))
                )
        self.boundary_edges = frozenset(boundary)
        mask = np.zeros(n_e, dtype=bool)
        mask[list(boundary)] = True
        mask.setflags(write=False)
        self.boundary_mask = mask

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def is_closed(self) -> bool:
        return not self.boundary_edges

    @property
    def edge_keys(self) -> list[str]:
        return [edge_key(self.vertices[a], self.vertices[b]) for a, b in self.edges]

    def edge_index(self, a: str | int, b: str | int) -> int:
        """Index of the edge joining two vertices, given by label or index."""
        if isinstance(a, str):
            a = self.vertices.index(a)
        if isinstance(b, str):
            b = self.vertices.index(b)
        a, b = sorted((int(a), int(b)))
        try:
            return self._edge_index[(a, b)]
        except KeyError:
            raise KeyError(f"no edge between vertices {a} and {b}") from None

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + len(self.triangles) - len(self.tetrahedra)

    def tet_labels(self, ti: int) -> str:
        return "".join(self.vertices[v] for v in self.tetrahedra[ti])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Triangulation3):
            return NotImplemented
        return self.vertices == other.vertices and np.array_equal(
            self.tetrahedra, other.tetrahedra
        )

    def __hash__(self) -> int:
        return hash((self.vertices, self.tetrahedra.tobytes()))

    def __repr__(self) -> str:
        return (
            f"Triangulation3(V={self.n_vertices}, E={self.n_edges}, "
            f"F={len(self.triangles)}, T={len(self.tetrahedra)}, "
            f"boundary_edges={len(self.boundary_edges)})"
        )


def build_from_tetrahedra(
    vertex_labels: Iterable[str], tets: Iterable[Sequence[str]]
) -> Triangulation3:
    labels = list(vertex_labels)
    if len(set(labels)) != len(labels):
        dup = next(x for x in labels if labels.count(x) > 1)
        raise TriangulationError(f"duplicate vertex label {dup!r}")
    order = sorted(labels)
    index = {lab: i for i, lab in enumerate(order)}
    rows = []
    seen = set()
    for k, tet in enumerate(tets):
        tet = list(tet)
        if len(tet) != 4:
            raise TriangulationError(f"tetrahedron {k} has {len(tet)} vertices, expected 4")
        for lab in tet:
            if lab not in index:
                raise TriangulationError(f"tetrahedron {k} references unknown label {lab!r}")
        if len(set(tet)) != 4:
            raise TriangulationError(f"tetrahedron {k} is degenerate (repeated vertex): {tet}")
        key = frozenset(tet)
        if key in seen:
            raise TriangulationError(f"duplicate tetrahedron {sorted(tet)}")
        seen.add(key)
        rows.append([index[lab] for lab in tet])
    if not rows:
        raise TriangulationError("no tetrahedra given")
    used = {v for r in rows for v in r}
    if len(used) != len(order):
        isolated = [order[i] for i in range(len(order)) if i not in used]
        raise TriangulationError(f"isolated vertices not in any tetrahedron: {isolated}")
    return Triangulation3(order, np.array(rows))


# edge blocks in the order the 16-cell metrics are written down:
# AB, AC, AD, BC, BD, CD; inside a block P1Q1, P1Q2, P2Q1, P2Q2
SIXTEEN_CELL_BLOCK_ORDER = tuple(
    edge_key(f"{p}{i}", f"{q}{j}")
    for p, q in itertools.combinations("ABCD", 2)
    for i in (1, 2)
    for j in (1, 2)
)


def build_16cell() -> Triangulation3:
    """The 16-cell boundary triangulation of the 3-sphere.

    Vertices are the +/- unit vectors A1, A2, ..., D2 and tetrahedra are all
    A_i B_j C_k D_l.
    """
    labels = [f"{p}{i}" for p in "ABCD" for i in (1, 2)]
    tets = [
        (f"A{i}", f"B{j}", f"C{k}", f"D{l}")
        for i, j, k, l in itertools.product((1, 2), repeat=4)
    ]
    return build_from_tetrahedra(labels, tets)


def block_order_indices(tri: Triangulation3) -> np.ndarray:
    """Edge indices of the 16-cell listed in block order AB, AC, AD, BC, BD, CD."""
    lookup = {k: i for i, k in enumerate(tri.edge_keys)}
    try:
        return np.array([lookup[k] for k in SIXTEEN_CELL_BLOCK_ORDER], dtype=np.int64)
    except KeyError as exc:
        raise TriangulationError(f"not a 16-cell labelling: missing edge {exc}") from None


def metric_from_block_vector(tri: Triangulation3, values: Sequence[float]) -> np.ndarray:
    """Scatter a 24-vector given in block order into the complex's edge order."""
    values = np.asarray(values, dtype=float)
    if values.shape != (24,):
        raise ValueError(f"expected 24 values, got shape {values.shape}")
    g = np.empty(tri.n_edges)
    g[block_order_indices(tri)] = values
    return g


def _position(text: str, pos: int) -> str:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return f"line {line}, column {col}"


def parse_triangulation(text: bytes | str) -> Triangulation3:
    """Parse ``{"vertices": [...], "tetrahedra": [[a, b, c, d], ...]}``."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TriangulationParseError(f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TriangulationParseError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise TriangulationParseError("top level must be an object")
    for key in ("vertices", "tetrahedra"):
        if key not in doc:
            raise TriangulationParseError(f"schema error: missing key {key!r}")
    verts, tets = doc["vertices"], doc["tetrahedra"]
    if not isinstance(verts, list) or not all(isinstance(v, str) for v in verts):
        raise TriangulationParseError("schema error: 'vertices' must be an array of strings")
    if not isinstance(tets, list):
        raise TriangulationParseError("schema error: 'tetrahedra' must be an array")
    for k, t in enumerate(tets):
        if not (isinstance(t, list) and len(t) == 4 and all(isinstance(v, str) for v in t)):
            where = ""
            marker = text.find('"tetrahedra"')
            if marker >= 0:
                where = f" (array starts at {_position(text, marker)})"
            raise TriangulationParseError(
                f"schema error: tetrahedra[{k}] must be an array of 4 strings{where}"
            )
    try:
        return build_from_tetrahedra(verts, tets)
    except TriangulationError as exc:
        raise TriangulationParseError(str(exc)) from None


def triangulation_to_json(tri: Triangulation3) -> str:
    doc = {
        "vertices": list(tri.vertices),
        "tetrahedra": [[tri.vertices[v] for v in t] for t in tri.tetrahedra],
    }
    return json.dumps(doc, indent=2) + "\n"
