"""Geometry of the square lattice Z^2.

Vertices and edges are small named tuples so they hash and sort naturally.
Edges are always stored in canonical form (lexicographically smaller
endpoint first), which is also the global tie-break order used by the
dynamics.

:class:`Graph` is the indexed, finite region every simulation runs on: it
carries integer ids for vertices and edges plus CSR adjacency arrays for the
numba kernels.  :class:`BlockTable` indexes the 6x5 blocks that lie fully
inside a graph.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, NamedTuple

import numpy as np

BLOCK_W = 6
BLOCK_H = 5


class GeometryError(ValueError):
    """Raised for malformed lattice objects (non-adjacent endpoints etc.)."""


class Vertex(NamedTuple):
    x1: int
    x2: int


class Edge(NamedTuple):
    a: Vertex
    b: Vertex


ORIGIN = Vertex(0, 0)


def edge(u, v) -> Edge:
    """Canonical edge between nearest neighbours ``u`` and ``v``."""
    u = Vertex(int(u[0]), int(u[1]))
    v = Vertex(int(v[0]), int(v[1]))
    if abs(u.x1 - v.x1) + abs(u.x2 - v.x2) != 1:
        raise GeometryError(f"{u} and {v} are not nearest neighbours")
    return Edge(u, v) if u < v else Edge(v, u)


def neighbours(v) -> list[Vertex]:
    x, y = v
    return [Vertex(x - 1, y), Vertex(x, y - 1), Vertex(x, y + 1), Vertex(x + 1, y)]


def incident_edges(v) -> list[Edge]:
    return sorted(edge(v, w) for w in neighbours(v))


def sup_norm(v, center=ORIGIN) -> int:
    return max(abs(v[0] - center[0]), abs(v[1] - center[1]))


@dataclass(frozen=True)
class Box:
    """B(x, n) = x + [-n, n]^2."""

    n: int
    center: Vertex = ORIGIN

    def __post_init__(self):
        if self.n < 0:
            raise GeometryError("box radius must be non-negative")
        object.__setattr__(self, "center", Vertex(*self.center))

    def __contains__(self, v) -> bool:
        return sup_norm(v, self.center) <= self.n

    def vertices(self) -> list[Vertex]:
        cx, cy = self.center
        return [
            Vertex(cx + i, cy + j)
            for i in range(-self.n, self.n + 1)
            for j in range(-self.n, self.n + 1)
        ]

    def graph(self) -> "Graph":
        cx, cy = self.center
        return Graph.rect(cx - self.n, cx + self.n, cy - self.n, cy + self.n)


def boundary(box: Box) -> list[Vertex]:
    """Vertex boundary of a box: the ring at sup-distance ``n`` from the center.

    ``B(0)`` is taken to be its own boundary so that every vertex connects to
    ``∂B(0)`` trivially.
    """
    if box.n == 0:
        return [box.center]
    return [v for v in box.vertices() if sup_norm(v, box.center) == box.n]


def vertex_boundary(region: Iterable) -> list[Vertex]:
    """Vertices of ``region`` with at least one neighbour outside it."""
    reg = {Vertex(*v) for v in region}
    return sorted(v for v in reg if any(w not in reg for w in neighbours(v)))


def edges_in(region: Iterable) -> list[Edge]:
    """All lattice edges with both endpoints in ``region`` (canonical order)."""
    reg = {Vertex(*v) for v in region}
    out = []
    for v in reg:
        for w in (Vertex(v.x1 + 1, v.x2), Vertex(v.x1, v.x2 + 1)):
            if w in reg:
                out.append(Edge(v, w))
    return sorted(out)


def external_edge_boundary(region: Iterable) -> list[Edge]:
    """Edges with exactly one endpoint in ``region``."""
    reg = {Vertex(*v) for v in region}
    out = {edge(v, w) for v in reg for w in neighbours(v) if w not in reg}
    return sorted(out)


# ---------------------------------------------------------------------------
# blocks


@dataclass(frozen=True)
class BlockGeometry:
    index: tuple[int, int]
    lam: frozenset
    lam_bar: frozenset
    g: Edge
    a_set: frozenset
    b_set: frozenset

    @property
    def edges(self) -> frozenset:
        return self.a_set | self.b_set | {self.g}

    @property
    def non_a(self) -> frozenset:
        return self.b_set | {self.g}

    def as_dict(self) -> dict:
        def vlist(vs):
            return [list(v) for v in sorted(vs)]

        def elist(es):
            return [[list(e.a), list(e.b)] for e in sorted(es)]

        return {
            "index": list(self.index),
            "lambda": vlist(self.lam),
            "lambda_bar": vlist(self.lam_bar),
            "g": [list(self.g.a), list(self.g.b)],
            "a_set": elist(self.a_set),
            "b_set": elist(self.b_set),
        }


def block_index(v) -> tuple[int, int]:
    """The (r, s) with v in Λ_{r,s}."""
    return (v[0] // BLOCK_W, v[1] // BLOCK_H)


@lru_cache(maxsize=4096)
def block_geometry(r: int, s: int) -> BlockGeometry:
    ox, oy = BLOCK_W * r, BLOCK_H * s
    lam = frozenset(Vertex(ox + i, oy + j) for i in range(6) for j in range(5))
    lam_bar = frozenset(Vertex(ox + i, oy + j) for i in range(1, 5) for j in range(1, 4))
    bar_boundary = set(vertex_boundary(lam_bar))
    a_set = frozenset(
        e for e in edges_in(lam_bar) if (e.a in bar_boundary) + (e.b in bar_boundary) == 1
    )
    g = edge((ox + 2, oy + 2), (ox + 3, oy + 2))
    b_set = frozenset(edges_in(lam)) - a_set - {g}
    return BlockGeometry((r, s), lam, lam_bar, g, a_set, b_set)


def block_of_edge(e: Edge) -> tuple[tuple[int, int], ...]:
    """Block(s) holding ``e``: one if it lies inside a block, else the two it straddles."""
    ra, rb = block_index(e.a), block_index(e.b)
    return (ra,) if ra == rb else tuple(sorted((ra, rb)))


def is_g_edge(e: Edge) -> bool:
    r, s = block_index(e.a)
    return block_geometry(r, s).g == e


def block_range(lo: int, hi: int, width: int) -> range:
    return range(lo // width, hi // width + 1)


# ---------------------------------------------------------------------------
# indexed graphs


class Graph:
    """A finite subgraph of Z^2 with integer ids.

    Vertices are stored in lexicographic order and edges in canonical order;
    an edge's id is its position in ``edges``.  Absent edges never open and
    absent vertices contribute no degree (free boundary).
    """

    def __init__(self, vertices: Iterable, edges: Iterable[Edge], *, rect=None):
        self.vertices = tuple(sorted({Vertex(int(v[0]), int(v[1])) for v in vertices}))
        self.edges = tuple(sorted({edge(*e) for e in edges}))
        self.rect_bounds = rect
        vset = set(self.vertices)
        for e in self.edges:
            if e.a not in vset or e.b not in vset:
                raise GeometryError(f"edge {e} has an endpoint outside the vertex set")

    def __repr__(self):
        return f"Graph(|V|={len(self.vertices)}, |E|={len(self.edges)})"

    @classmethod
    def from_vertices(cls, region: Iterable) -> "Graph":
        region = list(region)
        return cls(region, edges_in(region))

    @classmethod
    def from_edges(cls, edges: Iterable, extra_vertices: Iterable = ()) -> "Graph":
        edges = [edge(*e) for e in edges]
        vs = {v for e in edges for v in e} | {Vertex(*v) for v in extra_vertices}
        return cls(vs, edges)

    @staticmethod
    @lru_cache(maxsize=64)
    def rect(x0: int, x1: int, y0: int, y1: int) -> "Graph":
        """Induced graph on [x0, x1] x [y0, y1]."""
        vs = [(x, y) for x in range(x0, x1 + 1) for y in range(y0, y1 + 1)]
        es = []
        for x, y in vs:
            if y < y1:
                es.append(Edge(Vertex(x, y), Vertex(x, y + 1)))
            if x < x1:
                es.append(Edge(Vertex(x, y), Vertex(x + 1, y)))
        return Graph(vs, es, rect=(x0, x1, y0, y1))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def vertex_index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_index(self) -> dict:
        return {e: i for i, e in enumerate(self.edges)}

    def vid(self, v) -> int:
        try:
            return self.vertex_index[Vertex(*v)]
        except KeyError:
            raise GeometryError(f"vertex {tuple(v)} not in region") from None

    def eid(self, e) -> int:
        try:
            return self.edge_index[edge(*e)]
        except KeyError:
            raise GeometryError(f"edge {tuple(e)} not in region") from None

    def __contains__(self, v) -> bool:
        return Vertex(*v) in self.vertex_index

    @cached_property
    def coords(self) -> np.ndarray:
        return np.array(self.vertices, dtype=np.int64).reshape(-1, 2)

    @cached_property
    def ends(self) -> tuple[np.ndarray, np.ndarray]:
        idx = self.vertex_index
        ea = np.array([idx[e.a] for e in self.edges], dtype=np.int64)
        eb = np.array([idx[e.b] for e in self.edges], dtype=np.int64)
        return ea, eb

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indptr, neighbour vertex, connecting edge) adjacency arrays."""
        ea, eb = self.ends
        nv = self.n_vertices
        src = np.concatenate([ea, eb])
        dst = np.concatenate([eb, ea])
        eid = np.concatenate([np.arange(len(ea)), np.arange(len(ea))])
        order = np.lexsort((dst, src))
        indptr = np.zeros(nv + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)
        return indptr, dst[order].astype(np.int64), eid[order].astype(np.int64)

    def norms(self, center=ORIGIN) -> np.ndarray:
        c = self.coords
        return np.maximum(np.abs(c[:, 0] - center[0]), np.abs(c[:, 1] - center[1]))

    def vertex_mask(self, region: Iterable) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        for v in region:
            mask[self.vid(v)] = True
        return mask

    def edge_ids(self, edges: Iterable) -> np.ndarray:
        return np.array([self.eid(e) for e in edges], dtype=np.int64)

    def inner_edge_mask(self, box: Box) -> np.ndarray:
        """Edges with both endpoints in ``box``."""
        ea, eb = self.ends
        inside = self.norms(box.center) <= box.n
        return inside[ea] & inside[eb]

    def covers(self, box: Box) -> bool:
        if self.rect_bounds is not None:
            x0, x1, y0, y1 = self.rect_bounds
            cx, cy = box.center
            return x0 <= cx - box.n and cx + box.n <= x1 and y0 <= cy - box.n and cy + box.n <= y1
        return all(v in self.vertex_index for v in box.vertices())

    @cached_property
    def blocks(self) -> "BlockTable":
        return BlockTable.build(self)


def box_region(n: int, pad: int = 0) -> Graph:
    return Graph.rect(-(n + pad), n + pad, -(n + pad), n + pad)


def block_aligned_region(n: int) -> Graph:
    """Smallest union of whole blocks covering B(n)."""
    rs = block_range(-n, n, BLOCK_W)
    ss = block_range(-n, n, BLOCK_H)
    return Graph.rect(
        BLOCK_W * rs.start, BLOCK_W * rs.stop - 1, BLOCK_H * ss.start, BLOCK_H * ss.stop - 1
    )


def exploration_region(n: int) -> Graph:
    """Blocks meeting B(n) plus a one-vertex ring for their external edge boundaries."""
    x0, x1, y0, y1 = block_aligned_region(n).rect_bounds
    return Graph.rect(x0 - 1, x1 + 1, y0 - 1, y1 + 1)


@dataclass(frozen=True, eq=False)
class BlockTable:
    """Integer-indexed view of the blocks lying wholly inside a graph.

    Rows are in lexicographic (r, s) order.  ``ext`` holds ∂^eΛ edge ids padded
    with -1 where the outer endpoint falls outside the graph.
    """

    index: np.ndarray  # (B, 2)
    g: np.ndarray  # (B,)
    a: np.ndarray  # (B, 6)
    rest: np.ndarray  # (B, 43)  E(Λ) \ A, including g
    edges: np.ndarray  # (B, 49)
    ext: np.ndarray  # (B, 22)
    verts: np.ndarray  # (B, 30)
    edge_gblock: np.ndarray  # (E,) block id if the edge is that block's g, else -1
    edge_block: np.ndarray  # (E,) block id whose E(Λ) holds the edge, else -1
    vertex_block: np.ndarray  # (V,)

    @property
    def n_blocks(self) -> int:
        return len(self.g)

    @classmethod
    def build(cls, graph: Graph) -> "BlockTable":
        if graph.n_vertices == 0:
            xs = ys = range(0)
        else:
            c = graph.coords
            xs = block_range(int(c[:, 0].min()), int(c[:, 0].max()), BLOCK_W)
            ys = block_range(int(c[:, 1].min()), int(c[:, 1].max()), BLOCK_H)
        eidx, vidx = graph.edge_index, graph.vertex_index
        rows = []
        for r in xs:
            for s in ys:
                bg = block_geometry(r, s)
                if not all(v in vidx for v in bg.lam):
                    continue
                if not all(e in eidx for e in bg.edges):
                    continue
                ext = [eidx.get(e, -1) for e in external_edge_boundary(bg.lam)]
                rows.append(
                    (
                        (r, s),
                        eidx[bg.g],
                        sorted(eidx[e] for e in bg.a_set),
                        sorted(eidx[e] for e in bg.non_a),
                        sorted(eidx[e] for e in bg.edges),
                        ext,
                        sorted(vidx[v] for v in bg.lam),
                    )
                )
        nb = len(rows)

        def arr(i, width):
            out = np.full((nb, width), -1, dtype=np.int64)
            for b, row in enumerate(rows):
                out[b, : len(row[i])] = row[i]
            return out

        edge_gblock = np.full(graph.n_edges, -1, dtype=np.int64)
        edge_block = np.full(graph.n_edges, -1, dtype=np.int64)
        vertex_block = np.full(graph.n_vertices, -1, dtype=np.int64)
        for b, row in enumerate(rows):
            edge_gblock[row[1]] = b
            edge_block[row[4]] = b
            vertex_block[row[6]] = b
        return cls(
            index=np.array([row[0] for row in rows], dtype=np.int64).reshape(nb, 2),
            g=np.array([row[1] for row in rows], dtype=np.int64),
            a=arr(2, 6),
            rest=arr(3, 43),
            edges=arr(4, 49),
            ext=arr(5, 22),
            verts=arr(6, 30),
            edge_gblock=edge_gblock,
            edge_block=edge_block,
            vertex_block=vertex_block,
        )

    def row_of(self, r: int, s: int) -> int:
        hit = np.nonzero((self.index[:, 0] == r) & (self.index[:, 1] == s))[0]
        if len(hit) == 0:
            raise GeometryError(f"block ({r},{s}) not wholly inside the region")
        return int(hit[0])
