"""The three coupled processes and an exact oracle for small graphs.

All three models are functions of one clock field:

* ``cdpre`` -- edges attempt at their clocks and open only if both
  endpoints are below their constraints at that moment;
* ``intermediate`` -- Bernoulli, except that each block's edge g is closed
  forever when the block event C occurs;
* ``bernoulli`` -- open iff the clock is at most t.
"""
from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from . import _kernels as K
from .env import ClockField, Environment, SeedSpec, uniform_open_closed
from .lattice import BLOCK_H, BLOCK_W, Edge, Graph, GeometryError, Vertex

MODELS = ("cdpre", "intermediate", "bernoulli")
MAX_ORACLE_EDGES = 10


class CoverageError(ValueError):
    """The clocked region does not contain data the computation needs."""


@dataclass(frozen=True, eq=False)
class Configuration:
    model: str
    t: float
    graph: Graph
    open: np.ndarray  # bool, one entry per graph edge

    @property
    def region_edges(self) -> tuple[Edge, ...]:
        return self.graph.edges

    def __getitem__(self, e) -> bool:
        return bool(self.open[self.graph.eid(e)])

    def open_edges(self) -> list[Edge]:
        return [e for e, x in zip(self.graph.edges, self.open) if x]

    def degrees(self) -> np.ndarray:
        ea, eb = self.graph.ends
        deg = np.bincount(ea[self.open], minlength=self.graph.n_vertices)
        return deg + np.bincount(eb[self.open], minlength=self.graph.n_vertices)

    def degree(self, v) -> int:
        return int(self.degrees()[self.graph.vid(v)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["edge_a_x1", "edge_a_x2", "edge_b_x1", "edge_b_x2", "open_bit"])
        for e, x in zip(self.graph.edges, self.open):
            w.writerow([e.a.x1, e.a.x2, e.b.x1, e.b.x2, int(x)])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class BlockEventReport:
    index: np.ndarray  # (B, 2) block indices (r, s)
    c_occurred: np.ndarray
    max_inside: np.ndarray  # max clock over A
    min_outside: np.ndarray  # min clock over E(Λ) \ A

    def __len__(self):
        return len(self.c_occurred)

    def __getitem__(self, rs) -> dict:
        hit = np.nonzero((self.index[:, 0] == rs[0]) & (self.index[:, 1] == rs[1]))[0]
        if len(hit) == 0:
            raise KeyError(rs)
        b = int(hit[0])
        return {
            "c_occurred": bool(self.c_occurred[b]),
            "max_inside": float(self.max_inside[b]),
            "min_outside": float(self.min_outside[b]),
        }


@dataclass(frozen=True, eq=False)
class CoupledTriple:
    cdpre: Configuration
    intermediate: Configuration
    bernoulli: Configuration
    blocks: BlockEventReport

    def violations(self) -> tuple[int, int]:
        """Edges breaking cdpre <= intermediate, and intermediate <= bernoulli."""
        lo = int(np.count_nonzero(self.cdpre.open & ~self.intermediate.open))
        hi = int(np.count_nonzero(self.intermediate.open & ~self.bernoulli.open))
        return lo, hi


def _check_t(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return t


def _kappa_on(env: Environment, graph: Graph) -> np.ndarray:
    if env.graph is graph:
        return env.kappa.astype(np.int64)
    idx = env.graph.vertex_index
    try:
        return np.array([env.kappa[idx[v]] for v in graph.vertices], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"missing constraint for vertex {exc.args[0]}") from None


def _restrict(clocks: ClockField, region_edges) -> tuple[Graph, np.ndarray]:
    if region_edges is None:
        return clocks.graph, clocks.u
    graph = region_edges if isinstance(region_edges, Graph) else Graph.from_edges(region_edges)
    if graph is clocks.graph:
        return graph, clocks.u
    try:
        return graph, clocks.u[clocks.graph.edge_ids(graph.edges)]
    except GeometryError as exc:
        raise CoverageError(str(exc)) from None


def evolve_cdpre(env: Environment, clocks: ClockField, t: float, region_edges=None) -> Configuration:
    """CDPRE configuration at time ``t`` on the clocked region (free boundary)."""
    t = _check_t(t)
    graph, u = _restrict(clocks, region_edges)
    kappa = _kappa_on(env, graph)
    ea, eb = graph.ends
    return Configuration("cdpre", t, graph, K.cdpre_sweep(ea, eb, kappa, u, t))


def evolve_bernoulli(clocks: ClockField, t: float) -> Configuration:
    t = _check_t(t)
    return Configuration("bernoulli", t, clocks.graph, clocks.u <= t)


def g_edge_mask(graph: Graph) -> np.ndarray:
    """Edges of the graph that are some block's g (whether or not the block is covered)."""
    ea, eb = graph.ends
    a = graph.coords[ea]
    b = graph.coords[eb]
    return (b[:, 0] == a[:, 0] + 1) & (a[:, 0] % BLOCK_W == 2) & (a[:, 1] % BLOCK_H == 2)


def _window_mask(graph: Graph, window) -> np.ndarray:
    if window is None:
        return np.ones(graph.n_vertices, dtype=bool)
    if isinstance(window, Graph):
        window = window.vertices
    elif hasattr(window, "vertices"):
        window = window.vertices()
    wanted = {Vertex(*v) for v in window}
    idx = graph.vertex_index
    missing = [v for v in wanted if v not in idx]
    if missing:
        raise CoverageError(f"window vertex {missing[0]} outside the clocked region")
    mask = np.zeros(graph.n_vertices, dtype=bool)
    mask[[idx[v] for v in wanted]] = True
    return mask


def intermediate_state(graph: Graph, u: np.ndarray, window=None):
    """t-independent part of the intermediate model.

    Returns ``(blocked, report)`` where ``blocked`` marks g edges closed by C,
    plus g edges whose block is not wholly clocked (these must lie outside
    ``window``).
    """
    table = graph.blocks
    occ, amax, rmin = K.block_events(u, table.a, table.rest)
    blocked = np.zeros(graph.n_edges, dtype=bool)
    blocked[table.g[occ]] = True
    uncovered = g_edge_mask(graph) & (table.edge_gblock < 0)
    if uncovered.any():
        wmask = _window_mask(graph, window)
        ea, eb = graph.ends
        bad = uncovered & wmask[ea] & wmask[eb]
        if bad.any():
            e = graph.edges[int(np.argmax(bad))]
            raise CoverageError(f"block of g edge {e} is not wholly inside the clocked region")
        blocked |= uncovered
    return blocked, BlockEventReport(table.index, occ, amax, rmin)


def evolve_intermediate(clocks: ClockField, t: float, window=None):
    """Intermediate configuration at time ``t`` and the block-event report.

    g edges whose block sticks out of the clocked region are kept closed;
    asking for a ``window`` containing such an edge is an error.
    """
    t = _check_t(t)
    blocked, report = intermediate_state(clocks.graph, clocks.u, window)
    return Configuration("intermediate", t, clocks.graph, (clocks.u <= t) & ~blocked), report


def evolve_coupled(env: Environment, clocks: ClockField, t: float, window=None) -> CoupledTriple:
    inter, report = evolve_intermediate(clocks, t, window)
    return CoupledTriple(
        evolve_cdpre(env, clocks, t), inter, evolve_bernoulli(clocks, t), report
    )


def ever_open(model: str, graph: Graph, u: np.ndarray, kappa=None) -> np.ndarray:
    """Mask of edges that are open at time 1; the time-t state is this & (u <= t).

    Valid because an edge's fate at its own clock never depends on t.
    """
    if model == "bernoulli":
        return np.ones(graph.n_edges, dtype=bool)
    if model == "intermediate":
        blocked, _ = intermediate_state(graph, u)
        return ~blocked
    if model == "cdpre":
        ea, eb = graph.ends
        return K.cdpre_sweep(ea, eb, kappa, u, 1.0)
    raise ValueError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# exact enumeration oracle


def _oracle_inputs(graph: Graph, kappa: Mapping) -> tuple[int, tuple[int, ...], tuple[int, ...]]:
    m = graph.n_edges
    if m > MAX_ORACLE_EDGES:
        raise ValueError(f"graph has {m} edges; exact enumeration supports at most {MAX_ORACLE_EDGES}")
    try:
        kap = tuple(int(kappa[v]) for v in graph.vertices)
    except KeyError as exc:
        raise ValueError(f"kappa missing vertex {exc.args[0]}") from None
    ea, eb = graph.ends
    inc = [0] * graph.n_vertices
    for i in range(m):
        inc[ea[i]] |= 1 << i
        inc[eb[i]] |= 1 << i
    ends = tuple((int(ea[i]), int(eb[i])) for i in range(m))
    return m, kap, (tuple(inc), ends)


@lru_cache(maxsize=128)
def _ordering_counts(m: int, kap: tuple, inc: tuple, ends: tuple) -> dict:
    """Map (k, open mask) -> number of (k-subset, ordering) pairs producing it.

    Level k holds states (attempted set, open set) weighted by how many
    orderings of the attempted set reach them; identical states are merged,
    which is what keeps 10 edges cheap.
    """
    out = defaultdict(int)
    level = {(0, 0): 1}
    for k in range(m + 1):
        nxt = defaultdict(int)
        for (used, opened), cnt in level.items():
            out[(k, opened)] += cnt
            if k == m:
                continue
            for e in range(m):
                bit = 1 << e
                if used & bit:
                    continue
                a, b = ends[e]
                if (bin(opened & inc[a]).count("1") < kap[a]
                        and bin(opened & inc[b]).count("1") < kap[b]):
                    nxt[(used | bit, opened | bit)] += cnt
                else:
                    nxt[(used | bit, opened)] += cnt
        level = nxt
    return dict(out)


def configuration_distribution(graph: Graph, kappa: Mapping, t: float) -> dict[int, float]:
    """Exact law of the CDPRE configuration, keyed by open-edge bitmask (bit i = edge i).

    Each attempted set S of size k has probability t^k (1-t)^(m-k) and each of
    its k! orderings is equally likely; the opening rule is replayed along
    every ordering.
    """
    t = _check_t(t)
    m, kap, (inc, ends) = _oracle_inputs(graph, kappa)
    law = defaultdict(float)
    for (k, opened), cnt in _ordering_counts(m, kap, inc, ends).items():
        w = t**k * (1.0 - t) ** (m - k) / math.factorial(k)
        if w:
            law[opened] += cnt * w
    return dict(law)


def mask_to_config(graph: Graph, mask: int, t: float, model: str = "cdpre") -> Configuration:
    bits = np.array([(mask >> i) & 1 for i in range(graph.n_edges)], dtype=bool)
    return Configuration(model, t, graph, bits)


def exact_distribution(graph: Graph, kappa: Mapping, t: float, event: Callable[[Configuration], bool]) -> float:
    """Exact probability of ``event`` under CDPRE on a graph with at most 10 edges."""
    law = configuration_distribution(graph, kappa, t)
    return math.fsum(p for mask, p in law.items() if event(mask_to_config(graph, mask, t)))


def sample_event_frequency(
    graph: Graph, kappa: Mapping, t: float, event, replicates: int, seed: int, chunk: int = 1 << 16
) -> tuple[float, float]:
    """Monte Carlo frequency of ``event`` (and its binomial standard error)."""
    t = _check_t(t)
    if replicates < 1:
        raise ValueError("replicates must be positive")
    kap = np.array([kappa[v] for v in graph.vertices], dtype=np.int64)
    ea, eb = graph.ends
    weights = 1 << np.arange(graph.n_edges, dtype=np.int64)
    counts: dict[int, int] = defaultdict(int)
    for c, start in enumerate(range(0, replicates, chunk)):
        size = min(chunk, replicates - start)
        rng = SeedSpec(seed, c, "clocks").rng()
        u = uniform_open_closed(rng, (size, graph.n_edges))
        opened = K.cdpre_sweep_batch(ea, eb, kap, u, t)
        masks, cnt = np.unique(opened.astype(np.int64) @ weights, return_counts=True)
        for mk, n in zip(masks.tolist(), cnt.tolist()):
            counts[mk] += n
    hits = sum(n for mk, n in counts.items() if event(mask_to_config(graph, mk, t)))
    p = hits / replicates
    return p, math.sqrt(p * (1 - p) / replicates)
