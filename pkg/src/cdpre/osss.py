"""Block exploration T_k for the intermediate model, revealments, influences
and the variance-vs-revealment·influence comparison.

The boolean function throughout is f = 1{0 <-> ∂B(n)} in the intermediate
configuration, viewed as a function of the clocks.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .dynamics import CoverageError, intermediate_state
from .env import ClockField, SeedSpec, sample_clocks, uniform_open_closed
from .lattice import (
    BLOCK_H, BLOCK_W, ORIGIN, Box, Edge, Graph, block_range, exploration_region, vertex_boundary,
)
from .replicates import binomial_stderr, map_replicates

CHUNK = 256


@dataclass(frozen=True)
class ExplorationState:
    d_set: tuple  # processed blocks (r, s), in processing order
    z_set: frozenset
    revealed: frozenset
    step: int
    reads: int = 0


class Explorer:
    """Precomputed index arrays for running T_k on one clocked region."""

    def __init__(self, graph: Graph, n: int):
        if n < 1:
            raise ValueError("n must be at least 1")
        self.graph, self.n = graph, n
        tab = graph.blocks
        self.table = tab
        rs, ss = block_range(-n, n, BLOCK_W), block_range(-n, n, BLOCK_H)
        self.in_scope = np.isin(tab.index[:, 0], list(rs)) & np.isin(tab.index[:, 1], list(ss))
        need = {(r, s) for r in rs for s in ss}
        have = {tuple(x) for x in tab.index[self.in_scope].tolist()}
        if need - have:
            raise CoverageError(f"clocks do not cover block {sorted(need - have)[0]}")
        if (tab.ext[self.in_scope] < 0).any():
            raise CoverageError("clocks do not cover the external boundary of every explored block")
        self.indptr, self.nbr, self.nbr_e = graph.csr
        self.norms = graph.norms()
        self.origin = graph.vid(ORIGIN)

    @classmethod
    def for_box(cls, n: int) -> "Explorer":
        return cls(exploration_region(n), n)

    def run(self, u: np.ndarray, t: float, k: int):
        if not 1 <= k <= self.n:
            raise ValueError("need 1 <= k <= n")
        tab = self.table
        return K.run_tk(
            self.indptr, self.nbr, self.nbr_e, self.norms, u, float(t), int(k), int(self.n),
            self.origin, tab.a, tab.rest, tab.edges, tab.ext, tab.verts, self.in_scope, tab.edge_gblock,
        )

    def full_information(self, u: np.ndarray, t: float) -> np.ndarray:
        """Largest sup-norm reached by the origin's intermediate cluster."""
        blocked, _ = intermediate_state(self.graph, u)
        is_open = (u <= t) & ~blocked
        dist = K.bfs(self.indptr, self.nbr, self.nbr_e, is_open, np.array([self.origin]))
        return int(self.norms[dist >= 0].max())

    def influence_candidates(self) -> np.ndarray:
        """Edges whose clock can change f: E(B(n)) and the blocks of g edges in it."""
        tab = self.table
        inner = self.graph.inner_edge_mask(Box(self.n))
        mask = inner.copy()
        for b in np.nonzero(inner[tab.g])[0]:
            mask[tab.edges[b]] = True
        return np.nonzero(mask)[0]

    def flips(self, u: np.ndarray, t: float, cands: np.ndarray, u_new: np.ndarray):
        tab = self.table
        return K.influence_flips(
            self.indptr, self.nbr, self.nbr_e, self.norms, u, float(t), int(self.n), self.origin,
            tab.a, tab.rest, tab.g, tab.edge_gblock, tab.edge_block, cands, u_new,
        )


def run_Tk(clocks: ClockField, t: float, k: int, n: int) -> tuple[bool, ExplorationState]:
    """Run T_k and return the determined value of f and the final state.

    Z starts at ∂B(k); each step processes the lexicographically first
    unprocessed block meeting B(n) and Z, reveals E(Λ) ∪ ∂^eΛ, and grows Z by
    everything joined to it through revealed open edges.  Reading an
    unrevealed clock raises :class:`UnrevealedReadError`.
    """
    ex = Explorer(clocks.graph, n)
    bit, revealed, in_z, seq, reads = ex.run(clocks.u, t, k)
    g = clocks.graph
    state = ExplorationState(
        tuple(tuple(int(x) for x in ex.table.index[b]) for b in seq),
        frozenset(g.vertices[i] for i in np.nonzero(in_z)[0]),
        frozenset(g.edges[i] for i in np.nonzero(revealed)[0]),
        len(seq),
        int(reads),
    )
    return bool(bit), state


# ---------------------------------------------------------------------------
# revealment


@dataclass(frozen=True, eq=False)
class RevealmentReport:
    t: float
    n: int
    graph: Graph
    counts: np.ndarray  # (n, E) number of replicates revealing each edge, row k-1
    theta: np.ndarray  # θ̃_k estimates, k = 1..n
    s_n: float
    replicates: int
    mismatches: int  # T_k answers differing from full information (should be 0)
    seed: int = 0

    @property
    def delta(self) -> np.ndarray:
        return self.counts / self.replicates

    @property
    def stderr(self) -> np.ndarray:
        d = self.delta
        return np.sqrt(d * (1 - d) / self.replicates)

    @property
    def delta_sum(self) -> np.ndarray:
        return self.delta.sum(axis=0)

    def beta_hat(self) -> np.ndarray:
        """Empirical constant Σ_k δ̂_e / (4 Ŝ_n) per edge."""
        return self.delta_sum / (4 * self.s_n) if self.s_n > 0 else np.full(self.graph.n_edges, np.inf)

    def records(self) -> list[dict]:
        d, se = self.delta, self.stderr
        out = []
        for k in range(1, self.n + 1):
            for i, e in enumerate(self.graph.edges):
                out.append({"k": k, "edge": _edge_label(e), "delta_hat": float(d[k - 1, i]),
                            "stderr": float(se[k - 1, i])})
        return out


def _edge_label(e: Edge) -> str:
    return f"{e.a.x1}:{e.a.x2}-{e.b.x1}:{e.b.x2}"


def _chunks(replicates: int):
    return [(s, min(CHUNK, replicates - s)) for s in range(0, replicates, CHUNK)]


def revealment_table(t: float, n: int, replicates: int, seed: int = 0, threads: int = 1) -> RevealmentReport:
    """Run T_1..T_n on shared clocks per replicate and tabulate revealments."""
    ex = Explorer.for_box(n)
    g = ex.graph

    def chunk(c):
        start, size = _chunks(replicates)[c]
        counts = np.zeros((n, g.n_edges), dtype=np.int64)
        hits = np.zeros(n, dtype=np.int64)
        bad = 0
        for i in range(start, start + size):
            u = sample_clocks(g, SeedSpec(seed, i)).u
            reach = ex.full_information(u, t)
            for k in range(1, n + 1):
                bit, revealed, *_ = ex.run(u, t, k)
                counts[k - 1] += revealed
                bad += bit != (reach >= n)
                hits[k - 1] += reach >= k
        return counts, hits, bad

    parts = map_replicates(chunk, len(_chunks(replicates)), threads)
    counts = sum(p[0] for p in parts)
    hits = sum(p[1] for p in parts)
    theta = hits / replicates
    s_n = math.fsum(theta.tolist())
    return RevealmentReport(float(t), n, g, counts, theta, s_n, replicates, int(sum(p[2] for p in parts)), seed)


def boundary_connection_frequency(t: float, n: int, k: int, edges, replicates: int, seed: int = 0) -> np.ndarray:
    """Frequency of ∂Λ(e) <-> ∂B(k) in the intermediate model, per edge.

    Λ(e) is the block holding e, or the union of the two blocks it straddles.
    """
    from .lattice import block_geometry, block_of_edge

    ex = Explorer.for_box(n)
    g = ex.graph
    targets = []
    for e in edges:
        lam = set().union(*(block_geometry(*rs).lam for rs in block_of_edge(e)))
        targets.append(np.array([g.vid(v) for v in vertex_boundary(lam) if v in g], dtype=np.int64))
    ring = np.nonzero(ex.norms == k)[0]
    hits = np.zeros(len(targets))
    for i in range(replicates):
        u = sample_clocks(g, SeedSpec(seed, i)).u
        blocked, _ = intermediate_state(g, u)
        dist = K.bfs(ex.indptr, ex.nbr, ex.nbr_e, (u <= t) & ~blocked, ring)
        for j, tv in enumerate(targets):
            hits[j] += (dist[tv] >= 0).any()
    return hits / replicates


# ---------------------------------------------------------------------------
# influences


@dataclass(frozen=True, eq=False)
class InfluenceReport:
    t: float
    n: int
    graph: Graph
    flips: np.ndarray  # (E,) flip counts
    replicates: int
    resamples: int = 1
    seed: int = 0

    @property
    def inf_hat(self) -> np.ndarray:
        return self.flips / (self.replicates * self.resamples)

    @property
    def stderr(self) -> np.ndarray:
        p = self.inf_hat
        return np.sqrt(p * (1 - p) / (self.replicates * self.resamples))

    def records(self) -> list[dict]:
        p, se = self.inf_hat, self.stderr
        return [{"edge": _edge_label(e), "inf_hat": float(p[i]), "stderr": float(se[i])}
                for i, e in enumerate(self.graph.edges)]


def _resample_values(seed: int, i: int, size: int) -> np.ndarray:
    return uniform_open_closed(SeedSpec(seed, i, "resample").rng(), size)


def influence_table(t: float, n: int, replicates: int, resamples: int = 1, seed: int = 0, threads: int = 1) -> InfluenceReport:
    """Paired estimate of P(f changes when one clock is redrawn), for every edge.

    Edges that cannot affect f are never resampled and report exactly 0.
    """
    ex = Explorer.for_box(n)
    g = ex.graph
    cands = ex.influence_candidates()

    def chunk(c):
        start, size = _chunks(replicates)[c]
        flips = np.zeros(g.n_edges, dtype=np.int64)
        for i in range(start, start + size):
            u = sample_clocks(g, SeedSpec(seed, i)).u
            new = _resample_values(seed, i, resamples * len(cands)).reshape(resamples, -1)
            for r in range(resamples):
                _, fl = ex.flips(u, t, cands, new[r])
                flips[cands] += fl
        return flips

    parts = map_replicates(chunk, len(_chunks(replicates)), threads)
    return InfluenceReport(float(t), n, g, sum(parts), replicates, resamples, seed)


# ---------------------------------------------------------------------------
# the inequality itself


@dataclass(frozen=True)
class OsssCheck:
    t: float
    n: int
    k: int
    theta_hat: float
    variance: float
    variance_sigma: float
    rhs: float  # Σ_e δ̂_e(T_k) Inf̂_e
    rhs_sigma: float
    replicates: int
    seed: int = 0

    @property
    def sigma(self) -> float:
        return math.hypot(self.variance_sigma, self.rhs_sigma)

    @property
    def margin(self) -> float:
        return self.rhs - self.variance

    @property
    def holds(self) -> bool:
        return self.variance <= self.rhs + 3 * self.sigma

    def as_dict(self) -> dict:
        return {
            "t": self.t, "n": self.n, "k": self.k, "theta_hat": self.theta_hat,
            "variance": self.variance, "variance_sigma": self.variance_sigma,
            "rhs": self.rhs, "rhs_sigma": self.rhs_sigma, "margin": self.margin,
            "sigma": self.sigma, "holds": self.holds, "replicates": self.replicates,
            "seed": self.seed,
        }


def osss_check(t: float, n: int, replicates: int, seed: int = 0, ks=None, threads: int = 1) -> dict[int, OsssCheck]:
    """Var̂(f) against Σ_e δ̂_e(T_k) Inf̂_e for each k, from one set of replicates.

    σ propagation treats the per-edge estimates as independent.
    """
    ks = list(range(1, n + 1)) if ks is None else [int(k) for k in ks]
    ex = Explorer.for_box(n)
    g = ex.graph
    cands = ex.influence_candidates()

    def chunk(c):
        start, size = _chunks(replicates)[c]
        reveal = np.zeros((len(ks), g.n_edges), dtype=np.int64)
        flips = np.zeros(g.n_edges, dtype=np.int64)
        hits = 0
        for i in range(start, start + size):
            u = sample_clocks(g, SeedSpec(seed, i)).u
            f0, fl = ex.flips(u, t, cands, _resample_values(seed, i, len(cands)))
            flips[cands] += fl
            hits += f0
            for j, k in enumerate(ks):
                reveal[j] += ex.run(u, t, k)[1]
        return reveal, flips, hits

    parts = map_replicates(chunk, len(_chunks(replicates)), threads)
    reveal = sum(p[0] for p in parts) / replicates
    inf = sum(p[1] for p in parts) / replicates
    theta = sum(p[2] for p in parts) / replicates
    var = theta * (1 - theta)
    var_sigma = abs(1 - 2 * theta) * binomial_stderr(theta, replicates)
    se_inf2 = inf * (1 - inf) / replicates
    out = {}
    for j, k in enumerate(ks):
        d = reveal[j]
        se_d2 = d * (1 - d) / replicates
        rhs = float(np.dot(d, inf))
        rhs_sigma = float(np.sqrt(np.sum(inf**2 * se_d2 + d**2 * se_inf2)))
        out[k] = OsssCheck(float(t), n, k, float(theta), float(var), float(var_sigma), rhs, rhs_sigma, replicates, seed)
    return out


def osss_json(checks: dict[int, OsssCheck]) -> str:
    return json.dumps({str(k): c.as_dict() for k, c in sorted(checks.items())}, indent=2, sort_keys=True)
