"""Clusters, decreasing-clock influence zones and the decoupling covariance."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _kernels as K
from .dynamics import Configuration, evolve_bernoulli, evolve_cdpre
from .env import ClockField, ConstraintDist, SeedSpec, sample_clocks, sample_environment
from .lattice import ORIGIN, Box, GeometryError, Graph, Vertex, box_region, sup_norm
from .replicates import map_replicates, mean_stderr


@dataclass(frozen=True)
class ClusterReport:
    root: Vertex
    size: int
    radius: int  # largest graph distance from the root inside the cluster
    reached: dict = field(default_factory=dict)


@dataclass(frozen=True)
class InfluenceZone:
    source: frozenset
    t: float
    members: frozenset


def _cluster_dist(config: Configuration, v) -> np.ndarray:
    g = config.graph
    indptr, nbr, nbr_e = g.csr
    return K.bfs(indptr, nbr, nbr_e, config.open, np.array([g.vid(v)], dtype=np.int64))


def _reached(norms: np.ndarray, n: int) -> bool:
    # clusters are connected and sup-norms move by at most 1 per step
    return bool(norms.min() <= n <= norms.max())


def _check_extent(graph: Graph, n: int, center) -> None:
    if graph.norms(center).max(initial=0) < n:
        raise GeometryError(f"region too small to contain ∂B({n})")


def cluster_of(config: Configuration, v, radii: Iterable[int] = (), center=ORIGIN) -> ClusterReport:
    """Open cluster of ``v``; ``reached[n]`` says whether it meets ∂B(center, n)."""
    v = Vertex(*v)
    dist = _cluster_dist(config, v)
    members = dist >= 0
    norms = config.graph.norms(center)[members]
    reached = {}
    for n in radii:
        _check_extent(config.graph, n, center)
        reached[n] = _reached(norms, n)
    return ClusterReport(v, int(members.sum()), int(dist.max()), reached)


def connects(config: Configuration, v, n: int, center=ORIGIN) -> bool:
    """Is there an open path from ``v`` to ∂B(center, n)?"""
    _check_extent(config.graph, n, center)
    norms = config.graph.norms(center)[_cluster_dist(config, v) >= 0]
    return _reached(norms, n)


def connects_within(config: Configuration, v, n: int, allowed: np.ndarray, center=ORIGIN) -> bool:
    """Like :func:`connects`, but only through edges flagged in ``allowed``."""
    g = config.graph
    _check_extent(g, n, center)
    indptr, nbr, nbr_e = g.csr
    dist = K.bfs(indptr, nbr, nbr_e, config.open & allowed, np.array([g.vid(v)], dtype=np.int64))
    return _reached(g.norms(center)[dist >= 0], n)


def influence_zone(clocks: ClockField, t: float, source) -> InfluenceZone:
    """M_t(source): vertices joined to the source by a path whose clocks are
    below ``t`` and strictly decreasing away from the source."""
    if isinstance(source, tuple) and len(source) == 2 and isinstance(source[0], (int, np.integer)):
        source = [source]
    src = frozenset(Vertex(*v) for v in source)
    g = clocks.graph
    ea, eb = g.ends
    mask = K.decreasing_zone(ea, eb, clocks.u, float(t), g.vertex_mask(src))
    members = frozenset(g.vertices[i] for i in np.nonzero(mask)[0])
    return InfluenceZone(src, float(t), members)


def mzone_bound(m: int) -> float:
    """The combinatorial bound 4 * 3^(m-1) / m!, capped at 1."""
    return min(1.0, 4 * 3 ** (m - 1) / math.factorial(m))


@dataclass(frozen=True)
class MZoneEstimate:
    m: int
    t: float
    estimate: float
    stderr: float
    replicates: int
    bound: float
    seed: int

    def row(self) -> dict:
        return {
            "m": self.m, "n": "", "t": self.t, "estimate": self.estimate,
            "stderr": self.stderr, "replicates": self.replicates,
            "bound": self.bound, "seed": self.seed,
        }


def mzone_escape_frequency(m: int, t: float, replicates: int, seed: int, threads: int = 1) -> MZoneEstimate:
    """Frequency of M_t(0) meeting ∂B(m), from clocks on B(m)."""
    if m < 1:
        raise ValueError("m must be at least 1")
    graph = box_region(m)
    ea, eb = graph.ends
    src = graph.vertex_mask([ORIGIN])
    norms = graph.norms()

    def one(i):
        clocks = sample_clocks(graph, SeedSpec(seed, i))
        zone = K.decreasing_zone(ea, eb, clocks.u, float(t), src)
        return float(norms[zone].max() >= m)

    hits = np.array(map_replicates(one, replicates, threads))
    est, se = mean_stderr(hits)
    return MZoneEstimate(m, float(t), est, se, replicates, mzone_bound(m), seed)


# ---------------------------------------------------------------------------
# decoupling covariance


def covariance_bound(m: int, c: float = 1.0) -> float:
    """c * m * exp(-m log(m) / 2)."""
    return c * m * math.exp(-0.5 * m * math.log(m)) if m > 1 else c * m


@dataclass(frozen=True)
class CovarianceEstimate:
    m: int
    n: int
    w: Vertex
    t: float
    cov_hat: float
    stderr: float
    replicates: int
    bound: float
    seed: int
    model: str = "cdpre"

    @property
    def within_bound(self) -> bool:
        """|cov| - 3 se <= bound with unit constant (reported, not asserted)."""
        return abs(self.cov_hat) - 3 * self.stderr <= self.bound

    def row(self) -> dict:
        return {
            "m": self.m, "n": self.n, "t": self.t, "estimate": self.cov_hat,
            "stderr": self.stderr, "replicates": self.replicates,
            "bound": self.bound, "seed": self.seed,
        }


def covariance_pair(
    m: int, n: int, w, t: float, replicates: int, seed: int,
    model: str = "cdpre", env_dist: ConstraintDist | None = None, pad: int = 8, threads: int = 1,
) -> CovarianceEstimate:
    """Plug-in covariance of 1{0 <-> ∂B(m)} and 1{w <-> ∂B(n) off B(2m)}.

    The second connection may only use edges outside E(B(2m)), so it can
    leave w (which sits on ∂B(2m)) but never cut back through the box.
    """
    w = Vertex(*w)
    if not 2 * m < n:
        raise GeometryError("need 2m < n")
    if m < 1 or sup_norm(w) != 2 * m:
        raise GeometryError("w must lie on ∂B(2m)")
    if model not in ("cdpre", "bernoulli"):
        raise ValueError("covariance is estimated for cdpre or bernoulli")
    if model == "cdpre" and env_dist is None:
        raise ValueError("cdpre needs a constraint distribution")
    graph = box_region(n, pad)
    allowed = ~graph.inner_edge_mask(Box(2 * m))

    def one(i):
        spec = SeedSpec(seed, i)
        clocks = sample_clocks(graph, spec)
        if model == "cdpre":
            config = evolve_cdpre(sample_environment(env_dist, graph, spec), clocks, t)
        else:
            config = evolve_bernoulli(clocks, t)
        a = connects(config, ORIGIN, m)
        b = connects_within(config, w, n, allowed)
        return float(a), float(b)

    ab = np.array(map_replicates(one, replicates, threads)).reshape(-1, 2)
    x, y = ab[:, 0], ab[:, 1]
    prod = (x - x.mean()) * (y - y.mean())
    cov = float(prod.mean())
    se = float(prod.std(ddof=1) / math.sqrt(len(prod))) if len(prod) > 1 else float("nan")
    return CovarianceEstimate(m, n, w, float(t), cov, se, replicates, covariance_bound(m), seed, model)
