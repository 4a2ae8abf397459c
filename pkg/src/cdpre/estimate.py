"""Monte Carlo experiments: connection probabilities, fits and scans.

One replicate samples a single clock field (plus constraints for CDPRE) on a
region covering the largest box asked for, and every radius and time is read
off that one sample.  Estimates at different n or t therefore share seeds,
which makes monotonicity in n and t exact rather than statistical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import stats

from . import _kernels as K
from .dynamics import MODELS, evolve_coupled, ever_open
from .env import ConstraintDist, SeedSpec, sample_clocks, sample_environment, uniform_open_closed
from .lattice import ORIGIN, Box, Graph, block_aligned_region, block_geometry, box_region, edges_in
from .replicates import binomial_stderr, map_replicates, mean_stderr

DEFAULT_PAD = {"cdpre": 8, "bernoulli": 0, "intermediate": 1}


def default_pad(model: str) -> int:
    if model not in DEFAULT_PAD:
        raise ValueError(f"unknown model {model!r}")
    return DEFAULT_PAD[model]


def simulation_region(model: str, n: int, pad: int) -> Graph:
    if model == "intermediate":
        return block_aligned_region(n + pad)
    return box_region(n, pad)


class _Sampler:
    """Draws one replicate and exposes the open mask at any time t."""

    def __init__(self, model: str, graph: Graph, env_dist: ConstraintDist | None, seed: int):
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}")
        if model == "cdpre" and env_dist is None:
            raise ValueError("cdpre needs a constraint distribution")
        self.model, self.graph, self.env_dist, self.seed = model, graph, env_dist, seed
        self.indptr, self.nbr, self.nbr_e = graph.csr
        self.origin = np.array([graph.vid(ORIGIN)], dtype=np.int64)
        self.norms = graph.norms()

    def draw(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        spec = SeedSpec(self.seed, i)
        clocks = sample_clocks(self.graph, spec)
        kappa = None
        if self.model == "cdpre":
            kappa = sample_environment(self.env_dist, self.graph, spec).kappa.astype(np.int64)
        return clocks.u, ever_open(self.model, self.graph, clocks.u, kappa)

    def cluster(self, u, ever, t, edge_mask=None) -> np.ndarray:
        is_open = ever & (u <= t)
        if edge_mask is not None:
            is_open &= edge_mask
        return K.bfs(self.indptr, self.nbr, self.nbr_e, is_open, self.origin) >= 0

    def reach(self, u, ever, t) -> int:
        """Largest sup-norm in the origin's cluster."""
        return int(self.norms[self.cluster(u, ever, t)].max())


# ---------------------------------------------------------------------------
# theta tables


@dataclass(frozen=True)
class ThetaRow:
    n: int
    theta_hat: float
    stderr: float
    replicates: int
    pad: int
    upper95: float  # rule-of-three bound on empty cells, else the estimate


@dataclass(frozen=True)
class ThetaTable:
    model: str
    t: float
    rows: tuple[ThetaRow, ...]
    seed: int = 0

    def row(self, n: int) -> ThetaRow:
        for r in self.rows:
            if r.n == n:
                return r
        raise KeyError(f"table has no row for n={n}")

    def theta(self, n: int) -> float:
        return self.row(n).theta_hat

    def stderr(self, n: int) -> float:
        return self.row(n).stderr

    @property
    def ns(self) -> list[int]:
        return [r.n for r in self.rows]

    def s_n(self, n: int) -> float:
        """Σ_{k=1}^n θ̂_k."""
        return math.fsum(self.theta(k) for k in range(1, n + 1))

    def records(self) -> list[dict]:
        return [
            {"model": self.model, "t": self.t, "n": r.n, "theta_hat": r.theta_hat,
             "stderr": r.stderr, "replicates": r.replicates, "pad": r.pad, "seed": self.seed}
            for r in self.rows
        ]

    @classmethod
    def from_values(cls, model: str, t: float, values: dict, replicates: int = 1, pad: int = 0) -> "ThetaTable":
        rows = tuple(
            ThetaRow(n, float(p), binomial_stderr(p, replicates), replicates, pad, float(p))
            for n, p in sorted(values.items())
        )
        return cls(model, t, rows)


def _rows(reach: np.ndarray, n_list, pad: int) -> tuple[ThetaRow, ...]:
    rows = []
    nrep = len(reach)
    for n in n_list:
        hits = int(np.count_nonzero(reach >= n))
        p = hits / nrep
        rows.append(ThetaRow(n, p, binomial_stderr(p, nrep), nrep, pad, 3.0 / nrep if hits == 0 else p))
    return tuple(rows)


def _check_n_list(n_list) -> list[int]:
    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])) or n_list[0] < 0:
        raise ValueError("n_list must be non-empty, non-negative and strictly increasing")
    return n_list


def theta_table(
    model: str, env_dist: ConstraintDist | None, t: float, n_list: Sequence[int],
    replicates: int, pad: int | None = None, seed: int = 0, threads: int = 1,
    region: Graph | None = None,
) -> ThetaTable:
    """θ̂_n(t) = frequency of {0 <-> ∂B(n)}, one shared sample per replicate."""
    if replicates < 1:
        raise ValueError("replicate count must be positive")
    n_list = _check_n_list(n_list)
    pad = default_pad(model) if pad is None else pad
    if pad < 0:
        raise ValueError("pad must be non-negative")
    graph = region or simulation_region(model, n_list[-1], pad)
    sampler = _Sampler(model, graph, env_dist, seed)
    t = float(t)

    def one(i):
        u, ever = sampler.draw(i)
        return sampler.reach(u, ever, t)

    reach = np.array(map_replicates(one, replicates, threads))
    return ThetaTable(model, t, _rows(reach, n_list, pad), seed)


@dataclass(frozen=True)
class SusceptibilityEstimate:
    model: str
    t: float
    box_n: int
    mean_size: float
    stderr: float
    replicates: int
    truncated: bool = True


def susceptibility(
    model: str, env_dist: ConstraintDist | None, t: float, box_n: int, replicates: int,
    seed: int = 0, pad: int | None = None, threads: int = 1,
) -> SusceptibilityEstimate:
    """Mean size of the origin's cluster using open edges of B(box_n) only."""
    if box_n < 1:
        raise ValueError("box_n must be at least 1")
    pad = default_pad(model) if pad is None else pad
    graph = simulation_region(model, box_n, pad)
    sampler = _Sampler(model, graph, env_dist, seed)
    inner = graph.inner_edge_mask(Box(box_n))

    def one(i):
        u, ever = sampler.draw(i)
        return int(sampler.cluster(u, ever, t, inner).sum())

    size, se = mean_stderr(map_replicates(one, replicates, threads))
    return SusceptibilityEstimate(model, float(t), box_n, size, se, replicates)


# ---------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class ScanResult:
    model: str
    n: int
    t_grid: tuple[float, ...]
    theta_hat: tuple[float, ...]
    stderr: tuple[float, ...]
    replicates: int
    crossing: float | None  # finite-size pseudo-critical point (level 0.5)
    seed: int = 0
    level: float = 0.5

    def records(self) -> list[dict]:
        return [
            {"model": self.model, "n": self.n, "t": t, "theta_hat": p, "stderr": s,
             "replicates": self.replicates, "seed": self.seed}
            for t, p, s in zip(self.t_grid, self.theta_hat, self.stderr)
        ]


def crossing_point(ts, ys, level: float = 0.5) -> float | None:
    """First upward crossing of ``level`` by linear interpolation."""
    for (t0, y0), (t1, y1) in zip(zip(ts, ys), zip(ts[1:], ys[1:])):
        if y0 < level <= y1:
            return float(t0 + (level - y0) * (t1 - t0) / (y1 - y0))
    if len(ys) and ys[0] >= level:
        return float(ts[0])
    return None


def threshold_scan(
    model: str, env_dist: ConstraintDist | None, n: int, t_grid: Sequence[float],
    replicates: int, seed: int = 0, pad: int | None = None, threads: int = 1,
    level: float = 0.5, region: Graph | None = None,
) -> ScanResult:
    """θ̂_n along a time grid from one shared sample per replicate.

    The crossing of ``level`` is a finite-size proxy, not an estimate of the
    critical time.
    """
    t_grid = [float(t) for t in t_grid]
    if any(b < a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("t_grid must be sorted")
    pad = default_pad(model) if pad is None else pad
    graph = region or simulation_region(model, n, pad)
    sampler = _Sampler(model, graph, env_dist, seed)

    def one(i):
        u, ever = sampler.draw(i)
        return [sampler.reach(u, ever, t) >= n for t in t_grid]

    hits = np.array(map_replicates(one, replicates, threads), dtype=float).reshape(replicates, -1)
    p = hits.mean(axis=0)
    se = [binomial_stderr(x, replicates) for x in p]
    return ScanResult(
        model, n, tuple(t_grid), tuple(float(x) for x in p), tuple(se), replicates,
        crossing_point(t_grid, list(p), level), seed, level,
    )


# ---------------------------------------------------------------------------
# Simon-Lieb leading term


def integer_root_floor(x: int, k: int) -> int:
    """floor(x ** (1/k)) computed exactly."""
    if x < 0 or k < 1:
        raise ValueError("need x >= 0 and k >= 1")
    r = int(round(x ** (1.0 / k)))
    while r**k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r


def bootstrap_scale(n: int, k: int) -> int:
    """L_n^k = floor(n^(k/(k+1)))."""
    return integer_root_floor(n**k, k + 1)


@dataclass(frozen=True)
class SimonLiebCheck:
    n: int
    stage_k: int
    scale: int
    product_term: float
    theta_n_hat: float
    margin: float  # θ̂_n minus the product term; ≤ 0 means satisfied without the error term
    sigma: float  # propagated standard error of the margin
    error_term: float  # L exp(-L log L / 2) with unit constant

    @property
    def satisfied(self) -> bool:
        return self.margin <= 3 * self.sigma


def simon_lieb_check(table: ThetaTable, n: int, stage_k: int = 1) -> SimonLiebCheck:
    """Compare θ̂_n with 8 L θ̂_L θ̂_{n-L}, L = floor(n^(k/(k+1)))."""
    L = bootstrap_scale(n, stage_k)
    if L < 1 or L >= n:
        raise ValueError(f"scale {L} unusable for n={n}")
    try:
        a, b, c = table.row(L), table.row(n - L), table.row(n)
    except KeyError as exc:
        raise ValueError(f"table lacks a required scale: {exc}") from None
    prod = 8 * L * a.theta_hat * b.theta_hat
    sigma = math.sqrt(
        c.stderr**2 + (8 * L) ** 2 * ((b.theta_hat * a.stderr) ** 2 + (a.theta_hat * b.stderr) ** 2)
    )
    err = L * math.exp(-0.5 * L * math.log(L)) if L > 1 else 1.0
    return SimonLiebCheck(n, stage_k, L, prod, c.theta_hat, c.theta_hat - prod, sigma, err)


# ---------------------------------------------------------------------------
# decay fits


@dataclass(frozen=True)
class DecayFit:
    family: str
    alpha_hat: float
    epsilon: float
    r_squared: float
    fit_range: tuple[int, int]
    intercept: float
    alpha_stderr: float
    used: tuple[int, ...]
    excluded: tuple[int, ...]  # rows dropped because θ̂ = 0


FAMILIES = ("pure_exponential", "stretched")


def decay_fit(table: ThetaTable, family: str = "pure_exponential", epsilon: float = 0.0, fit_range=None) -> DecayFit:
    """Unweighted least squares of log θ̂ against n or n^(1-ε)."""
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}")
    if family == "pure_exponential":
        epsilon = 0.0
    lo, hi = fit_range if fit_range is not None else (min(table.ns), max(table.ns))
    rows = [r for r in table.rows if lo <= r.n <= hi]
    used = [r for r in rows if r.theta_hat > 0]
    if len(used) < 3:
        raise ValueError("need at least 3 rows with positive frequency to fit")
    x = np.array([r.n ** (1.0 - epsilon) for r in used], dtype=float)
    y = np.log([r.theta_hat for r in used])
    fit = stats.linregress(x, y)
    r2 = float(fit.rvalue**2) if np.isfinite(fit.rvalue) else 1.0
    return DecayFit(
        family, float(-fit.slope), float(epsilon), min(max(r2, 0.0), 1.0), (lo, hi),
        float(fit.intercept), float(fit.stderr), tuple(r.n for r in used),
        tuple(r.n for r in rows if r.theta_hat <= 0),
    )


# ---------------------------------------------------------------------------
# block combinatorics


@dataclass(frozen=True)
class CombinatoricReport:
    block_edge_count: int
    a_count: int
    p_c_exact: Fraction
    reduced_hat: float
    reduced_stderr: float
    reduced_exact: Fraction
    degenerate_hat: float
    replicates: int


def bottom_subset_frequency(n_values: int, subset_size: int, replicates: int, seed: int = 0) -> tuple[float, float]:
    """Frequency that a fixed subset of i.i.d. uniforms holds the smallest values."""
    rng = SeedSpec(seed, 0, "clocks").rng()
    u = uniform_open_closed(rng, (replicates, n_values))
    inside = u[:, :subset_size].max(axis=1)
    if subset_size == n_values:
        hit = np.ones(replicates, dtype=bool)
    else:
        hit = inside < u[:, subset_size:].min(axis=1)
    p = float(hit.mean())
    return p, binomial_stderr(p, replicates)


def verify_block_combinatorics(replicates: int = 10**6, seed: int = 0) -> CombinatoricReport:
    bg = block_geometry(0, 0)
    n_edges = len(edges_in(bg.lam))
    n_a = len(bg.a_set)
    p_c = Fraction(1, math.comb(n_edges, n_a))
    p_hat, se = bottom_subset_frequency(5, 2, replicates, seed)
    deg, _ = bottom_subset_frequency(5, 5, min(replicates, 10_000), seed)
    return CombinatoricReport(n_edges, n_a, p_c, p_hat, se, Fraction(1, math.comb(5, 2)), deg, replicates)


# ---------------------------------------------------------------------------
# coupling chain


@dataclass(frozen=True)
class DominanceReport:
    rho: tuple
    n: int
    t: float
    replicates: int
    lower_violations: int  # edges with cdpre open but intermediate closed
    upper_violations: int  # edges with intermediate open but bernoulli closed
    strict_edges: int  # edges with cdpre closed but bernoulli open
    edges_checked: int
    seed: int = 0

    @property
    def violations(self) -> int:
        return self.lower_violations + self.upper_violations

    def record(self) -> dict:
        return {
            "rho": ",".join(repr(p) for p in self.rho), "n": self.n, "t": self.t,
            "replicates": self.replicates, "lower_violations": self.lower_violations,
            "upper_violations": self.upper_violations, "strict_edges": self.strict_edges,
            "edges_checked": self.edges_checked, "seed": self.seed,
        }


def dominance_check(
    env_dist: ConstraintDist, n: int, ts: Sequence[float], replicates: int,
    seed: int = 0, threads: int = 1, allow_rho0: bool = False,
) -> list[DominanceReport]:
    """Count edgewise breaks of cdpre <= intermediate <= bernoulli on whole blocks covering B(n)."""
    if env_dist.rho0 > 0 and not allow_rho0:
        raise ValueError("rho_0 > 0: the first link of the chain is not guaranteed (pass allow_rho0)")
    graph = block_aligned_region(n)
    ts = [float(t) for t in ts]

    def one(i):
        spec = SeedSpec(seed, i)
        env = sample_environment(env_dist, graph, spec)
        clocks = sample_clocks(graph, spec)
        out = []
        for t in ts:
            trip = evolve_coupled(env, clocks, t)
            lo, hi = trip.violations()
            strict = int(np.count_nonzero(trip.bernoulli.open & ~trip.cdpre.open))
            out.append((lo, hi, strict))
        return out

    res = np.array(map_replicates(one, replicates, threads), dtype=np.int64).reshape(replicates, len(ts), 3)
    tot = res.sum(axis=0)
    return [
        DominanceReport(env_dist.rho, n, t, replicates, int(a), int(b), int(c), graph.n_edges * replicates, seed)
        for t, (a, b, c) in zip(ts, tot)
    ]
