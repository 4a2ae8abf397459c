"""Random environment (vertex constraints) and clock fields, with seeded streams.

Every random draw in the package goes through :meth:`SeedSpec.rng`, which
hashes ``(master_seed, replicate_index, stream_label)`` into an independent
numpy stream.  Replicates can therefore be regenerated one at a time and in
any order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .lattice import Edge, Graph, Vertex, edge

STREAMS = {"constraints": 0, "clocks": 1, "resample": 2}


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    replicate_index: int = 0
    stream_label: str = "clocks"

    def __post_init__(self):
        if self.stream_label not in STREAMS:
            raise ValueError(f"unknown stream label {self.stream_label!r}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=self.master_seed,
            spawn_key=(self.replicate_index, STREAMS[self.stream_label]),
        )
        return np.random.Generator(np.random.PCG64(ss))

    def stream(self, label: str) -> "SeedSpec":
        return SeedSpec(self.master_seed, self.replicate_index, label)

    def replicate(self, i: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, i, self.stream_label)


@dataclass(frozen=True)
class ConstraintDist:
    """Law ρ = (ρ_0, ρ_1, ρ_2, ρ_3) of a vertex constraint."""

    rho: tuple[float, float, float, float]

    def __post_init__(self):
        rho = tuple(float(p) for p in self.rho)
        if len(rho) != 4:
            raise ValueError("rho needs exactly four entries")
        if any(not np.isfinite(p) or p < 0 for p in rho):
            raise ValueError(f"rho entries must be non-negative, got {rho}")
        total = sum(rho)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"rho must sum to 1, got {total!r}")
        object.__setattr__(self, "rho", tuple(p / total for p in rho))

    @classmethod
    def parse(cls, text: str) -> "ConstraintDist":
        """Parse ``"0,0,0.5,0.5"`` (fractions like ``1/2`` allowed)."""
        from fractions import Fraction

        return cls(tuple(float(Fraction(p.strip())) for p in text.split(",")))

    @property
    def rho0(self) -> float:
        return self.rho[0]


@dataclass(frozen=True, eq=False)
class Environment:
    graph: Graph
    kappa: np.ndarray  # int8, one entry per graph vertex

    def __getitem__(self, v) -> int:
        return int(self.kappa[self.graph.vid(v)])

    def as_map(self) -> dict[Vertex, int]:
        return {v: int(k) for v, k in zip(self.graph.vertices, self.kappa)}

    @classmethod
    def from_map(cls, graph: Graph, kappa: Mapping) -> "Environment":
        try:
            arr = np.array([kappa[v] for v in graph.vertices], dtype=np.int8)
        except KeyError as exc:
            raise ValueError(f"no constraint given for vertex {exc.args[0]}") from None
        if arr.size and (arr.min() < 0 or arr.max() > 3):
            raise ValueError("constraints must lie in {0,1,2,3}")
        return cls(graph, arr)

    def to_records(self) -> list[dict]:
        return [
            {"x1": v.x1, "x2": v.x2, "kappa": int(k)}
            for v, k in zip(self.graph.vertices, self.kappa)
        ]

    def dumps(self) -> str:
        return json.dumps(self.to_records(), separators=(",", ":"))

    @classmethod
    def loads(cls, text: str) -> "Environment":
        recs = json.loads(text)
        m = {Vertex(r["x1"], r["x2"]): r["kappa"] for r in recs}
        return cls.from_map(Graph.from_vertices(m), m)


@dataclass(frozen=True, eq=False)
class ClockField:
    graph: Graph
    u: np.ndarray  # float64 in (0, 1], one entry per graph edge

    def __post_init__(self):
        if self.u.shape != (self.graph.n_edges,):
            raise ValueError("one clock per region edge required")
        if self.u.size and (self.u.min() <= 0.0 or self.u.max() > 1.0):
            raise ValueError("clocks must lie in (0, 1]")

    @property
    def region_edges(self) -> tuple[Edge, ...]:
        return self.graph.edges

    def __getitem__(self, e) -> float:
        return float(self.u[self.graph.eid(e)])

    def to_records(self) -> list[dict]:
        return [
            {"a": list(e.a), "b": list(e.b), "u": float(x)}
            for e, x in zip(self.graph.edges, self.u)
        ]

    def dumps(self) -> str:
        return json.dumps(self.to_records(), separators=(",", ":"))

    @classmethod
    def loads(cls, text: str, graph: Graph | None = None) -> "ClockField":
        recs = json.loads(text)
        vals = {edge(r["a"], r["b"]): r["u"] for r in recs}
        if graph is None:
            graph = Graph.from_edges(vals)
        return cls(graph, np.array([vals[e] for e in graph.edges], dtype=np.float64))


def uniform_open_closed(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform draws on (0, 1]."""
    # 1 - U maps [0, 1) onto (0, 1] exactly, so no zero can come out
    return 1.0 - rng.random(size)


def sample_environment(dist: ConstraintDist, region, seed: SeedSpec) -> Environment:
    graph = region if isinstance(region, Graph) else Graph.from_vertices(region)
    rng = seed.stream("constraints").rng()
    kappa = rng.choice(4, size=graph.n_vertices, p=np.asarray(dist.rho)).astype(np.int8)
    return Environment(graph, kappa)


def sample_clocks(region_edges, seed: SeedSpec) -> ClockField:
    graph = region_edges if isinstance(region_edges, Graph) else Graph.from_edges(region_edges)
    rng = seed.stream("clocks").rng()
    return ClockField(graph, uniform_open_closed(rng, graph.n_edges))


def resample_edge(clocks: ClockField, e, seed: SeedSpec) -> ClockField:
    i = clocks.graph.eid(e)
    u = clocks.u.copy()
    u[i] = uniform_open_closed(seed.stream("resample").rng(), 1)[0]
    return ClockField(clocks.graph, u)
