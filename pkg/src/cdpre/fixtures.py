"""Small lattice graphs with exactly computable CDPRE event probabilities."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .analysis import _cluster_dist
from .dynamics import Configuration, exact_distribution, sample_event_frequency
from .lattice import Graph, Vertex


def joined(u, v) -> Callable[[Configuration], bool]:
    def event(config: Configuration) -> bool:
        return bool(_cluster_dist(config, u)[config.graph.vid(v)] >= 0)

    return event


def count_open(pred) -> Callable[[Configuration], bool]:
    return lambda config: pred(int(config.open.sum()))


@dataclass(frozen=True)
class Fixture:
    name: str
    graph: Graph
    kappa: dict
    events: dict = field(default_factory=dict)


def _fixture(name, edges, kappa_default, events, overrides=None) -> Fixture:
    g = Graph.from_edges(edges)
    kappa = {v: kappa_default for v in g.vertices}
    kappa.update({Vertex(*v): k for v, k in (overrides or {}).items()})
    return Fixture(name, g, kappa, events)


def library() -> list[Fixture]:
    o = (0, 0)
    return [
        _fixture("single_edge", [(o, (1, 0))], 3, {"edge_open": count_open(lambda k: k == 1)}),
        _fixture(
            "path3", [((-1, 0), o), (o, (1, 0))], 3,
            {"both_open": count_open(lambda k: k == 2), "any_open": count_open(lambda k: k >= 1)},
            {o: 1},
        ),
        _fixture(
            "star4", [(o, (1, 0)), (o, (-1, 0)), (o, (0, 1)), (o, (0, -1))], 3,
            {
                "all_spokes_open": count_open(lambda k: k == 4),
                "any_open": count_open(lambda k: k >= 1),
                "center_degree_3": count_open(lambda k: k == 3),
            },
        ),
        _fixture(
            "unit_square", [(o, (1, 0)), (o, (0, 1)), ((1, 0), (1, 1)), ((0, 1), (1, 1))], 2,
            {"diagonal_joined": joined(o, (1, 1)), "two_open": count_open(lambda k: k == 2)},
            {o: 1, (1, 1): 1},
        ),
        _fixture(
            "grid_2x3",
            [(o, (1, 0)), ((1, 0), (2, 0)), ((0, 1), (1, 1)), ((1, 1), (2, 1)),
             (o, (0, 1)), ((1, 0), (1, 1)), ((2, 0), (2, 1))],
            3,
            {"corner_to_corner": joined(o, (2, 1))},
        ),
        _fixture(
            "h_graph",
            [((0, -1), o), (o, (0, 1)), ((3, -1), (3, 0)), ((3, 0), (3, 1)),
             (o, (1, 0)), ((1, 0), (2, 0)), ((2, 0), (3, 0))],
            3,
            {"post_to_post": joined((0, 1), (3, -1))},
            {o: 2, (3, 0): 2},
        ),
    ]


@dataclass(frozen=True)
class OracleRow:
    fixture: str
    event: str
    t: float
    exact: float
    mc: float
    stderr: float
    tolerance: float
    replicates: int

    @property
    def passed(self) -> bool:
        return abs(self.mc - self.exact) <= self.tolerance

    def record(self) -> dict:
        return {
            "fixture": self.fixture, "event": self.event, "t": self.t, "exact": self.exact,
            "mc": self.mc, "stderr": self.stderr, "tolerance": self.tolerance,
            "replicates": self.replicates, "pass": int(self.passed),
        }


def oracle_check(ts=(0.2, 0.5, 0.8), replicates: int = 100_000, seed: int = 0, sigmas: float = 4.0) -> list[OracleRow]:
    """Monte Carlo frequency vs exact enumeration on every fixture event.

    Tolerance is ``sigmas`` binomial standard deviations of the exact value.
    """
    rows = []
    for fi, fx in enumerate(library()):
        for ev_i, (ev_name, ev) in enumerate(fx.events.items()):
            for ti, t in enumerate(ts):
                exact = exact_distribution(fx.graph, fx.kappa, t, ev)
                # one seed per (fixture, event, t) cell
                cell_seed = (seed * 1_000_003 + fi * 10_007 + ev_i * 101 + ti) % 2**64
                mc, se = sample_event_frequency(fx.graph, fx.kappa, t, ev, replicates, cell_seed)
                tol = sigmas * math.sqrt(max(exact * (1 - exact), 0.0) / replicates)
                rows.append(OracleRow(fx.name, ev_name, float(t), exact, mc, se, tol, replicates))
    return rows
