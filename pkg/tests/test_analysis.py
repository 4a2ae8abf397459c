import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cdpre.analysis import (
    cluster_of, connects, connects_within, covariance_bound, covariance_pair, influence_zone,
    mzone_bound, mzone_escape_frequency,
)
from cdpre.dynamics import Configuration, evolve_bernoulli, evolve_cdpre
from cdpre.env import ClockField, ConstraintDist, SeedSpec, sample_clocks, sample_environment
from cdpre.lattice import ORIGIN, Box, GeometryError, Graph, Vertex, box_region, edge, neighbours

KAPPA3 = ConstraintDist((0, 0, 0, 1))


def all_open(graph, value=True):
    return Configuration("bernoulli", 1.0, graph, np.full(graph.n_edges, value))


def brute_zone(clocks, t, source):
    """Depth-first walk over (vertex, entry clock) states; no sweep ordering involved."""
    g = clocks.graph
    seen, stack = set(), [(Vertex(*source), t)]
    while stack:
        v, bound = stack.pop()
        if (v, bound) in seen:
            continue
        seen.add((v, bound))
        for w in neighbours(v):
            if w in g.vertex_index:
                x = clocks[edge(v, w)]
                if x < bound:
                    stack.append((w, x))
    return {v for v, _ in seen}


def test_cluster_examples():
    g = box_region(2)
    closed = cluster_of(all_open(g, False), ORIGIN)
    assert (closed.size, closed.radius) == (1, 0)
    assert cluster_of(all_open(g), ORIGIN).size == 25
    g8 = box_region(5)
    full = evolve_bernoulli(sample_clocks(g8, SeedSpec(0)), 1.0)
    assert cluster_of(full, (2, -3)).size == g8.n_vertices


def test_connects_examples():
    g = box_region(3)
    assert connects(all_open(g, False), ORIGIN, 0)
    assert all(connects(all_open(g), ORIGIN, n) for n in range(4))
    with pytest.raises(GeometryError):
        connects(all_open(g), ORIGIN, 4)
    star = Graph.from_edges([edge(ORIGIN, w) for w in neighbours(ORIGIN)])
    for k in range(5):
        mask = np.zeros(4, dtype=bool)
        mask[:k] = True
        assert connects(Configuration("cdpre", 1.0, star, mask), ORIGIN, 1) == (k >= 1)


@given(st.integers(0, 10**6), st.floats(0.2, 0.8))
def test_cluster_agrees_with_connects(seed, t):
    g = box_region(6)
    cfg = evolve_bernoulli(sample_clocks(g, SeedSpec(seed)), t)
    rep = cluster_of(cfg, ORIGIN, radii=range(7))
    assert all(rep.reached[n] == connects(cfg, ORIGIN, n) for n in range(7))


@given(st.integers(0, 10**6), st.floats(0.2, 0.8), st.integers(1, 5))
def test_connects_monotone_in_configuration(seed, t, n):
    g = box_region(5)
    u = sample_clocks(g, SeedSpec(seed)).u
    lo = Configuration("x", t, g, u <= t)
    hi = Configuration("x", t, g, u <= t + 0.1)
    assert connects(lo, ORIGIN, n) <= connects(hi, ORIGIN, n)
    assert connects_within(lo, ORIGIN, n, np.ones(g.n_edges, bool)) == connects(lo, ORIGIN, n)


def path_clocks(values):
    g = Graph.from_edges([edge((i, 0), (i + 1, 0)) for i in range(len(values))])
    return ClockField(g, np.array(values, dtype=float))


def test_zone_examples():
    c = path_clocks([0.9, 0.5, 0.2])
    assert influence_zone(c, 1.0, (0, 0)).members == {Vertex(i, 0) for i in range(4)}
    c = path_clocks([0.2, 0.5])
    assert influence_zone(c, 1.0, (0, 0)).members == {Vertex(0, 0), Vertex(1, 0)}
    g = box_region(2)
    u = sample_clocks(g, SeedSpec(1)).u
    zone = influence_zone(ClockField(g, u), float(u.min()) / 2, (0, 0))
    assert zone.members == {ORIGIN}


@given(st.integers(0, 10**6), st.floats(0.3, 1.0))
def test_zone_matches_brute_force(seed, t):
    clocks = sample_clocks(box_region(3), SeedSpec(seed))
    assert influence_zone(clocks, t, (0, 0)).members == brute_zone(clocks, t, (0, 0))


@given(st.integers(0, 10**6), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_zone_monotone_in_t(seed, s, t):
    s, t = min(s, t), max(s, t)
    clocks = sample_clocks(box_region(4), SeedSpec(seed))
    assert influence_zone(clocks, s, (0, 0)).members <= influence_zone(clocks, t, (0, 0)).members


def test_mzone_bound_values():
    assert mzone_bound(7) == pytest.approx(2916 / 5040)
    assert mzone_bound(5) == 1.0  # 4*81/120 = 2.7 is vacuous


def test_mzone_small_t():
    est = mzone_escape_frequency(3, 0.01, 20_000, seed=2)
    union = 4 * 9 * 0.01**3 / 6
    assert est.estimate <= union + 3 * math.sqrt(union / 20_000) + 1e-12


def test_mzone_vacuous_case():
    est = mzone_escape_frequency(5, 1.0, 2000, seed=2)
    assert 0 <= est.estimate <= est.bound == 1.0


def test_covariance_zero_at_t0():
    est = covariance_pair(2, 6, (4, 0), 0.0, 200, seed=1, env_dist=KAPPA3, pad=2)
    assert est.cov_hat == 0.0


def test_covariance_bernoulli_independent():
    est = covariance_pair(3, 10, (6, 0), 0.5, 4000, seed=3, model="bernoulli", pad=0)
    assert abs(est.cov_hat) <= 3 * est.stderr + 1e-12


def test_covariance_geometry_checks():
    with pytest.raises(GeometryError):
        covariance_pair(3, 10, (5, 0), 0.5, 10, seed=0, env_dist=KAPPA3)
    with pytest.raises(GeometryError):
        covariance_pair(3, 6, (6, 0), 0.5, 10, seed=0, env_dist=KAPPA3)


def test_covariance_bound_formula():
    assert covariance_bound(6) == pytest.approx(6 * math.exp(-3 * math.log(6)))


def test_covariance_cdpre_reports_bound():
    est = covariance_pair(3, 8, (6, 0), 0.45, 300, seed=4, env_dist=KAPPA3, pad=2)
    assert est.bound == covariance_bound(3)
    assert isinstance(est.within_bound, bool)


def test_degree_aware_cluster_in_cdpre():
    g = box_region(4)
    env = sample_environment(KAPPA3, g, SeedSpec(5))
    cfg = evolve_cdpre(env, sample_clocks(g, SeedSpec(5)), 1.0)
    rep = cluster_of(cfg, ORIGIN)
    assert 1 <= rep.size <= g.n_vertices
    assert Box(4).graph().n_vertices == g.n_vertices
