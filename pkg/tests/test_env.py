import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from cdpre.env import (
    ClockField, ConstraintDist, Environment, SeedSpec, resample_edge, sample_clocks,
    sample_environment,
)
from cdpre.lattice import Box, box_region, edge


def test_constraint_dist_validation():
    assert ConstraintDist.parse("0,0,1/2,1/2").rho == (0.0, 0.0, 0.5, 0.5)
    with pytest.raises(ValueError):
        ConstraintDist((0.5, 0.5, 0.1, 0))
    with pytest.raises(ValueError):
        ConstraintDist((-0.1, 0.5, 0.6, 0))
    with pytest.raises(ValueError):
        ConstraintDist((1, 0, 0))
    # sums within 1e-12 are accepted and renormalized
    d = ConstraintDist((0.25, 0.25, 0.25, 0.25 + 5e-13))
    assert math.isclose(sum(d.rho), 1.0, abs_tol=1e-15)


@pytest.mark.parametrize("rho,value", [((0, 0, 0, 1), 3), ((1, 0, 0, 0), 0)])
def test_point_mass_environments(rho, value):
    env = sample_environment(ConstraintDist(rho), box_region(5), SeedSpec(1))
    assert (env.kappa == value).all()


def test_kappa2_frequency_clt():
    graph = Box(64).graph()
    env = sample_environment(ConstraintDist((0, 0, 0.5, 0.5)), graph, SeedSpec(11))
    p = float((env.kappa == 2).mean())
    assert abs(p - 0.5) <= 3 * math.sqrt(0.25 / graph.n_vertices)


def test_clock_reproducibility_and_replicates():
    g = box_region(6)
    a, b = sample_clocks(g, SeedSpec(3, 7)), sample_clocks(g, SeedSpec(3, 7))
    assert np.array_equal(a.u, b.u)
    c = sample_clocks(g, SeedSpec(3, 8))
    assert not np.array_equal(a.u, c.u)
    env1 = sample_environment(ConstraintDist((0.1, 0.2, 0.3, 0.4)), g, SeedSpec(3, 7))
    env2 = sample_environment(ConstraintDist((0.1, 0.2, 0.3, 0.4)), g, SeedSpec(3, 7))
    assert np.array_equal(env1.kappa, env2.kappa)


def test_clock_mean_clt():
    g = Box(353).graph()  # about 10^6 edges
    u = sample_clocks(g, SeedSpec(5)).u
    assert u.min() > 0 and u.max() <= 1
    assert abs(u.mean() - 0.5) <= 3 / math.sqrt(12 * g.n_edges)


def test_resample_edge_contract():
    g = box_region(3)
    clocks = sample_clocks(g, SeedSpec(2))
    e = edge((0, 0), (1, 0))
    new = resample_edge(clocks, e, SeedSpec(2, 0))
    diff = np.nonzero(new.u != clocks.u)[0]
    assert list(diff) == [g.eid(e)]
    other = resample_edge(clocks, e, SeedSpec(9, 0))
    assert other[e] != new[e]


def test_resampled_clock_is_uniform():
    g = box_region(1)
    clocks = sample_clocks(g, SeedSpec(0))
    e = g.edges[0]
    draws = np.array([resample_edge(clocks, e, SeedSpec(4, i))[e] for i in range(100_000)])
    res = stats.kstest(draws, "uniform")
    assert res.statistic < 1.63 / math.sqrt(len(draws))  # 1% critical value


def test_streams_are_independent():
    # pair each vertex constraint with the clock of an edge under the same seed
    g = box_region(1)
    m = g.n_vertices
    kap, high = [], []
    for i in range(100_000 // m + 1):
        spec = SeedSpec(21, i)
        kap.append(sample_environment(ConstraintDist((0.25,) * 4), g, spec).kappa)
        high.append(sample_clocks(g, spec).u[:m] > 0.5)
    table = np.zeros((4, 2))
    np.add.at(table, (np.concatenate(kap), np.concatenate(high).astype(int)), 1)
    assert stats.chi2_contingency(table).pvalue > 0.01


def test_seedspec_validation():
    with pytest.raises(ValueError):
        SeedSpec(1, 0, "weather")
    with pytest.raises(ValueError):
        SeedSpec(-1)


@given(st.integers(0, 2**32), st.integers(0, 1000))
def test_serialization_roundtrip(seed, idx):
    g = box_region(1)
    spec = SeedSpec(seed, idx)
    env = sample_environment(ConstraintDist((0.1, 0.2, 0.3, 0.4)), g, spec)
    assert np.array_equal(Environment.loads(env.dumps()).kappa, env.kappa)
    clocks = sample_clocks(g, spec)
    assert np.array_equal(ClockField.loads(clocks.dumps()).u, clocks.u)


def test_clockfield_rejects_zero():
    g = box_region(1)
    u = np.full(g.n_edges, 0.5)
    u[0] = 0.0
    with pytest.raises(ValueError):
        ClockField(g, u)
