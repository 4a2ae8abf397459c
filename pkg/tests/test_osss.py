import numpy as np
import pytest
from hypothesis import given, strategies as st

from cdpre import _kernels as K
from cdpre.env import ConstraintDist, SeedSpec, sample_clocks
from cdpre.estimate import theta_table
from cdpre.lattice import (
    Box, block_geometry, block_range, edge, exploration_region, external_edge_boundary,
)
from cdpre.osss import (
    Explorer, boundary_connection_frequency, influence_table, osss_check, revealment_table, run_Tk,
)
from cdpre.dynamics import CoverageError, evolve_intermediate
from cdpre.analysis import connects


@pytest.fixture(scope="module")
def ex6():
    return Explorer.for_box(6)


def blocks_meeting_ring(k, n):
    out = []
    for r in block_range(-n, n, 6):
        for s in block_range(-n, n, 5):
            lam = block_geometry(r, s).lam
            if any(max(abs(v.x1), abs(v.x2)) == k for v in lam):
                out.append((r, s))
    return out


def test_guard_faults_on_unrevealed_read():
    g = exploration_region(3)
    u = sample_clocks(g, SeedSpec(0)).u
    revealed = np.zeros(g.n_edges, dtype=np.bool_)
    gblock = g.blocks.edge_gblock
    known = np.zeros(g.blocks.n_blocks, dtype=np.bool_)
    with pytest.raises(K.UnrevealedReadError):
        K._open_guarded(0, u, 0.5, revealed, gblock, known, known)
    revealed[:] = True
    gb = int(np.nonzero(gblock >= 0)[0][0])
    with pytest.raises(K.UnrevealedReadError):
        K._open_guarded(gb, u, 0.5, revealed, gblock, known, known)
    assert K._open_guarded(0, u, 1.0, revealed, gblock, known, known)


@given(st.integers(0, 10**6), st.floats(0.0, 1.0), st.integers(1, 6))
def test_determined_bit_matches_full_information(seed, t, k):
    n = 6
    g = exploration_region(n)
    clocks = sample_clocks(g, SeedSpec(seed))
    bit, state = run_Tk(clocks, t, k, n)
    cfg, _ = evolve_intermediate(clocks, t)
    assert bit == connects(cfg, (0, 0), n)
    assert state.step == len(state.d_set) and state.reads > 0
    # processing order is lexicographic among eligible blocks; every revealed edge
    # belongs to a processed block or its external boundary
    allowed = set()
    for rs in state.d_set:
        lam = block_geometry(*rs).lam
        allowed |= set(block_geometry(*rs).edges) | set(external_edge_boundary(lam))
    assert state.revealed <= allowed


def test_time_zero_reveals_only_ring_blocks(ex6):
    n, k = 6, 3
    u = sample_clocks(ex6.graph, SeedSpec(1)).u
    bit, revealed, *_ = ex6.run(u, 0.0, k)
    assert not bit
    expected = set()
    for rs in blocks_meeting_ring(k, n):
        bg = block_geometry(*rs)
        expected |= set(bg.edges) | set(external_edge_boundary(bg.lam))
    got = {ex6.graph.edges[i] for i in np.nonzero(revealed)[0]}
    assert got == expected


def test_time_one_connects(ex6):
    for i in range(20):
        u = sample_clocks(ex6.graph, SeedSpec(2, i)).u
        assert ex6.run(u, 1.0, 3)[0]


@given(st.integers(0, 10**6), st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(1, 6))
def test_revealed_set_monotone_in_t(seed, s, t, k):
    s, t = min(s, t), max(s, t)
    ex = Explorer.for_box(6)
    u = sample_clocks(ex.graph, SeedSpec(seed)).u
    lo, hi = ex.run(u, s, k)[1], ex.run(u, t, k)[1]
    assert not (lo & ~hi).any()


def test_revealment_table_basics():
    rep = revealment_table(0.0, 4, 30, seed=3)
    assert rep.mismatches == 0 and rep.s_n == 0.0
    d = rep.delta
    assert set(np.unique(d)) <= {0.0, 1.0}
    rep = revealment_table(0.45, 4, 60, seed=3)
    assert rep.mismatches == 0
    assert ((rep.delta >= 0) & (rep.delta <= 1)).all()
    assert rep.beta_hat().shape == (rep.graph.n_edges,)


def test_s_n_consistency_with_theta_table():
    n, reps, t = 6, 150, 0.5
    rep = revealment_table(t, n, reps, seed=11)
    tab = theta_table("intermediate", None, t, range(1, n + 1), reps, seed=11, region=exploration_region(n))
    assert tab.s_n(n) == rep.s_n


def test_revealment_chain_inequality():
    n, reps, t = 12, 300, 0.45
    rep = revealment_table(t, n, reps, seed=5)
    ks = (3, 8)
    edges = [edge((0, 0), (1, 0)), edge((6, 6), (6, 7)), edge((11, -2), (12, -2)), edge((-10, 9), (-9, 9))]
    for k in ks:
        freq = boundary_connection_frequency(t, n, k, edges, reps, seed=5)
        for e, p in zip(edges, freq):
            i = rep.graph.eid(e)
            d = rep.delta[k - 1, i]
            sigma = np.hypot(rep.stderr[k - 1, i], 2 * np.sqrt(p * (1 - p) / reps))
            assert d <= 2 * p + 3 * sigma + 1e-12


def brute_flips(ex, u, t, cands, new):
    f0 = ex.full_information(u, t) >= ex.n
    out = []
    for e, x in zip(cands, new):
        w = u.copy()
        w[e] = x
        out.append((ex.full_information(w, t) >= ex.n) != f0)
    return f0, np.array(out)


def test_influence_kernel_matches_recomputation():
    ex = Explorer.for_box(3)
    cands = ex.influence_candidates()
    for i in range(15):
        u = sample_clocks(ex.graph, SeedSpec(8, i)).u
        new = sample_clocks(ex.graph, SeedSpec(9, i)).u[: len(cands)]
        f0, fl = ex.flips(u, 0.5, cands, new)
        b0, bf = brute_flips(ex, u, 0.5, cands, new)
        assert bool(f0) == b0 and np.array_equal(fl, bf)


def test_non_candidates_never_matter():
    ex = Explorer.for_box(3)
    others = np.setdiff1d(np.arange(ex.graph.n_edges), ex.influence_candidates())
    rng = np.random.default_rng(0)
    for i in range(10):
        u = sample_clocks(ex.graph, SeedSpec(10, i)).u
        pick = rng.choice(others, 30, replace=False)
        _, fl = brute_flips(ex, u, 0.5, pick, rng.random(30) * 0.999 + 0.001)
        assert not fl.any()


def test_influence_examples():
    zero = influence_table(0.0, 4, 40, seed=1)
    assert not zero.inf_hat.any()
    rep = influence_table(0.5, 4, 60, seed=1)
    assert ((rep.inf_hat >= 0) & (rep.inf_hat <= 1)).all()
    cand = np.zeros(rep.graph.n_edges, bool)
    cand[Explorer.for_box(4).influence_candidates()] = True
    assert not rep.inf_hat[~cand].any()
    far = edge((5, 5), (6, 5))
    assert rep.inf_hat[rep.graph.eid(far)] == 0


def test_osss_extremes():
    for t in (0.0, 1.0):
        chk = osss_check(t, 4, 50, seed=2, ks=[2])[2]
        assert chk.variance == 0 and chk.holds
    assert osss_check(0.0, 4, 50, seed=2, ks=[2])[2].rhs == 0


def test_osss_thread_independence():
    a = osss_check(0.45, 5, 300, seed=4, ks=[1, 3], threads=1)
    b = osss_check(0.45, 5, 300, seed=4, ks=[1, 3], threads=2)
    assert {k: c.as_dict() for k, c in a.items()} == {k: c.as_dict() for k, c in b.items()}


def test_explorer_requires_coverage():
    from cdpre.lattice import block_aligned_region

    with pytest.raises(CoverageError):
        Explorer(block_aligned_region(5), 5)
    with pytest.raises(ValueError):
        Explorer.for_box(4).run(np.full(Explorer.for_box(4).graph.n_edges, 0.5), 0.5, 5)
