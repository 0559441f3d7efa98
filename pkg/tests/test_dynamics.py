from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minmax_consensus.graph import Digraph, complete_digraph, cycle_digraph, diameter, random_digraph
from minmax_consensus.neighbor_rules import NeighborRule, build_graph
from minmax_consensus.params import Constant, Listed, ParamSchedule
from minmax_consensus.schedule import GraphSchedule
from minmax_consensus.dynamics import (
    default_max_steps,
    phi,
    read_trace_csv,
    run,
    step,
    trace_from_csv,
    trace_to_csv,
    upsilon,
    write_trace_csv,
)


def test_step_examples():
    np.testing.assert_array_equal(step([0, 1, 2], complete_digraph(3), 0.5, 0.0), [1, 1, 1])
    g = cycle_digraph(4)
    x = np.array([3.0, -1.0, 7.0, 2.0])
    np.testing.assert_array_equal(step(x, g, 0.0, 0.0), [max(3, 2), max(-1, 3), max(7, -1), max(2, 7)])
    np.testing.assert_array_equal(step([4, 0], Digraph(2, [(1, 2)]), 0.25, 0.5), [4, 1])


def test_step_rejects_bad_weights():
    g = complete_digraph(2)
    with pytest.raises(ValueError):
        step([0, 1], g, 0.6, 0.6)
    with pytest.raises(ValueError):
        step([0, 1], g, -0.1, 0.0)
    with pytest.raises(ValueError):
        step([0, 1, 2], g, 0.1, 0.1)


def test_phi_upsilon_examples():
    assert phi([0, 1, 2]) == 2 and phi([3, 3]) == 0 and phi([-3, 5]) == 8
    assert upsilon([0, 0, 1]) == 2 and upsilon([4, 4, 4]) == 1 and upsilon([1, 2, 3, 4]) == 4


def test_run_on_manifold():
    tr = run([2.5] * 4, cycle_digraph(4), ParamSchedule.constant(0.3, 0.3))
    assert tr.finite_time_step == 0 and len(tr) == 1 and tr.consensus_value == 2.5
    assert tr.summary() == "outcome=finite_time k=0 phi=0.0"


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10**6))
def test_max_consensus_fixed_sc_graph(n, seed):
    rng = np.random.default_rng(seed)
    g = random_digraph(n, 0.4, rng)
    g = Digraph(n, set(g.arcs) | set(cycle_digraph(n).arcs))
    x0 = rng.normal(size=n)
    tr = run(x0, g, ParamSchedule.constant(0.0, 0.0))
    assert tr.finite_time_step is not None and tr.finite_time_step <= diameter(g)
    assert tr.consensus_value == x0.max()
    # values only ever relabel: every state is drawn from x0
    assert set(np.unique(tr.states)) <= set(x0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10**6))
def test_averaging_never_finite_time(n, seed):
    rng = np.random.default_rng(seed)
    x0 = rng.normal(size=n)
    # exact arithmetic: float runs without a tolerance stop eventually round Phi to 0
    tr = run(x0, complete_digraph(n), ParamSchedule.constant(0.25, 0.5), max_steps=200, stop_at_tol=False, exact=True)
    assert tr.finite_time_step is None


def test_stop_rules():
    p = ParamSchedule.constant(0.3, 0.3)
    tr = run([0.0, 1.0, 2.0], complete_digraph(3), p, tol=1e-3)
    assert tr.outcome == "asymptotic" and tr.final_phi <= 1e-3
    assert tr.consensus_value == pytest.approx((tr.h[-1] + tr.H[-1]) / 2)
    tr = run([0.0, 1.0, 2.0], complete_digraph(3), p, max_steps=2)
    assert tr.outcome == "budget_exhausted" and tr.steps == 2 and tr.consensus_value is None
    assert default_max_steps(5) == 250
    with pytest.raises(ValueError):
        run([0, 1], complete_digraph(2), p, tol=0)
    with pytest.raises(ValueError):
        run([0, np.inf], complete_digraph(2), p)


def test_schedule_and_rule_topologies():
    s = GraphSchedule.periodic([Digraph(2, [(1, 2)]), Digraph(2, [(2, 1)])])
    tr = run([1.0, 0.0], s, ParamSchedule.constant(0.0, 0.0))
    assert tr.finite_time_step == 1 and tr.consensus_value == 1.0
    tr = run([0.0, 1.0, 3.0], NeighborRule("nearest_neighbor", 1), ParamSchedule.constant(0.0, 0.0))
    assert tr.consensus_value == 3.0


def test_run_k0_offsets_parameters():
    p = ParamSchedule(Listed((0.0, 0.5)), Constant(0.0))
    tr = run([0.0, 2.0], complete_digraph(2), p, k0=1, max_steps=1)
    np.testing.assert_array_equal(tr.states[1], [1.0, 1.0])
    assert tr.times.tolist() == [1, 2]


def fraction_run(x0, rule, alpha, eta, steps):
    """Oracle: the same update in rational arithmetic over explicit graphs."""
    x = [Fraction(float(v)) for v in x0]
    a, e = Fraction(alpha), Fraction(eta)
    out = [list(x)]
    for _ in range(steps):
        g = build_graph(rule, [float(v) for v in x]) if all(
            float(u) != float(v) or u == v for u in x for v in x
        ) else None
        if g is None:  # floats would merge distinct rationals; oracle stops here
            break
        nb = [[x[j] for j in row] for row in g.in_index]
        x = [e * x[i] + a * min(nb[i]) + (1 - a - e) * max(nb[i]) for i in range(len(x))]
        out.append(list(x))
    return out


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 7), st.integers(1, 3), st.sampled_from(["nearest_neighbor", "nearest_value"]),
       st.sampled_from([(0.5, 0.0), (0.3, 0.0), (0.25, 0.5), (0.1, 0.3)]), st.integers(0, 10**6))
def test_exact_mode_matches_rational_oracle(n, mu, kind, weights, seed):
    rng = np.random.default_rng(seed)
    x0 = rng.permutation(np.arange(n, dtype=float)) + rng.random(n)
    alpha, eta = weights
    rule = NeighborRule(kind, mu)
    tr = run(x0, rule, ParamSchedule.constant(alpha, eta), max_steps=25, exact=True, stop_at_tol=False)
    ref = fraction_run(x0, rule, alpha, eta, tr.steps)
    for t, xs in enumerate(ref):
        np.testing.assert_array_equal(tr.states[t], [float(v) for v in xs])
        assert tr.upsilon[t] == len(set(xs))
        assert tr.phi[t] == float(max(xs) - min(xs))


def test_exact_mode_separates_what_floats_merge():
    """Two values one ulp apart stay distinct in exact mode."""
    x0 = [0.0, 1.0, 1.0 + 2**-52]
    tr = run(x0, complete_digraph(3), ParamSchedule.constant(0.0, 0.5), max_steps=3, exact=True, stop_at_tol=False)
    assert tr.upsilon[0] == 3 and tr.finite_time_step is None


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10**6), st.floats(0.0, 0.5), st.floats(0.0, 0.5), st.booleans())
def test_convexity_trap_and_phi_bound(n, seed, alpha, eta, exact):
    rng = np.random.default_rng(seed)
    graphs = [random_digraph(n, 0.3, rng) for _ in range(3)]
    tr = run(rng.normal(size=n), GraphSchedule.periodic(graphs), ParamSchedule.constant(alpha, eta),
             max_steps=40, stop_at_tol=False, exact=exact)
    # exact states rounded to nearest keep the bounds; float steps may overshoot by rounding
    slack = 0.0 if exact else 4 * np.spacing(np.abs(tr.states).max())
    for t in range(tr.steps):
        assert np.all(tr.states[t + 1] >= tr.h[t] - slack)
        assert np.all(tr.states[t + 1] <= tr.H[t] + slack)
    assert np.all(np.diff(tr.h) >= -slack) and np.all(np.diff(tr.H) <= slack)
    assert np.all(tr.phi >= 0)
    for K in range(len(tr)):
        assert tr.phi[K] >= tr.phi[0] * eta**K - 1e-12 * K * tr.phi[0]


def test_phi_lower_bound_equality_case():
    # n=2 complete, eta=0.9, alpha=0.05: each node moves (1-eta)/2 toward the middle
    tr = run([0.0, 1.0], complete_digraph(2), ParamSchedule.constant(0.05, 0.9), max_steps=30, stop_at_tol=False)
    for K in range(len(tr)):
        assert tr.phi[K] == pytest.approx(0.9**K, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(1, 3), st.sampled_from(["nearest_neighbor", "nearest_value"]), st.integers(0, 10**6))
def test_upsilon_non_increasing_on_rules(n, mu, kind, seed):
    rng = np.random.default_rng(seed)
    tr = run(rng.random(n), NeighborRule(kind, mu), ParamSchedule.constant(0.5, 0.0), max_steps=60, exact=True)
    assert np.all(np.diff(tr.upsilon) <= 0)


@pytest.mark.parametrize("wide", [False, True])
def test_trace_csv_round_trip(tmp_path, wide):
    tr = run([0.1, 0.7, 0.3], cycle_digraph(3), ParamSchedule.constant(0.0, 0.0))
    text = trace_to_csv(tr, wide=wide)
    assert text.splitlines()[0].startswith("k,h,H,Phi,Upsilon")
    back = trace_from_csv(text)
    np.testing.assert_array_equal(back.phi, tr.phi)
    np.testing.assert_array_equal(back.h, tr.h)
    np.testing.assert_array_equal(back.upsilon, tr.upsilon)
    assert back.finite_time_step == tr.finite_time_step
    if wide:
        np.testing.assert_array_equal(back.states, tr.states)
    assert trace_to_csv(back, wide=wide) == text
    write_trace_csv(tr, tmp_path / "t.csv", wide=wide)
    assert (tmp_path / "t.csv").read_text() == text
    assert read_trace_csv(tmp_path / "t.csv").steps == tr.steps


def test_trace_csv_keeps_underflowed_spread_distinct():
    # exact spread falls below the smallest float long before agreement could happen
    tr = run([0.0, 1.0], complete_digraph(2), ParamSchedule.constant(0.0, 0.25), max_steps=600,
             stop_at_tol=False, exact=True)
    assert tr.phi[-1] == 0.0 and tr.finite_time_step is None and tr.upsilon[-1] == 2
    assert trace_from_csv(trace_to_csv(tr)).finite_time_step is None


def test_trace_csv_errors():
    with pytest.raises(ValueError, match="line 1"):
        trace_from_csv("a,b\n")
    with pytest.raises(ValueError, match="line 3"):
        trace_from_csv("k,h,H,Phi,Upsilon\n0,0,1,1,2\n1,x,1,1,2\n")


def test_larger_mu_can_spread_more_from_tied_states():
    """More neighbors does not always mean a smaller spread once values tie.

    Checked against ``oracle_phi`` below, which works on values only, so no
    tie policy is involved.
    """
    x0 = [9.0, 2.0, 7.0, 6.0, 5.0, 6.0, 6.0, 2.0, 8.0, 7.0]
    p = ParamSchedule.constant(0.75, 0.0)
    phis = {mu: run(x0, NeighborRule("nearest_neighbor", mu), p, max_steps=3, stop_at_tol=False,
                    exact=True).phi for mu in (2, 3)}
    assert phis[2][3] == 27 / 16 == oracle_phi(x0, 2, Fraction(3, 4), 3)
    assert phis[3][3] == 57 / 32 == oracle_phi(x0, 3, Fraction(3, 4), 3)
    assert phis[2][3] < phis[3][3]


def oracle_phi(x0, mu, alpha, steps):
    x = [Fraction(v) for v in x0]
    for _ in range(steps):
        nxt = []
        for xi in x:
            below = sorted((v for v in x if v < xi), reverse=True)
            above = sorted(v for v in x if v > xi)
            lo = below[min(mu, len(below)) - 1] if below else xi
            hi = above[min(mu, len(above)) - 1] if above else xi
            nxt.append(alpha * lo + (1 - alpha) * hi)
        x = nxt
    return float(max(x) - min(x))
