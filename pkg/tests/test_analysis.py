import math

import numpy as np
import pytest

from minmax_consensus.analysis import (
    ConditionVerdict,
    SweepReport,
    SpreadCertificate,
    UndecidableError,
    certify_positive_spread,
    check_block_product_condition,
    check_contraction_eq6,
    check_convexity_trap,
    check_max_step_bounds,
    check_nearest_value_cascade,
    check_order_preservation,
    check_phi_lower_bound,
    check_reduced_dynamics,
    check_thm2_necessary,
    check_thm8_hypotheses,
    check_unique_extremes_preserved,
    generic_initial_state,
    max_step_bound,
    reduced_step_mu1,
    threshold_sweep,
    two_block_initial_state,
    verdicts_from_json,
    verdicts_to_json,
)
from minmax_consensus.dynamics import RunTrace, run
from minmax_consensus.graph import Digraph, complete_digraph, cycle_digraph, path_digraph, random_digraph
from minmax_consensus.schedule import GraphSchedule
from minmax_consensus.neighbor_rules import NeighborRule
from minmax_consensus.params import Constant, Geometric, Listed, OneMinus, ParamSchedule, Power

P = ParamSchedule


def fake_trace(phis, params=None, finite=None):
    phis = np.asarray(phis, dtype=float)
    return RunTrace(None, np.zeros_like(phis), phis, phis, np.full(phis.size, 2),
                    finite_time_step=finite, params=params)


# -- Phi lower bound -------------------------------------------------------------

def test_phi_lower_bound_examples():
    amax = P.constant(0.0, 0.0)
    tr = run([0.0, 3.0, 1.0], cycle_digraph(3), amax)
    assert check_phi_lower_bound(tr, amax)

    p = P.constant(0.05, 0.9)
    tr = run([0.0, 1.0], complete_digraph(2), p, max_steps=40, stop_at_tol=False)
    assert check_phi_lower_bound(tr, p)

    bad = fake_trace([1.0, 0.9, 0.81, 0.5], P.constant(0.0, 0.9))
    assert not check_phi_lower_bound(bad, P.constant(0.0, 0.9))


# -- inertia deficit series ---------------------------------------------------------

def test_inertia_series_examples():
    assert check_thm2_necessary(P.constant(0.25, 0.5)).result == "holds"
    v = check_thm2_necessary(P(Constant(0.0), OneMinus(Power(1.0, 2.0))), k0=1)
    assert v.result == "fails" and "impossible" in v.detail
    assert check_thm2_necessary(P(Constant(0.0), Listed((0.5, 0.9)))).result == "undecidable"


@pytest.mark.parametrize("p, expected", [(0.5, "holds"), (1.0, "holds"), (1.5, "fails"), (3.0, "fails")])
def test_inertia_series_power_threshold(p, expected):
    params = P(Constant(0.0), OneMinus(Power(0.5, p)))
    assert check_thm2_necessary(params).result == expected


def test_inertia_series_geometric_and_precondition():
    assert check_thm2_necessary(P(Constant(0.0), OneMinus(Geometric(0.5, 0.5)))).result == "fails"
    with pytest.raises(ValueError):
        check_thm2_necessary(P.constant(0.5, 0.0))


# -- block products -----------------------------------------------------------------

def estimated_block_exponent(a, L, s_lo=2_000, s_hi=20_000):
    """Oracle: slope of -log(block product) against log(s), from summed logs."""
    def log_block(s):
        return sum(math.log(a(k)) for k in range(s * L, (s + 1) * L))
    return -(log_block(s_hi) - log_block(s_lo)) / (math.log(s_hi) - math.log(s_lo))


def test_block_product_examples():
    v = check_block_product_condition(P.constant(0.3, 0.0), 4, 1, "eq20")
    assert v.result == "holds" and v.block_length == 9

    v = check_block_product_condition(P(Power(1.0, 1.0), Constant(0.0)), 4, 1, "eq20")
    assert v.result == "fails"
    assert estimated_block_exponent(lambda k: (k + 1) ** -1.0, 9) == pytest.approx(9, rel=1e-3)

    L = 9
    params = P(Power(1.0, 1 / (2 * L)), Constant(0.0))
    v = check_block_product_condition(params, 4, 1, "eq20")
    assert v.result == "holds"
    slope = estimated_block_exponent(params.alpha, L)
    assert slope == pytest.approx(0.5, rel=1e-3) and slope <= 1


@pytest.mark.parametrize("n, B, p", [(3, 1, 0.2), (3, 2, 0.2), (5, 1, 0.05), (4, 2, 0.1)])
def test_block_verdict_agrees_with_oracle(n, B, p):
    params = P(Power(0.9, p), Constant(0.0))
    L = (n - 1) ** 2 * B
    v = check_block_product_condition(params, n, B, "eq20")
    slope = estimated_block_exponent(params.alpha, L)
    assert slope == pytest.approx(p * L, rel=1e-2)
    assert v.result == ("holds" if slope <= 1 + 1e-6 else "fails")


def test_block_product_other_variants():
    # 1 - alpha - eta: constant 0.5 holds; alpha + eta = 1 vanishes
    assert check_block_product_condition(P.constant(0.2, 0.3), 4, 1, "eq21").result == "holds"
    assert check_block_product_condition(P.constant(0.3, 0.7), 4, 1, "eq21").result == "fails"
    # eta = 1 - (k+1)^-p, alpha = 0: 1 - alpha - eta = (k+1)^-p
    params = P(Constant(0.0), OneMinus(Power(1.0, 0.1)))
    assert check_block_product_condition(params, 3, 1, "eq21").result == "holds"  # pL = 0.4
    assert check_block_product_condition(params, 5, 1, "eq21").result == "fails"  # pL = 1.6
    # the strongly connected block is shorter: L = (n-1)B = 4, pL = 0.4
    v = check_block_product_condition(params, 5, 1, "thm5_eq")
    assert v.result == "holds" and v.block_length == 4


def test_block_product_geometric_and_lists():
    assert check_block_product_condition(P(Geometric(0.5, 0.9), Constant(0.0)), 3, 1, "eq20").result == "fails"
    v = check_block_product_condition(P(Listed((0.5, 0.4)), Constant(0.0)), 3, 1, "eq20")
    assert v.result == "undecidable" and "partial sum" in v.detail
    with pytest.raises(ValueError):
        check_block_product_condition(P.constant(0.3, 0.0), 2, 1, "eq20")
    with pytest.raises(ValueError):
        check_block_product_condition(P.constant(0.3, 0.0), 3, 1, "eq99")


def test_constant_verdicts_never_undecidable():
    for a in (0.0, 0.1, 0.5, 1.0):
        for e in (0.0, 0.3):
            if a + e > 1:
                continue
            for variant in ("eq20", "eq21", "thm5_eq"):
                assert check_block_product_condition(P.constant(a, e), 4, 2, variant).result != "undecidable"


def test_verdict_json_round_trip():
    vs = [check_block_product_condition(P.constant(0.3, 0.0), 4, 1, "eq20"),
          check_thm2_necessary(P.constant(0.0, 0.5))]
    assert verdicts_from_json(verdicts_to_json(vs)) == vs
    assert ConditionVerdict.from_dict(vs[0].to_dict()) == vs[0]


# -- contraction ---------------------------------------------------------------------

def test_contraction_examples():
    p = P.constant(0.5, 0.5)
    tr = run([0.0, 1.0, 2.0], complete_digraph(3), p, max_steps=60, stop_at_tol=False)
    assert check_contraction_eq6(tr, p, 3, 1)

    done = run([1.0, 1.0, 1.0], complete_digraph(3), p)
    assert check_contraction_eq6(done, p, 3, 1)

    flat = fake_trace([1.0] * 10, P.constant(0.5, 0.5))
    assert not check_contraction_eq6(flat, P.constant(0.5, 0.5), 3, 1)


def test_contraction_short_trace_is_undecidable():
    p = P.constant(0.5, 0.5)
    tr = run([0.0, 1.0, 2.0], complete_digraph(3), p, max_steps=3, stop_at_tol=False)
    with pytest.raises(UndecidableError):
        check_contraction_eq6(tr, p, 3, 1)
    with pytest.raises(ValueError):
        check_contraction_eq6(tr, P.constant(0.5, 0.0), 3, 1)


# -- reduced dynamics -------------------------------------------------------------------

def test_reduced_step_examples():
    np.testing.assert_array_equal(reduced_step_mu1([0, 1, 2], 0.5), [0.5, 1.0, 1.5])
    np.testing.assert_array_equal(reduced_step_mu1([0, 1, 2, 3], 0.5), [0.5, 1.0, 2.0, 2.5])
    np.testing.assert_allclose(reduced_step_mu1([0.0, 1.0, 2.0], 1 - 1e-12), [0.0, 0.0, 1.0], atol=1e-11)
    for bad in ([0, 0, 1], [2, 1, 0], [0, 1]):
        with pytest.raises(ValueError):
            reduced_step_mu1(bad, 0.5)
    with pytest.raises(ValueError):
        reduced_step_mu1([0, 1, 2], 1.0)


def test_reduced_dynamics_on_runs():
    rng = np.random.default_rng(3)
    for _ in range(10):
        tr = run(rng.random(7), NeighborRule("nearest_neighbor", 1), P.constant(0.3, 0.0), max_steps=200)
        assert check_reduced_dynamics(tr)
    with pytest.raises(ValueError):
        check_reduced_dynamics(run(rng.random(4), NeighborRule("nearest_neighbor", 2), P.constant(0.3, 0.0)))


# -- step bounds ---------------------------------------------------------------------------

def test_step_bound_examples():
    x0 = generic_initial_state(10, np.random.default_rng(0))
    tr = run(x0, NeighborRule("nearest_neighbor", 3), P.constant(0.0, 0.0))
    assert max_step_bound(tr.topology, tr.params, 10) == 4
    assert check_max_step_bounds(tr)

    tr = run([0.3, 0.0, 0.9, 0.5], NeighborRule("nearest_value", 2), P.constant(0.5, 0.0), exact=True)
    assert max_step_bound(tr.topology, tr.params, 4) == 3
    assert tr.finite_time_step is not None and check_max_step_bounds(tr)

    tr = run([2.0], NeighborRule("nearest_neighbor", 1), P.constant(0.0, 0.0))
    assert tr.finite_time_step == 0 and check_max_step_bounds(tr)

    g = cycle_digraph(5)
    tr = run(np.arange(5.0), g, P.constant(0.0, 0.0))
    assert check_max_step_bounds(tr) and max_step_bound(g, tr.params, 5) == 4


def test_step_bound_missing_finite_time_is_violation():
    tr = run([0.0, 1.0, 2.0], cycle_digraph(3), P.constant(0.0, 0.0), max_steps=1)
    assert tr.finite_time_step is None
    assert not check_max_step_bounds(tr)


def test_step_bound_without_applicable_result():
    tr = run([0.0, 1.0, 2.0], path_digraph(3), P.constant(0.0, 0.0))
    with pytest.raises(ValueError):
        check_max_step_bounds(tr)
    tr = run([0.0, 1.0, 2.0], NeighborRule("nearest_neighbor", 1), P.constant(0.5, 0.0))
    with pytest.raises(ValueError):
        check_max_step_bounds(tr)


# -- state-dependent claims ----------------------------------------------------------------

def test_unique_extremes_examples():
    rng = np.random.default_rng(0)
    tr = run(generic_initial_state(5, rng), NeighborRule("nearest_neighbor", 1), P.constant(0.5, 0.0))
    assert check_unique_extremes_preserved(tr)
    tr = run([0.0, 0.0, 1.0, 2.0, 2.0], NeighborRule("nearest_neighbor", 1), P.constant(0.5, 0.0))
    assert check_unique_extremes_preserved(tr)
    tr = run([0.0, 1.0, 2.0], NeighborRule("nearest_neighbor", 2), P.constant(0.5, 0.0))
    with pytest.raises(ValueError):
        check_unique_extremes_preserved(tr)


def test_order_and_trap_checkers_catch_fabrications():
    good = run([0.0, 0.4, 1.0], NeighborRule("nearest_neighbor", 1), P.constant(0.5, 0.0))
    assert check_order_preservation(good) and check_convexity_trap(good)
    states = np.array([[0.0, 1.0], [1.0, 0.5]])
    bad = RunTrace(states, states.min(1), states.max(1), np.ptp(states, 1), np.array([2, 2]))
    assert not check_order_preservation(bad)
    states = np.array([[0.0, 1.0], [0.5, 1.5]])
    bad = RunTrace(states, states.min(1), states.max(1), np.ptp(states, 1), np.array([2, 2]))
    assert not check_convexity_trap(bad)


def test_cascade_on_small_runs():
    rng = np.random.default_rng(5)
    for mu in (1, 2, 3):
        for _ in range(10):
            tr = run(generic_initial_state(2 * mu, rng), NeighborRule("nearest_value", mu),
                     P.constant(0.5, 0.0), exact=True)
            assert check_nearest_value_cascade(tr)


def test_min_weight_hypotheses():
    v = check_thm8_hypotheses(P.constant(0.5, 0.0))
    assert v.result == "holds" and "monotone=True" in v.detail
    v = check_thm8_hypotheses(P(Listed((0.5, 0.2, 0.7)), Constant(0.0)))
    assert v.result == "holds" and "monotone=False" in v.detail and "eps_separated=True" in v.detail
    v = check_thm8_hypotheses(P(Power(0.5, 1.0), Constant(0.0)))
    assert "monotone=True" in v.detail
    with pytest.raises(ValueError):
        check_thm8_hypotheses(P.constant(0.0, 0.0))


def test_two_block_initial_state():
    g = Digraph(4, [(1, 2), (3, 4)])
    x0 = two_block_initial_state(g)
    tr = run(x0, g, P.constant(0.3, 0.3), max_steps=300, stop_at_tol=False)
    assert tr.phi.min() >= 1
    with pytest.raises(ValueError):
        two_block_initial_state(path_digraph(3))


def test_generic_initial_state_gaps():
    x = generic_initial_state(50, np.random.default_rng(1))
    assert np.diff(np.sort(x)).min() >= 1e-3


# -- sweep -----------------------------------------------------------------------------------

def test_sweep_examples():
    rep = threshold_sweep(range(3, 6), [3], "nearest_neighbor", P.constant(0.5, 0.0), 3, 10_000)
    grid = rep.grid()
    assert all(r.outcome == "finite_time" for n in (3, 4) for r in grid[(3, n)])
    assert all(r.outcome == "asymptotic_only" for r in grid[(3, 5)])
    assert rep.thresholds[3] == 4 == rep.expected[3]

    rep = threshold_sweep(range(5, 8), [3], "nearest_value", P.constant(0.5, 0.0), 3, 1000)
    assert rep.thresholds[3] == 6 == rep.expected[3]
    assert len(rep.rows) == 9  # total coverage


def test_sweep_is_independent_of_workers():
    args = (range(3, 7), [1, 2], "nearest_value", P.constant(0.5, 0.0), 2, 500)
    assert threshold_sweep(*args, workers=1).to_csv() == threshold_sweep(*args, workers=2).to_csv()


def test_sweep_csv_round_trip():
    rep = threshold_sweep(range(3, 6), [1, 2], "nearest_neighbor", P.constant(0.5, 0.0), 2, 2000)
    text = rep.to_csv()
    assert text.splitlines()[0] == "rule,mu,n,trial,outcome,T_star,phi_final,steps_used"
    back = SweepReport.from_csv(text)
    assert back.rows == rep.rows and back.thresholds == rep.thresholds
    assert back.to_csv() == text


def test_sweep_preconditions():
    with pytest.raises(ValueError):
        threshold_sweep([3], [1], "nearest_value", P.constant(0.5, 0.0), 0, 10)
    with pytest.raises(ValueError):
        threshold_sweep([3], [1], "nearest_value", P.constant(0.5, 0.2), 1, 10)
    with pytest.raises(ValueError):
        threshold_sweep([3], [1], "radius", P.constant(0.5, 0.0), 1, 10)


# -- certified spread ---------------------------------------------------------------

RING_CHORD = Digraph(6, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 1), (1, 4)])


def test_certificate_examples():
    c = certify_positive_spread(np.arange(6.0), RING_CHORD, P.constant(0.3, 0.0), 300)
    assert c.certified and c.failed_at is None
    # max-consensus on the ring reaches agreement, so no proof exists
    c = certify_positive_spread(np.arange(6.0), RING_CHORD, P.constant(0.0, 0.0), 300)
    assert not c.certified and c.failed_at == 3
    # complete graph: any alpha gives one-step agreement
    c = certify_positive_spread([0.0, 1.0, 2.0], complete_digraph(3), P.constant(0.3, 0.0), 10)
    assert c == SpreadCertificate(False, 10, c.precision_bits, 1)
    assert not certify_positive_spread([1.0, 1.0], complete_digraph(2), P.constant(0.3, 0.0), 5).certified


def test_certificate_rejects_rules():
    with pytest.raises(ValueError):
        certify_positive_spread([0.0, 1.0, 2.0], NeighborRule("nearest_value", 1), P.constant(0.5, 0.0), 5)


@pytest.mark.parametrize("seed", range(25))
def test_certificate_agrees_with_exact_runs(seed):
    """A certificate is never issued for a run that reaches exact agreement."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    graphs = [random_digraph(n, 0.4, rng) for _ in range(2)]
    sched = GraphSchedule.periodic(graphs)
    alpha = float(rng.choice([0.0, 0.25, 0.3, 0.5]))
    eta = float(rng.choice([0.0, 0.125, 0.2]))
    p = P.constant(alpha, eta)
    x0 = rng.integers(0, 4, size=n).astype(float)
    tr = run(x0, sched, p, max_steps=60, exact=True, stop_at_tol=False)
    c = certify_positive_spread(x0, sched, p, tr.steps)
    if c.certified:
        assert tr.finite_time_step is None
    else:
        # the fixed-point run only fails where the exact spread is zero
        assert tr.finite_time_step is not None and c.failed_at >= tr.finite_time_step
