"""Checkers for the convergence bounds and conditions, plus experiments.

Checkers that read a :class:`~minmax_consensus.dynamics.RunTrace` return a
plain ``bool``. Checkers that decide a property of an infinite parameter
sequence return a :class:`ConditionVerdict`, because the answer may be
``undecidable`` for data given only as a finite list.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Literal

import numpy as np

from .graph import (
    Digraph,
    diameter,
    is_quasi_strongly_connected,
    is_strongly_connected,
    source_components,
)
from .neighbor_rules import NeighborRule
from .params import (
    Constant,
    Geometric,
    Listed,
    OneMinus,
    ParamSchedule,
    Power,
    Sequence,
    algorithm_class,
    in_class,
)
from .schedule import GraphSchedule
from .dynamics import RunTrace, run

__all__ = [
    "ConditionVerdict",
    "UndecidableError",
    "SweepRow",
    "SweepReport",
    "check_phi_lower_bound",
    "check_thm2_necessary",
    "check_block_product_condition",
    "check_contraction_eq6",
    "check_thm8_hypotheses",
    "reduced_step_mu1",
    "check_reduced_dynamics",
    "check_max_step_bounds",
    "max_step_bound",
    "check_unique_extremes_preserved",
    "SpreadCertificate",
    "certify_positive_spread",
    "check_order_preservation",
    "check_convexity_trap",
    "check_upsilon_monotone",
    "check_nearest_value_cascade",
    "two_block_initial_state",
    "generic_initial_state",
    "threshold_sweep",
    "verdicts_to_json",
    "verdicts_from_json",
]

Result = Literal["holds", "fails", "undecidable"]

# coefficients below this are treated as cancelled float noise
_COEF_EPS = 1e-12


class UndecidableError(ValueError):
    """The supplied data cannot settle the question asked."""


@dataclass(frozen=True)
class ConditionVerdict:
    condition: str
    result: Result
    block_length: int | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ConditionVerdict":
        return cls(d["condition"], d["result"], d.get("block_length"), d.get("detail", ""))


def verdicts_to_json(verdicts: Iterable[ConditionVerdict]) -> str:
    return json.dumps([v.to_dict() for v in verdicts], indent=2) + "\n"


def verdicts_from_json(text: str) -> list[ConditionVerdict]:
    data = json.loads(text)
    if isinstance(data, dict):
        data = [data]
    return [ConditionVerdict.from_dict(d) for d in data]


# -- asymptotic forms of parameter sequences ---------------------------------
#
# A sequence is expanded, for large k, as  sum_p c_p (k+1)^(-p)  plus a list of
# geometric terms c r^k with r < 1. Listed data has no expansion.

@dataclass
class _Expansion:
    powers: dict[float, float] = field(default_factory=dict)
    geoms: list[tuple[float, float]] = field(default_factory=list)

    def __add__(self, other: "_Expansion") -> "_Expansion":
        powers = dict(self.powers)
        for p, c in other.powers.items():
            powers[p] = powers.get(p, 0.0) + c
        return _Expansion(powers, self.geoms + other.geoms)

    def __neg__(self) -> "_Expansion":
        return _Expansion({p: -c for p, c in self.powers.items()}, [(-c, r) for c, r in self.geoms])

    def __sub__(self, other: "_Expansion") -> "_Expansion":
        return self + (-other)

    def leading(self) -> tuple[str, float, float] | None:
        """``("power", p, c)`` or ``("geom", r, c)`` for the dominant term, ``None`` if zero."""
        live = {p: c for p, c in self.powers.items() if abs(c) > _COEF_EPS}
        if live:
            p = min(live)
            return ("power", p, live[p])
        geoms = [(c, r) for c, r in self.geoms if abs(c) > _COEF_EPS and r > 0]
        if geoms:
            r = max(r for _, r in geoms)
            c = sum(c for c, rr in geoms if rr == r)
            if abs(c) > _COEF_EPS:
                return ("geom", r, c)
        return None


def _expand(seq: Sequence) -> _Expansion | None:
    if isinstance(seq, Constant):
        return _Expansion({0.0: seq.value})
    if isinstance(seq, Power):
        return _Expansion({seq.p: seq.c} if seq.c else {})
    if isinstance(seq, Geometric):
        if seq.r == 1:
            return _Expansion({0.0: seq.c})
        if seq.r > 1:
            return None
        return _Expansion({}, [(seq.c, seq.r)])
    if isinstance(seq, OneMinus):
        inner = _expand(seq.inner)
        return None if inner is None else _Expansion({0.0: 1.0}) - inner
    return None


def _describe(seq: Sequence) -> str:
    if isinstance(seq, Constant):
        return f"{seq.value!r}"
    if isinstance(seq, Power):
        return f"{seq.c!r}*(k+1)^(-{seq.p!r})"
    if isinstance(seq, Geometric):
        return f"{seq.c!r}*{seq.r!r}^k"
    if isinstance(seq, OneMinus):
        return f"1 - ({_describe(seq.inner)})"
    if isinstance(seq, Listed):
        return f"list[{len(seq.values)}]"
    return repr(seq)


def _partial_block_sums(a, L: int, blocks: int = 200) -> float:
    total = 0.0
    for s in range(blocks):
        total += math.prod(a(k) for k in range(s * L, (s + 1) * L))
    return total


def check_thm2_necessary(params: ParamSchedule, k0: int = 0) -> ConditionVerdict:
    """Is ``sum_k (1 - eta_k)`` infinite?

    ``holds``: the necessary condition for asymptotic consensus is met.
    ``fails``: the series converges, so consensus is impossible from any
    state off the consensus manifold.
    """
    if not in_class(params, "A_ave", k0):
        raise ValueError(f"parameters are not an averaging algorithm (eta_k in (0, 1]) for k >= {k0}")
    name = "thm2_necessary"
    desc = f"eta_k = {_describe(params.eta)}"
    exp = _expand(params.eta)
    if exp is None:
        partial = sum(1 - params.eta(k) for k in range(k0, k0 + 10_000))
        return ConditionVerdict(
            name, "undecidable", None,
            f"{desc}: finite data; partial sum of (1 - eta_k) over 10^4 terms = {partial!r}",
        )
    lead = (_Expansion({0.0: 1.0}) - exp).leading()
    if lead is None or lead[0] == "geom":
        return ConditionVerdict(name, "fails", None, f"{desc}: sum of (1 - eta_k) converges; consensus impossible off the manifold")
    _, p, c = lead
    if p == 0:
        return ConditionVerdict(name, "holds", None, f"{desc}: 1 - eta_k -> {c!r} > 0, series diverges")
    if p <= 1:
        return ConditionVerdict(name, "holds", None, f"{desc}: 1 - eta_k ~ {c!r} k^-{p!r} with p <= 1, series diverges")
    return ConditionVerdict(name, "fails", None, f"{desc}: 1 - eta_k ~ {c!r} k^-{p!r} with p > 1, series converges; consensus impossible off the manifold")


def _block_verdict(name: str, a_exp: _Expansion | None, a_fn, L: int, desc: str) -> ConditionVerdict:
    if a_exp is None:
        return ConditionVerdict(name, "undecidable", L, f"{desc}: finite data; partial sum over 200 blocks = {_partial_block_sums(a_fn, L)!r}")
    lead = a_exp.leading()
    if lead is None:
        return ConditionVerdict(name, "fails", L, f"{desc}: sequence vanishes, block products sum to a finite value")
    kind, q, c = lead
    if c < 0:
        return ConditionVerdict(name, "undecidable", L, f"{desc}: sequence is eventually negative, not a valid weight")
    if kind == "geom":
        return ConditionVerdict(name, "fails", L, f"{desc}: geometric decay (r={q!r}), block products are summable")
    if q == 0:
        return ConditionVerdict(name, "holds", L, f"{desc}: terms tend to {c!r} > 0, block products bounded below")
    pl = q * L
    verdict = "holds" if pl <= 1 else "fails"
    rel = "<=" if pl <= 1 else ">"
    return ConditionVerdict(name, verdict, L, f"{desc}: block product ~ s^(-{pl!r}) with pL {rel} 1")


def check_block_product_condition(
    params: ParamSchedule,
    n: int,
    B: int,
    variant: Literal["eq20", "eq21", "thm5_eq"] = "eq20",
) -> ConditionVerdict:
    """Divergence of the sum over length-``L`` blocks of products of weights.

    ``eq20`` uses ``alpha_k`` and ``eq21`` uses ``1 - alpha_k - eta_k``, both with
    ``L = (n-1)^2 B`` (uniformly jointly quasi-strongly connected graphs).
    ``thm5_eq`` uses ``L = (n-1) B`` (uniformly jointly strongly connected) and
    holds if either weight sequence gives a divergent sum.
    """
    if n < 3 or B < 1:
        raise ValueError("need n >= 3 and B >= 1")
    a_alpha = _expand(params.alpha)
    a_eta = _expand(params.eta)
    a_rest = None if a_alpha is None or a_eta is None else _Expansion({0.0: 1.0}) - a_alpha - a_eta

    def alpha_fn(k):
        return params.alpha(k)

    def rest_fn(k):
        return max(1.0 - params.alpha(k) - params.eta(k), 0.0)

    if variant == "eq20":
        L = (n - 1) ** 2 * B
        return _block_verdict("eq20", a_alpha, alpha_fn, L, f"alpha_k = {_describe(params.alpha)}")
    if variant == "eq21":
        L = (n - 1) ** 2 * B
        return _block_verdict("eq21", a_rest, rest_fn, L, f"1 - alpha_k - eta_k with alpha_k = {_describe(params.alpha)}, eta_k = {_describe(params.eta)}")
    if variant == "thm5_eq":
        L = (n - 1) * B
        va = _block_verdict("thm5_eq", a_alpha, alpha_fn, L, "alpha_k")
        vr = _block_verdict("thm5_eq", a_rest, rest_fn, L, "1 - alpha_k - eta_k")
        if "holds" in (va.result, vr.result):
            result = "holds"
        elif "undecidable" in (va.result, vr.result):
            result = "undecidable"
        else:
            result = "fails"
        return ConditionVerdict("thm5_eq", result, L, f"{va.detail}; {vr.detail}")
    raise ValueError(f"unknown variant {variant!r}")


def check_thm8_hypotheses(params: ParamSchedule) -> ConditionVerdict:
    """Report which sufficient hypothesis for asymptotic consensus under
    nearest-neighbor graphs the ``alpha`` sequence meets: monotone, or bounded
    away from 0 or from 1 (``alpha_k >= eps`` for all k, or ``alpha_k <= 1 - eps``
    for all k).
    """
    if not in_class(params, "A_ave_star"):
        raise ValueError("parameters are not in A_ave_star (eta = 0, alpha in (0, 1))")
    b = params.alpha.bounds(0)
    monotone = params.alpha.monotone()
    separated = b.inf > 0 or b.sup < 1
    met = [name for name, ok in (("monotone", monotone), ("eps_separated", separated)) if ok]
    detail = f"monotone={monotone}, eps_separated={separated} (inf={b.inf!r}, sup={b.sup!r})"
    return ConditionVerdict("thm8_iii", "holds" if met else "undecidable", None, detail)


# -- trace checkers ------------------------------------------------------------

def check_phi_lower_bound(trace: RunTrace, params: ParamSchedule) -> bool:
    """``Phi(K) >= Phi(0) * prod_{k<K} eta_k`` at every recorded step."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    phi0 = float(trace.phi[0])
    prod = 1.0
    for t in range(1, len(trace)):
        prod *= params.eta(trace.k0 + t - 1)
        slack = 1e-12 * t * phi0
        if trace.phi[t] < phi0 * prod - slack:
            return False
    return True


def check_contraction_eq6(trace: RunTrace, params: ParamSchedule, n: int, B: int) -> bool:
    """Block contraction ``Phi(s+L) <= (1 - prod alpha / 2) Phi(s)`` with
    ``L = (n-1)^2 B`` on blocks aligned at the start of the trace.

    A trace that ended in exact consensus is extended by zeros. A trace
    shorter than one block otherwise raises :class:`UndecidableError`.
    """
    if not in_class(params, "A_ave", trace.k0):
        raise ValueError("the contraction estimate is stated for averaging algorithms")
    L = (n - 1) ** 2 * B
    phi = np.asarray(trace.phi, dtype=float)
    scale = np.abs(np.asarray(trace.h)) + np.abs(np.asarray(trace.H)) + phi
    ended = trace.finite_time_step is not None
    if not ended and trace.steps < L:
        raise UndecidableError(f"trace has {trace.steps} steps, one block needs {L}")
    last_start = trace.steps if ended else trace.steps - L
    for start in range(0, last_start + 1, L):
        end = start + L
        later = phi[end] if end < len(phi) else 0.0
        prod = math.prod(params.alpha(trace.k0 + k) for k in range(start, end))
        bound = (1 - prod / 2) * phi[start] + 1e-12 * L * scale[start]
        if later > bound:
            return False
    return True


def reduced_step_mu1(y, alpha: float) -> np.ndarray:
    """One step of the sorted distinct values under the mu = 1 nearest-neighbor rule."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 3:
        raise ValueError("need at least three distinct values")
    if np.any(np.diff(y) <= 0):
        raise ValueError("values must be strictly increasing")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    rest = 1.0 - alpha
    out = np.empty_like(y)
    out[0] = alpha * y[0] + rest * y[1]
    out[1:-1] = alpha * y[:-2] + rest * y[2:]
    out[-1] = alpha * y[-2] + rest * y[-1]
    return out


def _require_states(trace: RunTrace) -> np.ndarray:
    if trace.states is None:
        raise ValueError("this check needs a trace with states")
    return trace.states


def check_reduced_dynamics(trace: RunTrace) -> bool:
    """The distinct values of each next state equal the reduced map applied to
    the current distinct values, bit for bit, whenever there are at least three."""
    states = _require_states(trace)
    rule = trace.topology
    if not (isinstance(rule, NeighborRule) and rule.kind == "nearest_neighbor" and rule.mu == 1):
        raise ValueError("reduced dynamics describe the mu = 1 nearest-neighbor rule")
    for t in range(len(states) - 1):
        y = np.unique(states[t])
        if y.size < 3:
            continue
        alpha, eta = trace.params(trace.k0 + t)
        if eta != 0:
            raise ValueError("reduced dynamics need eta = 0")
        pred = np.unique(reduced_step_mu1(y, alpha))
        if not np.array_equal(pred, np.unique(states[t + 1])):
            return False
    return True


def check_order_preservation(trace: RunTrace) -> bool:
    """Equal values stay equal and strict order never reverses, step to step."""
    states = _require_states(trace)
    for t in range(len(states) - 1):
        order = np.argsort(states[t], kind="stable")
        cur, nxt = states[t][order], states[t + 1][order]
        if np.any(np.diff(nxt) < 0):
            return False
        same = np.diff(cur) == 0
        if np.any(np.diff(nxt)[same] != 0):
            return False
    return True


def check_convexity_trap(trace: RunTrace) -> bool:
    """Every next value lies in ``[h(k), H(k)]``; h never decreases, H never increases."""
    states = _require_states(trace)
    for t in range(len(states) - 1):
        if np.any(states[t + 1] < trace.h[t]) or np.any(states[t + 1] > trace.H[t]):
            return False
    return bool(np.all(np.diff(trace.h) >= 0) and np.all(np.diff(trace.H) <= 0))


def check_upsilon_monotone(trace: RunTrace) -> bool:
    return bool(np.all(np.diff(trace.upsilon) <= 0))


def check_nearest_value_cascade(trace: RunTrace) -> bool:
    """With ``Upsilon_k = 2 mu - A`` distinct values, the next step has at most
    ``max(1, Upsilon_k - A - 1)``."""
    rule = trace.topology
    if not (isinstance(rule, NeighborRule) and rule.kind == "nearest_value"):
        raise ValueError("cascade applies to nearest-value runs")
    mu = rule.mu
    ups = trace.upsilon
    for t in range(len(ups) - 1):
        A = 2 * mu - int(ups[t])
        if A < 0:
            raise ValueError("cascade needs at most 2*mu distinct values")
        if ups[t + 1] > max(1, int(ups[t]) - A - 1):
            return False
    return True


def check_unique_extremes_preserved(trace: RunTrace) -> bool:
    """A minimum (maximum) held by a single node stays held by a single node."""
    rule = trace.topology
    states = _require_states(trace)
    if not (isinstance(rule, NeighborRule) and rule.kind == "nearest_neighbor"):
        raise ValueError("claim concerns nearest-neighbor runs")
    n = states.shape[1]
    if n <= rule.mu + 1:
        raise ValueError(f"n={n} <= mu+1={rule.mu + 1}: the graph is complete, claim does not apply")
    for t in range(len(states) - 1):
        cur, nxt = states[t], states[t + 1]
        if np.sum(cur == cur.min()) == 1 and np.sum(nxt == nxt.min()) != 1:
            return False
        if np.sum(cur == cur.max()) == 1 and np.sum(nxt == nxt.max()) != 1:
            return False
    return True


def _ceil_log2(m: int) -> int:
    return (m - 1).bit_length()


def max_step_bound(topology, params: ParamSchedule, n: int, k0: int = 0) -> int:
    """Finite-time step bound that applies to this topology and algorithm class."""
    cls = algorithm_class(params, k0)
    if isinstance(topology, NeighborRule):
        mu = topology.mu
        if topology.kind == "nearest_neighbor" and cls == "A_max":
            return -(-n // mu)
        if topology.kind == "nearest_value" and cls == "A_ave_star" and n <= 2 * mu:
            return _ceil_log2(2 * mu + 1)
        raise ValueError(f"no finite-time bound for {topology.kind} with {cls} and n={n}, mu={mu}")
    if isinstance(topology, GraphSchedule) and topology.kind == "fixed":
        topology = topology.graphs[0]
    if isinstance(topology, Digraph) and cls == "A_max":
        if not is_strongly_connected(topology):
            raise ValueError("max-consensus on a fixed graph needs strong connectivity")
        return diameter(topology)
    raise ValueError(f"no finite-time bound for {type(topology).__name__} with {cls}")


def check_max_step_bounds(trace: RunTrace, context: dict | None = None) -> bool:
    """Compare the observed finite-time step with the applicable bound.

    ``context`` may override ``topology``, ``params`` and ``n``; by default they
    come from the trace.
    """
    ctx = dict(context or {})
    topology = ctx.get("topology", trace.topology)
    params = ctx.get("params", trace.params)
    n = ctx.get("n", trace.n)
    if n == 1 and trace.finite_time_step == 0:
        return True
    bound = max_step_bound(topology, params, n, trace.k0)
    if trace.finite_time_step is None:
        return False
    return trace.finite_time_step <= bound


# -- certified spread -------------------------------------------------------------

@dataclass(frozen=True)
class SpreadCertificate:
    """Outcome of :func:`certify_positive_spread`.

    ``certified`` means ``Phi(k) > 0`` was proved at every step ``0..steps``.
    Otherwise ``failed_at`` is the first step where the enclosure could not
    separate the extreme nodes at the largest precision tried.
    """

    certified: bool
    steps: int
    precision_bits: int
    failed_at: int | None = None


def _dyadic(v: float) -> tuple[int, int]:
    num, den = float(v).as_integer_ratio()
    return num, den.bit_length() - 1


def certify_positive_spread(
    x0,
    topology,
    params: ParamSchedule,
    steps: int,
    *,
    k0: int = 0,
    max_precision: int = 1 << 20,
) -> SpreadCertificate:
    """Prove that no exact consensus occurs within ``steps`` updates.

    The trajectory is rebuilt in fixed point with ``P`` fractional bits,
    rounding down. The update is 1-Lipschitz in the sup norm, so after ``k``
    steps every coordinate is within ``k`` units of the exact state, and
    ``Phi_fixed(k) > 2k`` proves ``Phi(k) > 0``. When the proof fails, the
    precision is extrapolated from the decay rate seen so far and the run
    repeats, up to ``max_precision`` bits. Cost per step is fixed by ``P``,
    unlike exact runs whose denominators grow every step.

    Only state-independent topologies are supported: with a neighbor rule
    the graph would depend on an order the rounded state may not resolve.
    """
    if isinstance(topology, NeighborRule):
        raise ValueError("certificates need a graph or schedule, not a state-dependent rule")
    x0 = np.asarray(x0, dtype=float)
    weights = []
    for t in range(steps):
        alpha, eta = params(k0 + t)
        an, ae = _dyadic(alpha)
        en, ee = _dyadic(eta)
        m = max(ae, ee)
        a, e = an << (m - ae), en << (m - ee)
        weights.append((e, a, (1 << m) - a - e, m))
    parts = [_dyadic(v) for v in x0]
    scale = max(d for _, d in parts)
    base = [v << (scale - d) for v, d in parts]
    fixed = isinstance(topology, Digraph)
    rows: dict = {}

    prec = 64
    while True:
        x = [v << prec for v in base]
        failed = None
        for t in range(steps + 1):
            if max(x) - min(x) <= 2 * t:
                failed = t
                break
            if t == steps:
                break
            g = topology if fixed else topology(k0 + t)
            if g not in rows:
                rows[g] = [tuple(int(j) for j in r) for r in g.in_index]
            e, a, b, m = weights[t]
            nx = []
            for i, row in enumerate(rows[g]):
                nb = [x[j] for j in row]
                nx.append((e * x[i] + a * min(nb) + b * max(nb)) >> m)
            x = nx
        if failed is None:
            return SpreadCertificate(True, steps, prec)
        if failed == 0 or prec >= max_precision:
            return SpreadCertificate(False, steps, prec, failed)
        # bits lost per step so far, with headroom for the rounding budget
        lost = (prec + scale) - (max(max(x) - min(x), 1)).bit_length() + 1
        need = int(lost * steps / failed * 1.1) + steps.bit_length() + 64
        prec = min(max(need, 2 * prec), max_precision)


# -- initial conditions -----------------------------------------------------------

def generic_initial_state(n: int, rng: np.random.Generator, min_gap: float = 1e-3) -> np.ndarray:
    """Distinct values with pairwise distance at least ``min_gap``, randomly placed."""
    gaps = min_gap + rng.random(max(n - 1, 0))
    values = np.concatenate([[0.0], np.cumsum(gaps)])
    return rng.permutation(values)


def two_block_initial_state(g: Digraph) -> np.ndarray:
    """For a graph with no center: 0 on the nodes feeding one source component,
    1 on those feeding another, 0 elsewhere. No information ever crosses."""
    sources = source_components(g)
    if len(sources) < 2:
        raise ValueError("graph is quasi-strongly connected")
    x = np.zeros(g.n)
    for v in sources[1]:
        x[v - 1] = 1.0
    return x


# -- threshold sweep ---------------------------------------------------------------

OUTCOMES = ("finite_time", "asymptotic_only", "no_consensus_within_budget")


@dataclass(frozen=True)
class SweepRow:
    rule: str
    mu: int
    n: int
    trial: int
    outcome: str
    T_star: int | None
    phi_final: float
    steps_used: int


@dataclass
class SweepReport:
    rows: list[SweepRow]
    rule: str
    budget: int
    tol: float
    thresholds: dict[int, int | None] = field(default_factory=dict)
    expected: dict[int, int] = field(default_factory=dict)

    _HEADER = ("rule", "mu", "n", "trial", "outcome", "T_star", "phi_final", "steps_used")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self._HEADER)
        for r in self.rows:
            w.writerow([r.rule, r.mu, r.n, r.trial, r.outcome,
                        "" if r.T_star is None else r.T_star, repr(float(r.phi_final)), r.steps_used])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, budget: int = 0, tol: float = 0.0) -> "SweepReport":
        rows_raw = list(csv.reader(io.StringIO(text)))
        if not rows_raw or tuple(rows_raw[0]) != cls._HEADER:
            raise ValueError(f"line 1: expected header {','.join(cls._HEADER)}")
        rows = []
        for lineno, r in enumerate(rows_raw[1:], start=2):
            if not r:
                continue
            try:
                rows.append(SweepRow(r[0], int(r[1]), int(r[2]), int(r[3]), r[4],
                                     int(r[5]) if r[5] else None, float(r[6]), int(r[7])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        rule = rows[0].rule if rows else ""
        report = cls(rows, rule, budget, tol)
        report.thresholds = _detect_thresholds(rows)
        report.expected = {mu: _expected_boundary(rule, mu) for mu in report.thresholds}
        return report

    def grid(self) -> dict[tuple[int, int], list[SweepRow]]:
        out: dict[tuple[int, int], list[SweepRow]] = {}
        for r in self.rows:
            out.setdefault((r.mu, r.n), []).append(r)
        return out


def _expected_boundary(rule: str, mu: int) -> int:
    return mu + 1 if rule == "nearest_neighbor" else 2 * mu


def _detect_thresholds(rows: list[SweepRow]) -> dict[int, int | None]:
    """Largest n whose trials all reached finite-time consensus, per mu."""
    by_cell: dict[tuple[int, int], list[str]] = {}
    for r in rows:
        by_cell.setdefault((r.mu, r.n), []).append(r.outcome)
    out: dict[int, int | None] = {}
    for (mu, n), outcomes in sorted(by_cell.items()):
        out.setdefault(mu, None)
        if all(o == "finite_time" for o in outcomes):
            out[mu] = n if out[mu] is None else max(out[mu], n)
    return out


def _sweep_trial(task) -> SweepRow:
    rule_kind, mu, n, trial, seed, params, budget, tol, exact = task
    rng = np.random.default_rng(np.random.SeedSequence([seed, mu, n, trial]))
    x0 = generic_initial_state(n, rng)
    tr = run(x0, NeighborRule(rule_kind, mu), params, max_steps=budget, tol=tol, exact=exact)
    outcome = {
        "finite_time": "finite_time",
        "asymptotic": "asymptotic_only",
        "budget_exhausted": "no_consensus_within_budget",
    }[tr.outcome]
    return SweepRow(rule_kind, mu, n, trial, outcome, tr.finite_time_step, tr.final_phi, tr.steps)


def threshold_sweep(
    n_range: Iterable[int],
    mu_range: Iterable[int],
    rule_kind: str,
    params: ParamSchedule,
    trials: int,
    budget: int,
    *,
    seed: int = 0,
    tol: float = 1e-9,
    exact: bool = True,
    workers: int = 1,
) -> SweepReport:
    """Classify finite-time vs asymptotic behaviour over an ``(n, mu)`` grid.

    Initial states are generic (pairwise gaps >= 1e-3) and seeded per cell and
    trial, so results do not depend on ``workers``. Runs use exact arithmetic
    by default so that a finite-time verdict is never a rounding artifact.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if budget < 0:
        raise ValueError("budget must be >= 0")
    if rule_kind not in ("nearest_neighbor", "nearest_value"):
        raise ValueError(f"unknown rule {rule_kind!r}")
    if not in_class(params, "A_ave_star"):
        raise ValueError("threshold sweeps are defined for A_ave_star (eta = 0, alpha in (0, 1))")
    n_values, mu_values = sorted(set(n_range)), sorted(set(mu_range))
    if not n_values or not mu_values:
        raise ValueError("empty n or mu range")
    tasks = [
        (rule_kind, mu, n, t, seed, params, budget, tol, exact)
        for mu in mu_values for n in n_values for t in range(trials)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_trial, tasks, chunksize=8))
    else:
        rows = [_sweep_trial(t) for t in tasks]
    rows.sort(key=lambda r: (r.mu, r.n, r.trial))
    report = SweepReport(rows, rule_kind, budget, tol)
    report.thresholds = _detect_thresholds(rows)
    report.expected = {mu: _expected_boundary(rule_kind, mu) for mu in mu_values}
    return report
