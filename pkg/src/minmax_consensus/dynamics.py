"""The min/max consensus update and run traces.

Every node moves, synchronously, to

    x_i(k+1) = eta_k x_i(k) + alpha_k min_{N_i(k)} x + (1 - eta_k - alpha_k) max_{N_i(k)} x

where ``N_i(k)`` is node ``i``'s neighbor set (itself included) in the graph
active at time ``k``. ``alpha = eta = 0`` is max-consensus; ``eta > 0`` keeps
self-confidence.
"""
from __future__ import annotations

import csv
import io
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .graph import Digraph
from .neighbor_rules import NeighborRule, neighbor_extrema
from .params import PARAM_SLACK, ParamSchedule
from .schedule import GraphSchedule, graph_at

__all__ = [
    "RunTrace",
    "Topology",
    "step",
    "step_extrema",
    "run",
    "phi",
    "upsilon",
    "default_max_steps",
    "DEFAULT_TOL",
    "trace_to_csv",
    "trace_from_csv",
    "write_trace_csv",
    "read_trace_csv",
]

DEFAULT_TOL = 1e-9

Topology = Union[Digraph, GraphSchedule, NeighborRule]


def default_max_steps(n: int) -> int:
    return 10 * n * n


def _check_weights(alpha: float, eta: float) -> float:
    if not (alpha >= 0 and eta >= 0):
        raise ValueError(f"weights must be non-negative, got alpha={alpha}, eta={eta}")
    rest = 1.0 - eta - alpha
    if rest < -PARAM_SLACK:
        raise ValueError(f"alpha + eta must be <= 1, got {alpha + eta}")
    return max(rest, 0.0)


def step_extrema(x: np.ndarray, mn: np.ndarray, mx: np.ndarray, alpha: float, eta: float) -> np.ndarray:
    """One update given each node's neighborhood minimum and maximum."""
    rest = _check_weights(alpha, eta)
    return eta * x + alpha * mn + rest * mx


def step(x, g: Digraph, alpha: float, eta: float) -> np.ndarray:
    """Synchronous update of every node from the snapshot ``x`` over graph ``g``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (g.n,):
        raise ValueError(f"state has shape {x.shape}, graph has {g.n} nodes")
    nb = x[g.in_index]
    return step_extrema(x, nb.min(axis=1), nb.max(axis=1), alpha, eta)


def phi(x) -> float:
    """Spread ``max(x) - min(x)``; zero exactly on the consensus manifold."""
    x = np.asarray(x, dtype=float)
    return float(x.max() - x.min())


def upsilon(x) -> int:
    """Number of distinct values (exact equality)."""
    return int(np.unique(np.asarray(x, dtype=float)).size)


@dataclass
class RunTrace:
    """Per-step record of a run.

    Row ``t`` describes time ``k0 + t``. ``finite_time_step`` counts steps from
    the start (0 when the initial state is already a consensus).
    """

    states: np.ndarray | None
    h: np.ndarray
    H: np.ndarray
    phi: np.ndarray
    upsilon: np.ndarray
    k0: int = 0
    finite_time_step: int | None = None
    asymptotic_converged: bool = False
    consensus_value: float | None = None
    tol: float = DEFAULT_TOL
    max_steps: int | None = None
    topology: Topology | None = field(default=None, repr=False)
    params: ParamSchedule | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return int(self.phi.size)

    @property
    def steps(self) -> int:
        return len(self) - 1

    @property
    def n(self) -> int | None:
        return None if self.states is None else int(self.states.shape[1])

    @property
    def times(self) -> np.ndarray:
        return self.k0 + np.arange(len(self))

    @property
    def outcome(self) -> str:
        if self.finite_time_step is not None:
            return "finite_time"
        if self.asymptotic_converged:
            return "asymptotic"
        return "budget_exhausted"

    @property
    def final_phi(self) -> float:
        return float(self.phi[-1])

    def summary(self) -> str:
        head = self.outcome
        if self.finite_time_step is not None:
            head = f"finite_time k={self.finite_time_step}"
        return f"outcome={head} phi={float(self.phi[-1])!r}"


def _graph_for(topology: Topology, k: int):
    if isinstance(topology, Digraph):
        return topology
    if isinstance(topology, GraphSchedule):
        return graph_at(topology, k)
    raise TypeError(f"unsupported topology {type(topology).__name__}")


class _Dyadic:
    """State held exactly as integer numerators over a shared power of two.

    Binary floats and the weights are dyadic rationals, so the update stays
    inside this set and finite-time consensus and value counts are decided
    without rounding.
    """

    def __init__(self, values: np.ndarray):
        fracs = [Fraction(float(v)) for v in values]
        self.exp = max(f.denominator.bit_length() - 1 for f in fracs)
        self.num = np.array(
            [f.numerator << (self.exp - (f.denominator.bit_length() - 1)) for f in fracs],
            dtype=object,
        )

    def floats(self) -> np.ndarray:
        d = 1 << self.exp
        return np.array([v / d for v in self.num], dtype=float)

    def spread(self) -> int:
        """Numerator of max - min over the shared denominator ``2**exp``."""
        return int(self.num.max() - self.num.min())

    def at_most(self, d: int, tol: float) -> bool:
        """Exact test of ``d / 2**exp <= tol``."""
        t = Fraction(tol)
        return d * t.denominator <= t.numerator << self.exp

    def as_float(self, d: int) -> float:
        return d / (1 << self.exp)

    def distinct(self) -> int:
        return len(set(self.num.tolist()))

    def step(self, mn: np.ndarray, mx: np.ndarray, alpha: float, eta: float) -> None:
        _check_weights(alpha, eta)
        fa, fe = Fraction(alpha), Fraction(eta)
        m = max(fa.denominator, fe.denominator).bit_length() - 1
        a = fa.numerator << (m - (fa.denominator.bit_length() - 1))
        e = fe.numerator << (m - (fe.denominator.bit_length() - 1))
        b = (1 << m) - a - e
        if b < 0:
            # float weights may sum to 1 + O(ulp) exactly; keep the update convex
            a += b
            b = 0
        self.num = e * self.num + a * mn + b * mx
        self.exp += m
        self._normalise()

    def _normalise(self) -> None:
        nz = [v for v in self.num.tolist() if v]
        if not nz or self.exp == 0:
            return
        shift = min(min((v & -v).bit_length() - 1 for v in nz), self.exp)
        if shift:
            self.num = np.array([v >> shift for v in self.num.tolist()], dtype=object)
            self.exp -= shift


def _extrema(topology: Topology, k: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(topology, NeighborRule):
        return neighbor_extrema(topology, x)
    nb = x[_graph_for(topology, k).in_index]
    return nb.min(axis=1), nb.max(axis=1)


def run(
    x0,
    topology: Topology,
    params: ParamSchedule,
    max_steps: int | None = None,
    tol: float = DEFAULT_TOL,
    *,
    k0: int = 0,
    stop_at_tol: bool = True,
    exact: bool = False,
) -> RunTrace:
    """Iterate the update from ``x0`` at time ``k0``.

    The run ends when all entries are exactly equal (finite-time consensus),
    when the spread drops to ``tol`` (unless ``stop_at_tol`` is false), or
    after ``max_steps`` updates (default ``10 n^2``).

    With ``exact=True`` the states evolve in exact dyadic arithmetic and are
    rounded to floats only for the trace; ``upsilon`` and finite-time
    detection then use the exact values. Use it wherever spurious merging of
    nearly equal floats would change the answer.
    """
    x = np.array(x0, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("initial state must be a non-empty vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("initial state must be finite")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = x.size
    if isinstance(topology, (Digraph, GraphSchedule)) and topology.n != n:
        raise ValueError(f"topology has {topology.n} nodes, state has {n}")
    if max_steps is None:
        max_steps = default_max_steps(n)
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")

    ex = _Dyadic(x) if exact else None
    states = [x]
    ups = [upsilon(x)]
    phis = []
    finite = None
    converged = False
    t = 0
    while True:
        if exact:
            d = ex.spread()
            phis.append(ex.as_float(d))
            within = ex.at_most(d, tol)
        else:
            d = x.max() - x.min()
            phis.append(float(d))
            within = d <= tol
        if d == 0:
            finite = t
            converged = True
            break
        if within:
            converged = True
            if stop_at_tol:
                break
        if t >= max_steps:
            break
        k = k0 + t
        alpha, eta = params(k)
        if exact:
            mn, mx = _extrema(topology, k, ex.num)
            ex.step(mn, mx, alpha, eta)
            x = ex.floats()
            ups.append(ex.distinct())
        else:
            mn, mx = _extrema(topology, k, x)
            x = step_extrema(x, mn, mx, alpha, eta)
            ups.append(upsilon(x))
        states.append(x)
        t += 1

    arr = np.vstack(states)
    h = arr.min(axis=1)
    H = arr.max(axis=1)
    if finite is not None:
        value = float(arr[-1, 0])
    elif converged:
        value = float((h[-1] + H[-1]) / 2)
    else:
        value = None
    return RunTrace(
        states=arr,
        h=h,
        H=H,
        phi=np.array(phis),
        upsilon=np.array(ups, dtype=np.int64),
        k0=k0,
        finite_time_step=finite,
        asymptotic_converged=converged,
        consensus_value=value,
        tol=tol,
        max_steps=max_steps,
        topology=topology,
        params=params,
    )


# -- trace CSV ----------------------------------------------------------------

_HEADER = ["k", "h", "H", "Phi", "Upsilon"]


def _fmt(v: float) -> str:
    return repr(float(v))


def trace_to_csv(trace: RunTrace, wide: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(_HEADER)
    if wide:
        if trace.states is None:
            raise ValueError("trace carries no states for the wide format")
        header += [f"x{i + 1}" for i in range(trace.states.shape[1])]
    w.writerow(header)
    for t, k in enumerate(trace.times):
        row = [int(k), _fmt(trace.h[t]), _fmt(trace.H[t]), _fmt(trace.phi[t]), int(trace.upsilon[t])]
        if wide:
            row += [_fmt(v) for v in trace.states[t]]
        w.writerow(row)
    return buf.getvalue()


def trace_from_csv(text: str) -> RunTrace:
    """Read a trace written by :func:`trace_to_csv` (narrow or wide)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][:5] != _HEADER:
        raise ValueError(f"line 1: expected header starting with {','.join(_HEADER)}")
    header = rows[0]
    wide = len(header) > 5
    ks, h, H, ph, ups, xs = [], [], [], [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            ks.append(int(row[0]))
            h.append(float(row[1]))
            H.append(float(row[2]))
            ph.append(float(row[3]))
            ups.append(int(row[4]))
            if wide:
                xs.append([float(v) for v in row[5:]])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if not ks:
        raise ValueError("trace has no rows")
    ph_arr = np.array(ph)
    # Upsilon is exact in exact mode, where Phi can underflow to 0.0 while values still differ
    finite = next((t for t, u in enumerate(ups) if u == 1), None)
    return RunTrace(
        states=np.array(xs) if wide else None,
        h=np.array(h),
        H=np.array(H),
        phi=ph_arr,
        upsilon=np.array(ups, dtype=np.int64),
        k0=ks[0],
        finite_time_step=finite,
        asymptotic_converged=finite is not None,
        consensus_value=h[finite] if finite is not None else None,
    )


def write_trace_csv(trace: RunTrace, path, wide: bool = False) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(trace_to_csv(trace, wide=wide))


def read_trace_csv(path) -> RunTrace:
    with open(path, encoding="utf-8") as fh:
        return trace_from_csv(fh.read())
