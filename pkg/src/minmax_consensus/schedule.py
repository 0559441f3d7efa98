"""Time-dependent graph sequences and their joint connectivity.

A :class:`GraphSchedule` maps every time index ``k >= 0`` to a digraph. Three
kinds are supported, all eventually periodic so that statements quantified
over every ``k`` reduce to finite checks:

* ``fixed``: the same graph at every step;
* ``listed``: an explicit list, whose last graph repeats forever;
* ``periodic``: a list repeated with period ``P = len(graphs)``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable, Literal

from .graph import (
    Digraph,
    is_bidirectional,
    is_quasi_strongly_connected,
    is_strongly_connected,
    union,
)

__all__ = [
    "GraphSchedule",
    "ConnectivityClass",
    "ScheduleFormatError",
    "graph_at",
    "joint_graph",
    "classify",
    "schedule_to_dict",
    "schedule_from_dict",
    "read_schedule",
    "write_schedule",
]

Kind = Literal["fixed", "listed", "periodic"]
TriState = Literal["true", "false", "undecidable"]


class ScheduleFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GraphSchedule:
    n: int
    kind: Kind
    graphs: tuple[Digraph, ...]

    def __post_init__(self):
        if self.kind not in ("fixed", "listed", "periodic"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if not self.graphs:
            raise ValueError("a schedule needs at least one graph")
        if self.kind == "fixed" and len(self.graphs) != 1:
            raise ValueError("a fixed schedule holds exactly one graph")
        for g in self.graphs:
            if g.n != self.n:
                raise ValueError(f"member graph has {g.n} nodes, schedule has {self.n}")

    @classmethod
    def fixed(cls, g: Digraph) -> "GraphSchedule":
        return cls(g.n, "fixed", (g,))

    @classmethod
    def listed(cls, graphs) -> "GraphSchedule":
        graphs = tuple(graphs)
        return cls(graphs[0].n if graphs else 0, "listed", graphs)

    @classmethod
    def periodic(cls, graphs) -> "GraphSchedule":
        graphs = tuple(graphs)
        return cls(graphs[0].n if graphs else 0, "periodic", graphs)

    @property
    def period(self) -> int:
        return len(self.graphs)

    @property
    def bidirectional(self) -> bool:
        return all(is_bidirectional(g) for g in self.graphs)

    def __call__(self, k: int) -> Digraph:
        return graph_at(self, k)


def graph_at(s: GraphSchedule, k: int) -> Digraph:
    if k < 0:
        raise ValueError(f"time index must be >= 0, got {k}")
    if s.kind == "fixed":
        return s.graphs[0]
    if s.kind == "listed":
        return s.graphs[min(k, len(s.graphs) - 1)]
    return s.graphs[k % len(s.graphs)]


def joint_graph(s: GraphSchedule, k1: int, k2: int) -> Digraph:
    """Union of the graphs over the closed window ``[k1, k2]``."""
    if k1 < 0:
        raise ValueError(f"time index must be >= 0, got {k1}")
    if k1 > k2:
        raise ValueError(f"empty window [{k1}, {k2}]")
    if s.kind == "fixed":
        return s.graphs[0]
    # Past one full cycle (or the end of a listed prefix) nothing new appears.
    span = len(s.graphs)
    k2 = min(k2, k1 + span - 1) if s.kind == "periodic" else min(k2, max(k1, span - 1))
    return union((graph_at(s, k) for k in range(k1, k2 + 1)), n=s.n)


@dataclass(frozen=True)
class ConnectivityClass:
    """Joint connectivity verdicts for a schedule.

    ``*_B`` hold the smallest window length that witnesses the uniform
    property, or ``None`` when none exists within ``max_window``.
    ``bound_limited`` flags a uniform verdict that is false only because
    the witness would exceed ``max_window``.
    """

    uniformly_jointly_qsc: bool
    uniformly_jointly_qsc_B: int | None
    uniformly_jointly_sc: bool
    uniformly_jointly_sc_B: int | None
    infinitely_jointly_sc: TriState
    infinitely_jointly_connected: TriState
    bidirectional: bool
    max_window: int
    bound_limited: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ConnectivityClass":
        return cls(**d)


def _window_starts(s: GraphSchedule) -> range:
    # Windows starting at these indices represent every distinct window.
    if s.kind == "fixed":
        return range(1)
    return range(len(s.graphs))


def _min_uniform_window(
    s: GraphSchedule, prop: Callable[[Digraph], bool], max_window: int
) -> int | None:
    starts = _window_starts(s)
    for B in range(1, max_window + 1):
        if all(prop(joint_graph(s, k, k + B - 1)) for k in starts):
            return B
    return None


def _tail_graph(s: GraphSchedule) -> Digraph:
    """Union over ``[k, inf)``; identical for every ``k`` once the schedule repeats.

    For periodic schedules every tail contains a full period; for listed
    schedules the tail union is the repeated last graph for ``k`` past the
    prefix, and earlier tails only add arcs to it.
    """
    if s.kind == "periodic":
        return union(s.graphs, n=s.n)
    return s.graphs[-1]


def classify(s: GraphSchedule, max_window: int | None = None) -> ConnectivityClass:
    """Decide the joint connectivity properties of ``s``.

    Uniform properties are searched for window lengths ``B <= max_window``
    (default ``n**2``). Infinite-horizon properties are exact because each
    schedule kind is eventually periodic.
    """
    if max_window is None:
        max_window = s.n ** 2
    if max_window < 1:
        raise ValueError("max_window must be >= 1")

    b_qsc = _min_uniform_window(s, is_quasi_strongly_connected, max_window)
    b_sc = _min_uniform_window(s, is_strongly_connected, max_window)

    tail = _tail_graph(s)
    tail_sc = is_strongly_connected(tail)
    inf_sc: TriState = "true" if tail_sc else "false"
    bidir = s.bidirectional
    inf_conn: TriState = ("true" if tail_sc else "false") if bidir else "undecidable"

    # Uniform properties hold for some B iff they hold for the windows
    # covering a whole cycle; report when only the search cap prevented it.
    limited = False
    if s.kind == "periodic":
        full = union(s.graphs, n=s.n)
        limited = (b_qsc is None and is_quasi_strongly_connected(full)) or (
            b_sc is None and is_strongly_connected(full)
        )
    elif s.kind == "listed":
        limited = (b_qsc is None and is_quasi_strongly_connected(tail)) or (
            b_sc is None and tail_sc
        )

    return ConnectivityClass(
        uniformly_jointly_qsc=b_qsc is not None,
        uniformly_jointly_qsc_B=b_qsc,
        uniformly_jointly_sc=b_sc is not None,
        uniformly_jointly_sc_B=b_sc,
        infinitely_jointly_sc=inf_sc,
        infinitely_jointly_connected=inf_conn,
        bidirectional=bidir,
        max_window=max_window,
        bound_limited=limited,
    )


# -- JSON schedule files ----------------------------------------------------

def schedule_to_dict(s: GraphSchedule) -> dict:
    return {
        "n": s.n,
        "kind": s.kind,
        "graphs": [[[j, i] for j, i in g] for g in s.graphs],
    }


def schedule_from_dict(d: dict) -> GraphSchedule:
    try:
        n = int(d["n"])
        kind = d["kind"]
        graphs = d["graphs"]
    except (KeyError, TypeError) as exc:
        raise ScheduleFormatError(f"schedule needs fields n, kind, graphs ({exc})") from None
    if kind not in ("fixed", "listed", "periodic"):
        raise ScheduleFormatError(f"kind: unknown schedule kind {kind!r}")
    if not isinstance(graphs, list) or not graphs:
        raise ScheduleFormatError("graphs: expected a non-empty array of arc lists")
    parsed = []
    for gi, arcs in enumerate(graphs):
        try:
            parsed.append(Digraph(n, [tuple(a) for a in arcs]))
        except (TypeError, ValueError) as exc:
            raise ScheduleFormatError(f"graphs[{gi}]: {exc}") from None
    try:
        return GraphSchedule(n, kind, tuple(parsed))
    except ValueError as exc:
        raise ScheduleFormatError(str(exc)) from None


def read_schedule(path) -> GraphSchedule:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScheduleFormatError(f"line {exc.lineno}: {exc.msg}") from None
    return schedule_from_dict(d)


def write_schedule(s: GraphSchedule, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(schedule_to_dict(s), fh, indent=2)
        fh.write("\n")
