"""Directed graphs on nodes ``1..n`` and the connectivity notions used by the
convergence conditions: centers, quasi-strong and strong connectivity,
diameter and unions.

An arc ``(j, i)`` means information flows from ``j`` to ``i``, i.e. ``j`` is a
neighbor of ``i``. Every node is implicitly its own neighbor; self-loops are
never stored.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "Digraph",
    "EdgeListError",
    "neighbors",
    "strongly_connected_components",
    "source_components",
    "centers",
    "is_strongly_connected",
    "is_quasi_strongly_connected",
    "is_bidirectional",
    "is_connected",
    "union",
    "diameter",
    "complete_digraph",
    "cycle_digraph",
    "path_digraph",
    "random_digraph",
    "parse_edge_list",
    "format_edge_list",
    "read_edge_list",
    "write_edge_list",
]


class EdgeListError(ValueError):
    """Malformed edge-list text; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Digraph:
    """Immutable digraph with node set ``{1, ..., n}``.

    Parameters
    ----------
    n : int
        Number of nodes, at least 1.
    arcs : iterable of (j, i)
        Arcs from ``j`` to ``i`` using 1-based ids. Self-loops are dropped.
    """

    n: int
    arcs: frozenset = field(default_factory=frozenset)

    def __init__(self, n: int, arcs: Iterable[tuple[int, int]] = ()):
        n = int(n)
        if n < 1:
            raise ValueError(f"node count must be >= 1, got {n}")
        clean = set()
        for arc in arcs:
            j, i = (int(v) for v in arc)
            if not (1 <= j <= n and 1 <= i <= n):
                raise ValueError(f"arc ({j}, {i}) has an endpoint outside 1..{n}")
            if j != i:
                clean.add((j, i))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "arcs", frozenset(clean))

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self.arcs))

    def __len__(self) -> int:
        return len(self.arcs)

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, arcs={sorted(self.arcs)})"

    # 0-based adjacency, built lazily and cached on the frozen instance.
    @cached_property
    def _in_lists(self) -> tuple[tuple[int, ...], ...]:
        ins: list[list[int]] = [[i] for i in range(self.n)]
        for j, i in sorted(self.arcs):
            ins[i - 1].append(j - 1)
        return tuple(tuple(v) for v in ins)

    @cached_property
    def _out_lists(self) -> tuple[tuple[int, ...], ...]:
        outs: list[list[int]] = [[] for _ in range(self.n)]
        for j, i in sorted(self.arcs):
            outs[j - 1].append(i - 1)
        return tuple(tuple(v) for v in outs)

    @cached_property
    def in_index(self) -> np.ndarray:
        """``(n, d)`` int array of 0-based in-neighbors including self.

        Rows are padded with the node's own index so that
        ``x[g.in_index].min(axis=1)`` is the neighborhood minimum.
        """
        width = max(len(v) for v in self._in_lists)
        idx = np.empty((self.n, width), dtype=np.intp)
        for i, row in enumerate(self._in_lists):
            idx[i, : len(row)] = row
            idx[i, len(row):] = i
        idx.setflags(write=False)
        return idx

    def reversed(self) -> "Digraph":
        return Digraph(self.n, ((i, j) for j, i in self.arcs))

    def adjacency_matrix(self) -> np.ndarray:
        """Boolean matrix ``A`` with ``A[j-1, i-1]`` true for each arc j->i."""
        a = np.zeros((self.n, self.n), dtype=bool)
        for j, i in self.arcs:
            a[j - 1, i - 1] = True
        return a


def _check_node(g: Digraph, i: int) -> int:
    if not (1 <= i <= g.n):
        raise ValueError(f"node {i} outside 1..{g.n}")
    return i


def neighbors(g: Digraph, i: int) -> set[int]:
    """Neighbor set of node ``i`` (1-based), always containing ``i`` itself."""
    _check_node(g, i)
    return {j + 1 for j in g._in_lists[i - 1]}


def _reachable_from(g: Digraph, src: int) -> dict[int, int]:
    """BFS distances (0-based ids) of nodes reachable from ``src``."""
    dist = {src: 0}
    queue = deque([src])
    outs = g._out_lists
    while queue:
        u = queue.popleft()
        for v in outs[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def strongly_connected_components(g: Digraph) -> list[frozenset[int]]:
    """Strongly connected components as sets of 1-based node ids.

    Iterative Tarjan; components come out in reverse topological order of
    the condensation (sinks first).
    """
    outs = g._out_lists
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comps: list[frozenset[int]] = []
    counter = 0

    for root in range(g.n):
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, pos = work.pop()
            if pos == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            recurse = False
            for k in range(pos, len(outs[v])):
                w = outs[v][k]
                if w not in index:
                    work.append((v, k + 1))
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w + 1)
                    if w == v:
                        break
                comps.append(frozenset(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return comps


def source_components(g: Digraph) -> list[frozenset[int]]:
    """Components of the condensation with no incoming arcs."""
    comps = strongly_connected_components(g)
    owner = {}
    for c, comp in enumerate(comps):
        for v in comp:
            owner[v] = c
    has_in = [False] * len(comps)
    for j, i in g.arcs:
        if owner[j] != owner[i]:
            has_in[owner[i]] = True
    return [comp for c, comp in enumerate(comps) if not has_in[c]]


def centers(g: Digraph) -> frozenset[int]:
    """Nodes from which every node is reachable (empty if none)."""
    sources = source_components(g)
    if len(sources) != 1:
        return frozenset()
    return sources[0]


def is_strongly_connected(g: Digraph) -> bool:
    return len(strongly_connected_components(g)) == 1


def is_quasi_strongly_connected(g: Digraph) -> bool:
    return len(source_components(g)) == 1


def is_bidirectional(g: Digraph) -> bool:
    return all((i, j) in g.arcs for j, i in g.arcs)


def is_connected(g: Digraph) -> bool:
    """Connectivity of a bidirectional graph."""
    if not is_bidirectional(g):
        raise ValueError("connectivity is only defined here for bidirectional graphs")
    return is_strongly_connected(g)


def union(gs: Iterable[Digraph], n: int | None = None) -> Digraph:
    """Union of digraphs sharing a node set; ``n`` is required for an empty list."""
    gs = list(gs)
    if not gs:
        if n is None:
            raise ValueError("union of an empty list needs an explicit node count")
        return Digraph(n)
    size = gs[0].n if n is None else n
    arcs: set[tuple[int, int]] = set()
    for g in gs:
        if g.n != size:
            raise ValueError(f"cannot unite graphs with {g.n} and {size} nodes")
        arcs |= g.arcs
    return Digraph(size, arcs)


def diameter(g: Digraph) -> int:
    """Longest shortest-path length over ordered pairs with ``j`` reachable from ``i``."""
    best = 0
    for src in range(g.n):
        best = max(best, max(_reachable_from(g, src).values()))
    return best


def complete_digraph(n: int) -> Digraph:
    return Digraph(n, ((j, i) for j in range(1, n + 1) for i in range(1, n + 1)))


def cycle_digraph(n: int) -> Digraph:
    """Directed cycle 1 -> 2 -> ... -> n -> 1."""
    return Digraph(n, ((i, i % n + 1) for i in range(1, n + 1)))


def path_digraph(n: int) -> Digraph:
    """Directed path 1 -> 2 -> ... -> n."""
    return Digraph(n, ((i, i + 1) for i in range(1, n)))


def random_digraph(n: int, p: float, rng: np.random.Generator) -> Digraph:
    """Erdos-Renyi style digraph: each ordered pair is an arc with probability ``p``."""
    mask = rng.random((n, n)) < p
    return Digraph(n, ((j + 1, i + 1) for j, i in zip(*np.nonzero(mask))))


# -- edge-list text format -------------------------------------------------

def parse_edge_list(text: str) -> Digraph:
    """Parse ``n <count>`` followed by ``j i`` arc lines; ``#`` starts a comment."""
    n = None
    arcs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise EdgeListError("expected header 'n <count>'", lineno)
            try:
                n = int(parts[1])
            except ValueError:
                raise EdgeListError(f"bad node count {parts[1]!r}", lineno) from None
            if n < 1:
                raise EdgeListError(f"node count must be >= 1, got {n}", lineno)
            continue
        if len(parts) != 2:
            raise EdgeListError(f"expected 'j i', got {line!r}", lineno)
        try:
            j, i = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(f"non-integer node id in {line!r}", lineno) from None
        if not (1 <= j <= n and 1 <= i <= n):
            raise EdgeListError(f"arc ({j}, {i}) outside 1..{n}", lineno)
        arcs.append((j, i))
    if n is None:
        raise EdgeListError("missing header 'n <count>'")
    return Digraph(n, arcs)


def format_edge_list(g: Digraph) -> str:
    lines = [f"n {g.n}"]
    lines += [f"{j} {i}" for j, i in g]
    return "\n".join(lines) + "\n"


def read_edge_list(path) -> Digraph:
    with open(path, encoding="utf-8") as fh:
        return parse_edge_list(fh.read())


def write_edge_list(g: Digraph, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_edge_list(g))
