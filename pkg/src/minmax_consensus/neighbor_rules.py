"""State-dependent interaction graphs built from the node values.

``nearest_neighbor``
    node ``i`` listens to the ``mu`` nodes with the largest values strictly
    below ``x_i`` and the ``mu`` nodes with the smallest values strictly above.
``nearest_value``
    node ``i`` listens to every node holding one of the ``mu`` largest
    distinct values below ``x_i`` or the ``mu`` smallest distinct values above.

Nodes with equal values are never neighbors of each other. Only the
neighborhood minimum and maximum enter the update, and those are determined by
the values alone, so :func:`neighbor_extrema` computes them from the sorted
state without materialising the graph.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .graph import Digraph

__all__ = [
    "NeighborRule",
    "RuleSpecError",
    "build_graph",
    "neighbor_extrema",
    "rule_from_dict",
    "rule_to_dict",
]

RuleKind = Literal["nearest_neighbor", "nearest_value"]


class RuleSpecError(ValueError):
    pass


@dataclass(frozen=True)
class NeighborRule:
    """Neighbor selection rule.

    ``tie_seed`` is ``None`` for the ``lowest_index`` policy; otherwise ties for
    the last slot are broken by a random priority drawn from that seed.
    """

    kind: RuleKind
    mu: int
    tie_seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("nearest_neighbor", "nearest_value"):
            raise RuleSpecError(f"unknown rule {self.kind!r}")
        if int(self.mu) != self.mu or self.mu < 1:
            raise RuleSpecError(f"mu must be a positive integer, got {self.mu!r}")

    @property
    def tie_policy(self) -> str:
        return "lowest_index" if self.tie_seed is None else "seeded_random"

    def __call__(self, x) -> Digraph:
        return build_graph(self, x)


def _priorities(rule: NeighborRule, n: int) -> np.ndarray:
    """``prio[i, j]``: rank of candidate ``j`` among equal values, as seen by ``i``."""
    if rule.tie_seed is None:
        return np.broadcast_to(np.arange(n), (n, n))
    rng = np.random.default_rng(rule.tie_seed)
    return rng.random((n, n))


def build_graph(rule: NeighborRule, x) -> Digraph:
    """Materialise the interaction graph for state ``x``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 1:
        raise ValueError("state vector must have at least one entry")
    mu = rule.mu
    prio = _priorities(rule, n)
    arcs = []
    for i in range(n):
        below = np.flatnonzero(x < x[i])
        above = np.flatnonzero(x > x[i])
        if rule.kind == "nearest_neighbor":
            # nearest first, ties by priority
            below = below[np.lexsort((prio[i, below], -x[below]))][:mu]
            above = above[np.lexsort((prio[i, above], x[above]))][:mu]
            chosen = np.concatenate([below, above])
        else:
            lo = np.unique(x[below])[::-1][:mu]
            hi = np.unique(x[above])[:mu]
            chosen = np.flatnonzero(np.isin(x, lo) | np.isin(x, hi))
        arcs.extend((int(j) + 1, i + 1) for j in chosen)
    return Digraph(n, arcs)


def neighbor_extrema(rule: NeighborRule, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Minimum and maximum over each node's neighbor set (self included).

    Equivalent to building the graph with any tie policy and reducing over
    in-neighbors; tested against :func:`build_graph`. Object arrays of exact
    numbers are kept as they are.
    """
    x = np.asarray(x)
    if x.dtype != object:
        x = x.astype(float)
    mu = rule.mu
    if rule.kind == "nearest_neighbor":
        v = np.sort(x)
        n = v.size
        n_below = np.searchsorted(v, x, side="left")
        first_above = np.searchsorted(v, x, side="right")
        mn = v[np.maximum(n_below - mu, 0)]
        mx = v[np.minimum(first_above + mu - 1, n - 1)]
        # nodes with no smaller (larger) values keep themselves as the extreme
        mn = np.where(n_below == 0, x, mn)
        mx = np.where(first_above == n, x, mx)
        return mn, mx
    u = np.unique(x)
    pos = np.searchsorted(u, x)
    mn = u[np.maximum(pos - mu, 0)]
    mx = u[np.minimum(pos + mu, u.size - 1)]
    return mn, mx


def rule_from_dict(d: dict, path: str = "topology") -> NeighborRule:
    """Parse ``{"rule": ..., "mu": int, "tie": "lowest_index" | {"seed": int}}``."""
    if not isinstance(d, dict):
        raise RuleSpecError(f"{path}: expected an object")
    try:
        kind = d["rule"]
        mu = d["mu"]
    except KeyError as exc:
        raise RuleSpecError(f"{path}.{exc.args[0]}: missing field") from None
    if not isinstance(mu, int) or isinstance(mu, bool):
        raise RuleSpecError(f"{path}.mu: expected an integer, got {mu!r}")
    tie = d.get("tie", "lowest_index")
    if tie == "lowest_index":
        seed = None
    elif isinstance(tie, dict) and isinstance(tie.get("seed"), int):
        seed = tie["seed"]
    else:
        raise RuleSpecError(f"{path}.tie: expected 'lowest_index' or {{'seed': int}}, got {tie!r}")
    try:
        return NeighborRule(kind, mu, seed)
    except RuleSpecError as exc:
        raise RuleSpecError(f"{path}: {exc}") from None


def rule_to_dict(rule: NeighborRule) -> dict:
    tie = "lowest_index" if rule.tie_seed is None else {"seed": rule.tie_seed}
    return {"rule": rule.kind, "mu": rule.mu, "tie": tie}
