"""Weight sequences ``k -> (alpha_k, eta_k)`` and algorithm-class membership.

Each sequence is one of a handful of closed families so that questions about
*all* ``k`` (class membership, divergence of series and block products) can be
answered symbolically rather than from a finite prefix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

__all__ = [
    "Constant",
    "Listed",
    "Power",
    "Geometric",
    "OneMinus",
    "Sequence",
    "ParamSchedule",
    "AlgorithmClass",
    "ParamSpecError",
    "sequence_from_dict",
    "sequence_to_dict",
    "params_from_dict",
    "params_to_dict",
    "algorithm_class",
    "in_class",
    "PARAM_SLACK",
]

# Absolute slack allowed on alpha_k + eta_k <= 1 for values built by float arithmetic.
PARAM_SLACK = 1e-12
# Length of the numeric prefix used when a constraint couples two families.
_PREFIX = 4096


class ParamSpecError(ValueError):
    """Invalid parameter sequence; ``path`` names the offending config field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Bounds:
    """Infimum/supremum of a sequence over ``k >= k0`` and whether each is attained."""

    inf: float
    sup: float
    inf_attained: bool
    sup_attained: bool

    def all_positive(self) -> bool:
        return self.inf > 0 or (self.inf == 0 and not self.inf_attained)

    def all_below_one(self) -> bool:
        return self.sup < 1 or (self.sup == 1 and not self.sup_attained)

    def identically(self, value: float) -> bool:
        return self.inf == value and self.sup == value


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, k: int) -> float:
        return float(self.value)

    def bounds(self, k0: int = 0) -> Bounds:
        v = float(self.value)
        return Bounds(v, v, True, True)

    def monotone(self) -> bool:
        return True


@dataclass(frozen=True)
class Listed:
    """Explicit values; the last one repeats forever."""

    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise ParamSpecError("a listed sequence needs at least one value")

    def __call__(self, k: int) -> float:
        return self.values[min(k, len(self.values) - 1)]

    def bounds(self, k0: int = 0) -> Bounds:
        tail = self.values[min(k0, len(self.values) - 1):]
        return Bounds(min(tail), max(tail), True, True)

    def monotone(self) -> bool:
        d = np.diff(self.values)
        return bool(np.all(d >= 0) or np.all(d <= 0))


@dataclass(frozen=True)
class Power:
    """``c * (k + 1) ** (-p)`` with ``c >= 0``, ``p >= 0``."""

    c: float
    p: float

    def __post_init__(self):
        if self.c < 0 or self.p < 0:
            raise ParamSpecError(f"power family needs c >= 0 and p >= 0, got c={self.c}, p={self.p}")

    def __call__(self, k: int) -> float:
        return self.c * (k + 1) ** (-self.p)

    def bounds(self, k0: int = 0) -> Bounds:
        first = self(k0)
        if self.p == 0 or self.c == 0:
            return Bounds(first, first, True, True)
        return Bounds(0.0, first, False, True)

    def monotone(self) -> bool:
        return True


@dataclass(frozen=True)
class Geometric:
    """``c * r ** k`` with ``c >= 0``, ``r >= 0``."""

    c: float
    r: float

    def __post_init__(self):
        if self.c < 0 or self.r < 0:
            raise ParamSpecError(f"geometric family needs c >= 0 and r >= 0, got c={self.c}, r={self.r}")

    def __call__(self, k: int) -> float:
        return self.c * self.r ** k

    def bounds(self, k0: int = 0) -> Bounds:
        first = self(k0)
        if self.c == 0 or self.r == 1:
            return Bounds(first, first, True, True)
        if self.r < 1:
            return Bounds(0.0, first, False, True)
        return Bounds(first, math.inf, True, False)

    def monotone(self) -> bool:
        return True


@dataclass(frozen=True)
class OneMinus:
    """``1 - inner_k``; used for self-confidence sequences approaching 1."""

    inner: "Sequence"

    def __call__(self, k: int) -> float:
        return 1.0 - self.inner(k)

    def bounds(self, k0: int = 0) -> Bounds:
        b = self.inner.bounds(k0)
        return Bounds(1.0 - b.sup, 1.0 - b.inf, b.sup_attained, b.inf_attained)

    def monotone(self) -> bool:
        return self.inner.monotone()


Sequence = Union[Constant, Listed, Power, Geometric, OneMinus]


AlgorithmClass = Literal["A", "A_ave", "A_ave_star", "A_max"]


@dataclass(frozen=True)
class ParamSchedule:
    """The pair of sequences ``(alpha_k, eta_k)`` selecting an algorithm.

    Construction checks ``alpha_k, eta_k >= 0`` and ``alpha_k + eta_k <= 1``:
    exactly via bounds where the families allow it, otherwise over a prefix of
    ``4096`` steps. :func:`minmax_consensus.dynamics.step` re-checks every step.
    """

    alpha: Sequence = field(default_factory=lambda: Constant(0.0))
    eta: Sequence = field(default_factory=lambda: Constant(0.0))

    def __post_init__(self):
        for name in ("alpha", "eta"):
            b = getattr(self, name).bounds(0)
            if b.inf < 0:
                raise ParamSpecError(f"sequence takes negative values (inf={b.inf})", name)
        ba, be = self.alpha.bounds(0), self.eta.bounds(0)
        if ba.sup + be.sup <= 1 + PARAM_SLACK:
            return
        if math.isinf(ba.sup) or math.isinf(be.sup):
            raise ParamSpecError("sequence is unbounded", "alpha" if math.isinf(ba.sup) else "eta")
        for k in range(_PREFIX):
            a, e = self.alpha(k), self.eta(k)
            if a + e > 1 + PARAM_SLACK:
                raise ParamSpecError(f"alpha_k + eta_k = {a + e} > 1 at k={k}", "alpha")

    @classmethod
    def constant(cls, alpha: float = 0.0, eta: float = 0.0) -> "ParamSchedule":
        return cls(Constant(alpha), Constant(eta))

    def __call__(self, k: int) -> tuple[float, float]:
        return self.alpha(k), self.eta(k)

    def is_finite_data(self) -> bool:
        return isinstance(self.alpha, Listed) or isinstance(self.eta, Listed)


def algorithm_class(params: ParamSchedule, k0: int = 0) -> AlgorithmClass:
    """Most specific class containing ``params`` over ``k >= k0``."""
    for label in ("A_max", "A_ave_star", "A_ave"):
        if in_class(params, label, k0):
            return label  # type: ignore[return-value]
    return "A"


def in_class(params: ParamSchedule, label: AlgorithmClass, k0: int = 0) -> bool:
    ba, be = params.alpha.bounds(k0), params.eta.bounds(k0)
    if label == "A":
        return True
    if label == "A_max":
        return ba.identically(0.0) and be.identically(0.0)
    if label == "A_ave_star":
        return be.identically(0.0) and ba.all_positive() and ba.all_below_one()
    if label == "A_ave":
        return be.all_positive() and be.sup <= 1
    raise ValueError(f"unknown algorithm class {label!r}")


# -- JSON spec ---------------------------------------------------------------

def sequence_from_dict(d, path: str = "") -> Sequence:
    """Build a sequence from ``{"kind": ..., ...}``; a bare number means constant."""
    if isinstance(d, (int, float)) and not isinstance(d, bool):
        return Constant(float(d))
    if isinstance(d, list):
        return Listed(tuple(d))
    if not isinstance(d, dict) or "kind" not in d:
        raise ParamSpecError("expected a number, a list, or an object with 'kind'", path)
    kind = d["kind"]
    try:
        if kind == "constant":
            return Constant(float(d["value"]))
        if kind == "list":
            return Listed(tuple(float(v) for v in d["values"]))
        if kind == "power":
            return Power(float(d.get("c", 1.0)), float(d["p"]))
        if kind == "geometric":
            return Geometric(float(d.get("c", 1.0)), float(d["r"]))
        if kind == "one_minus":
            return OneMinus(sequence_from_dict(d["of"], f"{path}.of"))
    except KeyError as exc:
        raise ParamSpecError(f"missing field {exc.args[0]!r}", path) from None
    except ParamSpecError as exc:
        if exc.path:
            raise
        raise ParamSpecError(str(exc), path) from None
    raise ParamSpecError(f"unknown sequence kind {kind!r}", f"{path}.kind")


def sequence_to_dict(s: Sequence) -> dict:
    if isinstance(s, Constant):
        return {"kind": "constant", "value": s.value}
    if isinstance(s, Listed):
        return {"kind": "list", "values": list(s.values)}
    if isinstance(s, Power):
        return {"kind": "power", "c": s.c, "p": s.p}
    if isinstance(s, Geometric):
        return {"kind": "geometric", "c": s.c, "r": s.r}
    if isinstance(s, OneMinus):
        return {"kind": "one_minus", "of": sequence_to_dict(s.inner)}
    raise TypeError(f"not a sequence: {s!r}")


def params_from_dict(d: dict, path: str = "params") -> ParamSchedule:
    if not isinstance(d, dict):
        raise ParamSpecError("expected an object with 'alpha' and 'eta'", path)
    unknown = set(d) - {"alpha", "eta"}
    if unknown:
        raise ParamSpecError(f"unknown fields {sorted(unknown)}", path)
    alpha = sequence_from_dict(d.get("alpha", 0.0), f"{path}.alpha")
    eta = sequence_from_dict(d.get("eta", 0.0), f"{path}.eta")
    try:
        return ParamSchedule(alpha, eta)
    except ParamSpecError as exc:
        raise ParamSpecError(str(exc), path) from None


def params_to_dict(p: ParamSchedule) -> dict:
    return {"alpha": sequence_to_dict(p.alpha), "eta": sequence_to_dict(p.eta)}
