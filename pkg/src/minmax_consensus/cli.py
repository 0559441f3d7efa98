"""Command-line front end: ``run``, ``sweep``, ``classify`` and ``check``.

Configs are JSON. Paths inside a config are resolved relative to the config
file; outputs go under ``--out`` (default: the current directory). Every
artifact is written with the fully resolved settings, defaults included, so a
run can be repeated from its metadata alone.

Exit status: 0 for any completed command whatever the scientific outcome,
2 for invalid input, 3 for file errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    ConditionVerdict,
    UndecidableError,
    check_block_product_condition,
    check_contraction_eq6,
    check_max_step_bounds,
    check_thm2_necessary,
    threshold_sweep,
)
from .dynamics import DEFAULT_TOL, default_max_steps, read_trace_csv, run, write_trace_csv
from .graph import EdgeListError, parse_edge_list, read_edge_list
from .neighbor_rules import RuleSpecError, rule_from_dict, rule_to_dict
from .params import ParamSpecError, params_from_dict, params_to_dict
from .schedule import GraphSchedule, ScheduleFormatError, classify, read_schedule, schedule_from_dict

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


# -- config helpers -------------------------------------------------------------

def _load_json(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError("", f"{path}: top level must be an object")
    return data


def _field(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _int(d: dict, key: str, path: str, default=None, minimum: int | None = None) -> int:
    v = d.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(_field(path, key), f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(_field(path, key), f"must be >= {minimum}, got {v}")
    return v


def _float(d: dict, key: str, path: str, default=None) -> float:
    v = d.get(key, default)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(_field(path, key), f"expected a number, got {v!r}")
    return float(v)


def _int_range(v, path: str) -> list[int]:
    """A list of integers or ``{"from": a, "to": b}`` (inclusive)."""
    if isinstance(v, dict):
        lo = _int(v, "from", path)
        hi = _int(v, "to", path)
        values = list(range(lo, hi + 1))
    elif isinstance(v, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in v):
        values = list(v)
    else:
        raise ConfigError(path, "expected a list of integers or {'from': int, 'to': int}")
    if not values:
        raise ConfigError(path, "range is empty")
    if min(values) < 1:
        raise ConfigError(path, "values must be >= 1")
    return values


def _initial_state(spec, path: str, seed_override: int | None) -> tuple[np.ndarray, object]:
    """Return the state and the resolved spec (for metadata)."""
    if isinstance(spec, list):
        if not spec or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in spec):
            raise ConfigError(path, "expected a non-empty list of numbers")
        return np.array(spec, dtype=float), spec
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(path, "expected a list of numbers or a generator object with 'kind'")
    kind = spec["kind"]
    n = _int(spec, "n", path, minimum=1)
    if kind == "linear":
        start = _float(spec, "start", path, 0.0)
        inc = _float(spec, "step", path, 1.0)
        return start + inc * np.arange(n), {"kind": kind, "n": n, "start": start, "step": inc}
    if kind == "seeded_uniform":
        seed = seed_override if seed_override is not None else _int(spec, "seed", path, 0)
        low = _float(spec, "low", path, 0.0)
        high = _float(spec, "high", path, 1.0)
        if not low < high:
            raise ConfigError(path, "need low < high")
        x = np.random.default_rng(seed).uniform(low, high, n)
        return x, {"kind": kind, "n": n, "seed": seed, "low": low, "high": high}
    raise ConfigError(f"{path}.kind", f"unknown generator {kind!r}")


def _topology(spec, path: str, base: Path):
    """Edge-list file, schedule file or neighbor rule; exactly one."""
    if not isinstance(spec, dict):
        raise ConfigError(path, "expected an object")
    sources = [k for k in ("edge_list", "schedule", "rule") if k in spec]
    if len(sources) != 1:
        raise ConfigError(path, "give exactly one of 'edge_list', 'schedule', 'rule'")
    src = sources[0]
    if src == "rule":
        try:
            return rule_from_dict(spec, path), rule_to_dict(rule_from_dict(spec, path))
        except RuleSpecError as exc:
            raise ConfigError("", str(exc)) from None
    file = base / spec[src]
    try:
        if src == "edge_list":
            g = read_edge_list(file)
            return g, {"edge_list": str(spec[src])}
        s = read_schedule(file)
    except (EdgeListError, ScheduleFormatError) as exc:
        raise ConfigError(f"{path}.{src}", f"{file}: {exc}") from None
    return s, {"schedule": str(spec[src])}


def _params(spec, path: str):
    try:
        return params_from_dict(spec, path)
    except ParamSpecError as exc:
        raise ConfigError("", str(exc)) from None


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return p


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- subcommands ------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg_path = Path(args.config)
    cfg = _load_json(cfg_path)
    base = cfg_path.parent
    for key in ("initial_state", "topology", "params"):
        if key not in cfg:
            raise ConfigError(key, "missing field")
    x0, x0_spec = _initial_state(cfg["initial_state"], "initial_state", args.seed)
    topology, topo_spec = _topology(cfg["topology"], "topology", base)
    params = _params(cfg["params"], "params")
    n = x0.size
    if hasattr(topology, "n") and topology.n != n:
        raise ConfigError("topology", f"has {topology.n} nodes, initial_state has {n}")
    max_steps = args.max_steps if args.max_steps is not None else _int(cfg, "max_steps", "", default_max_steps(n), 0)
    tol = args.tol if args.tol is not None else _float(cfg, "tol", "", DEFAULT_TOL)
    if tol <= 0:
        raise ConfigError("tol", "must be positive")
    k0 = _int(cfg, "k0", "", 0, 0)
    exact = bool(cfg.get("exact", False))
    stop_at_tol = bool(cfg.get("stop_at_tol", True))
    outputs = cfg.get("outputs", {})
    if not isinstance(outputs, dict):
        raise ConfigError("outputs", "expected an object")
    trace_name = outputs.get("trace", "trace.csv")
    meta_name = outputs.get("metadata", "run.json")
    wide = bool(outputs.get("wide", True))

    trace = run(x0, topology, params, max_steps=max_steps, tol=tol, k0=k0,
                stop_at_tol=stop_at_tol, exact=exact)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(trace, out / trace_name, wide=wide)
    meta = {
        "command": "run",
        "version": __version__,
        "config": {
            "initial_state": x0_spec,
            "topology": topo_spec,
            "params": params_to_dict(params),
            "k0": k0,
            "max_steps": max_steps,
            "tol": tol,
            "exact": exact,
            "stop_at_tol": stop_at_tol,
            "outputs": {"trace": trace_name, "metadata": meta_name, "wide": wide},
        },
        "result": {
            "outcome": trace.outcome,
            "finite_time_step": trace.finite_time_step,
            "asymptotic_converged": trace.asymptotic_converged,
            "consensus_value": trace.consensus_value,
            # asymptotic runs report (h+H)/2 at stop, uncertain by phi/2
            "consensus_value_kind": {"finite_time": "exact", "asymptotic": "midpoint"}.get(trace.outcome),
            "steps": trace.steps,
            "final_phi": trace.final_phi,
        },
    }
    _write(out, meta_name, _dump(meta))
    print(trace.summary())
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_json(Path(args.config))
    rule = cfg.get("rule")
    if rule not in ("nearest_neighbor", "nearest_value"):
        raise ConfigError("rule", f"expected 'nearest_neighbor' or 'nearest_value', got {rule!r}")
    if "mu" not in cfg or "n" not in cfg:
        raise ConfigError("mu" if "mu" not in cfg else "n", "missing field")
    mus = _int_range(cfg["mu"], "mu")
    ns = _int_range(cfg["n"], "n")
    params = _params(cfg.get("params", {"alpha": 0.5, "eta": 0.0}), "params")
    trials = _int(cfg, "trials", "", 20, 1)
    budget = args.max_steps if args.max_steps is not None else _int(cfg, "budget", "", 10_000, 0)
    seed = args.seed if args.seed is not None else _int(cfg, "seed", "", 0)
    tol = args.tol if args.tol is not None else _float(cfg, "tol", "", DEFAULT_TOL)
    if tol <= 0:
        raise ConfigError("tol", "must be positive")
    exact = bool(cfg.get("exact", True))
    workers = args.threads if args.threads is not None else _int(cfg, "threads", "", 1, 1)
    outputs = cfg.get("outputs", {})
    sweep_name = outputs.get("sweep", "sweep.csv")
    meta_name = outputs.get("metadata", "sweep.json")
    try:
        report = threshold_sweep(ns, mus, rule, params, trials, budget,
                                 seed=seed, tol=tol, exact=exact, workers=workers)
    except ValueError as exc:
        raise ConfigError("params", str(exc)) from None
    out = Path(args.out)
    _write(out, sweep_name, report.to_csv())
    meta = {
        "command": "sweep",
        "version": __version__,
        "config": {
            "rule": rule, "mu": mus, "n": ns, "params": params_to_dict(params),
            "trials": trials, "budget": budget, "seed": seed, "tol": tol, "exact": exact,
            "outputs": {"sweep": sweep_name, "metadata": meta_name},
        },
        "thresholds": {str(mu): b for mu, b in report.thresholds.items()},
        "expected": {str(mu): e for mu, e in report.expected.items()},
    }
    _write(out, meta_name, _dump(meta))
    n_min = min(ns)
    for mu in mus:
        b = report.thresholds[mu]
        shown = f"<{n_min}" if b is None else str(b)
        print(f"rule={rule} mu={mu} boundary={shown} expected={report.expected[mu]}")
    return EXIT_OK


def _read_schedule_or_graph(path: Path) -> GraphSchedule:
    text = path.read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        try:
            return schedule_from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ScheduleFormatError(f"line {exc.lineno}: {exc.msg}") from None
    return GraphSchedule.fixed(parse_edge_list(text))


def cmd_classify(args) -> int:
    path = Path(args.schedule)
    try:
        s = _read_schedule_or_graph(path)
    except (ScheduleFormatError, EdgeListError) as exc:
        raise ConfigError("", f"{path}: {exc}") from None
    if args.max_window is not None and args.max_window < 1:
        raise ConfigError("max_window", "must be >= 1")
    cc = classify(s, args.max_window)
    text = _dump(cc.to_dict())
    if args.out is not None:
        _write(Path(args.out), "classify.json", text)
    sys.stdout.write(text)
    return EXIT_OK


CONDITIONS = ("eq20", "eq21", "thm5_eq", "thm2", "eq6", "step_bounds")


def _check(cfg: dict, base: Path) -> ConditionVerdict:
    cond = cfg.get("condition")
    if cond not in CONDITIONS:
        raise ConfigError("condition", f"unknown condition {cond!r}; expected one of {', '.join(CONDITIONS)}")
    params = _params(cfg.get("params", {}), "params")
    k0 = _int(cfg, "k0", "", 0, 0)
    if cond in ("eq20", "eq21", "thm5_eq"):
        n = _int(cfg, "n", "", minimum=3)
        B = _int(cfg, "B", "", minimum=1)
        return check_block_product_condition(params, n, B, cond)
    if cond == "thm2":
        try:
            return check_thm2_necessary(params, k0)
        except ValueError as exc:
            raise ConfigError("params", str(exc)) from None
    if "trace" not in cfg:
        raise ConfigError("trace", "missing field")
    trace = read_trace_csv(base / cfg["trace"])
    if cond == "eq6":
        n = _int(cfg, "n", "", minimum=2)
        B = _int(cfg, "B", "", minimum=1)
        L = (n - 1) ** 2 * B
        if "schedule" not in cfg:
            return ConditionVerdict("eq6", "undecidable", L, "no connectivity certificate: give 'schedule' so the window B can be verified")
        try:
            cc = classify(_read_schedule_or_graph(base / cfg["schedule"]), max_window=B)
        except (ScheduleFormatError, EdgeListError) as exc:
            raise ConfigError("schedule", str(exc)) from None
        if not cc.uniformly_jointly_qsc:
            return ConditionVerdict("eq6", "undecidable", L, f"schedule is not uniformly jointly quasi-strongly connected with window {B}")
        try:
            ok = check_contraction_eq6(trace, params, n, B)
        except UndecidableError as exc:
            return ConditionVerdict("eq6", "undecidable", L, str(exc))
        except ValueError as exc:
            raise ConfigError("params", str(exc)) from None
        return ConditionVerdict("eq6", "holds" if ok else "fails", L, f"aligned blocks of length {L} from k={trace.k0}")
    # step_bounds
    if "topology" not in cfg:
        raise ConfigError("topology", "missing field")
    topology, _ = _topology(cfg["topology"], "topology", base)
    n = cfg.get("n", trace.n if trace.n is not None else getattr(topology, "n", None))
    if n is None:
        raise ConfigError("n", "needed when the trace has no state columns")
    try:
        ok = check_max_step_bounds(trace, {"topology": topology, "params": params, "n": n})
    except ValueError as exc:
        return ConditionVerdict("step_bounds", "undecidable", None, str(exc))
    return ConditionVerdict("step_bounds", "holds" if ok else "fails", None,
                            f"finite_time_step={trace.finite_time_step}")


def cmd_check(args) -> int:
    cfg_path = Path(args.config)
    verdict = _check(_load_json(cfg_path), cfg_path.parent)
    text = _dump(verdict.to_dict())
    if args.out is not None:
        _write(Path(args.out), "verdict.json", text)
    sys.stdout.write(text)
    return EXIT_OK


# -- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="minmax-consensus", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default):
        sp.add_argument("--out", default=out_default, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--max-steps", type=int, default=None, help="override max_steps / budget")
        sp.add_argument("--tol", type=float, default=None, help="override the consensus tolerance")
        sp.add_argument("--threads", type=int, default=None, help="worker processes for sweeps")

    r = sub.add_parser("run", help="simulate one configuration and write a trace")
    r.add_argument("--config", required=True)
    common(r, ".")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="finite-time threshold sweep over (n, mu)")
    s.add_argument("--config", required=True)
    common(s, ".")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("classify", help="joint connectivity of a schedule or edge-list file")
    c.add_argument("schedule")
    c.add_argument("--max-window", type=int, default=None)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_classify)

    k = sub.add_parser("check", help="evaluate a convergence condition")
    k.add_argument("--config", required=True)
    k.add_argument("--out", default=None)
    k.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("max_steps", "threads"):
        v = getattr(args, name, None)
        if v is not None and v < (1 if name == "threads" else 0):
            print(f"error: --{name.replace('_', '-')} out of range: {v}", file=sys.stderr)
            return EXIT_INVALID
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, RuleSpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
