"""Command-line entry point.

Exit codes: 0 sat/optimal, 1 unsat/infeasible (or not existential for
``check-fragment``), 2 resource limit, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, TextIO

from . import bench, smtlib
from .core import DTypeError, is_existential, rank, typecheck
from .decompose import FragmentError
from .driver import Limits, SolveResult, eager_problem, solve_eager, solve_lazy
from .driver.search import DEFAULT_BOUND
from .frontend import ParseError, load
from .reduce import ReductionTooLarge

COMMANDS = ("solve", "solve-eager", "emit-smt", "rank", "check-fragment", "bench-gen")
EXIT = {"sat": 0, "optimal": 0, "unsat": 1, "infeasible": 1, "resource-limit": 2}
INPUT_ERROR = 3


@dataclass
class RunConfig:
    command: str
    inputs: List[str] = field(default_factory=list)
    out: Optional[str] = None
    time_limit: Optional[float] = None
    node_limit: Optional[int] = None
    default_bound: int = DEFAULT_BOUND
    format: str = "text"
    jobs: int = 1
    reduction_limit: Optional[int] = 2_000_000
    family: Optional[str] = None
    rows: int = 10
    picks: int = 3
    symbolic_fraction: float = 1.0
    seed: int = 0
    absent: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command}")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ValueError("--time-limit must be positive")
        if self.node_limit is not None and self.node_limit <= 0:
            raise ValueError("--node-limit must be positive")
        if self.default_bound <= 0:
            raise ValueError("--default-bound must be positive")
        if self.jobs < 1:
            raise ValueError("--jobs must be positive")
        if self.format not in ("text", "json-lines"):
            raise ValueError("--format must be text or json-lines")
        if self.command != "bench-gen" and not self.inputs:
            raise ValueError(f"{self.command} needs an input file")

    def limits(self, cancel: Optional[threading.Event] = None) -> Limits:
        return Limits(self.node_limit, self.time_limit, self.default_bound, cancel)


class _Report:
    def __init__(self, cfg: RunConfig, stream: TextIO):
        self.cfg = cfg
        self.stream = stream

    def emit(self, record: dict):
        record = {k: v for k, v in record.items() if k not in ("exit", "silent")}
        if self.cfg.format == "json-lines":
            self.stream.write(json.dumps(record, sort_keys=True) + "\n")
            return
        if "error" in record:
            self.stream.write(f"error: {record['error']}\n")
            return
        if "input" in record and self.cfg.command.startswith("solve") and len(self.cfg.inputs) > 1:
            self.stream.write(f"== {record['input']}\n")
        for key in ("status", "rank", "existential", "written"):
            if key in record:
                value = record[key]
                if isinstance(value, list):
                    value = " ".join(value)
                self.stream.write(f"{key}: {value}\n" if key != "status" else f"{value}\n")
        if record.get("objective") is not None:
            self.stream.write(f"objective: {record['objective']}\n")
        for name, value in record.get("model", {}).items():
            self.stream.write(f"  {name} = {value}\n")
        if "stats" in record:
            stats = record["stats"]
            self.stream.write("stats: " + " ".join(f"{k}={v}" for k, v in stats.items()) + "\n")


def _result_record(path: str, res: SolveResult) -> dict:
    rec = {"input": path, "status": res.status, "stats": res.stats.as_dict()}
    if res.model:
        rec["model"] = dict(sorted(res.model.items()))
    if res.objective is not None:
        rec["objective"] = res.objective
    return rec


def _solve_one(cfg: RunConfig, path: str, cancel: threading.Event) -> dict:
    problem = load(path)
    limits = cfg.limits(cancel)
    if cfg.command == "solve":
        res = solve_lazy(problem, limits, optimize_objective=True)
    else:
        res = solve_eager(problem, limits, limit=cfg.reduction_limit, optimize_objective=True)
    return _result_record(path, res)


def _guard(fn, path):
    try:
        return fn()
    except FragmentError as e:
        return {"input": path, "error": f"{e}; use solve-eager", "exit": INPUT_ERROR}
    except (ParseError, DTypeError, OSError, ValueError) as e:
        return {"input": path, "error": str(e), "exit": INPUT_ERROR}
    except ReductionTooLarge as e:
        return {"input": path, "status": "resource-limit", "error_detail": str(e), "exit": 2}


def run(cfg: RunConfig, stream: TextIO = None) -> int:
    """Execute ``cfg``; returns the process exit status."""
    stream = stream or sys.stdout
    report = _Report(cfg, stream)
    try:
        cfg.validate()
    except ValueError as e:
        report.emit({"error": str(e)})
        return INPUT_ERROR

    if cfg.command in ("solve", "solve-eager"):
        cancel = threading.Event()
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_guard, lambda p=p: _solve_one(cfg, p, cancel), p) for p in cfg.inputs]
            records = [f.result() for f in futures]
        code = 0
        for rec in records:
            report.emit(rec)
            c = rec.get("exit", EXIT.get(rec.get("status"), INPUT_ERROR))
            code = max(code, c)
        return code

    if cfg.command == "bench-gen":
        def gen():
            spec = bench.BenchSpec(cfg.family or "portfolio", rows=cfg.rows, picks=cfg.picks,
                                   symbolic_fraction=cfg.symbolic_fraction, seed=cfg.seed,
                                   absent=cfg.absent)
            files = bench.bench_gen(spec)
            paths = bench.write_files(files, cfg.out or ".")
            return {"written": paths, "exit": 0}
        rec = _guard(gen, None)
        report.emit(rec)
        return rec.get("exit", 0)

    path = cfg.inputs[0]

    def single():
        problem = load(path)
        typecheck(problem)
        if cfg.command == "rank":
            return {"input": path, "rank": rank(problem.assertion), "exit": 0}
        if cfg.command == "check-fragment":
            ok = is_existential(problem.assertion)
            return {"input": path, "existential": ok, "exit": 0 if ok else 1}
        out = cfg.out or (cfg.inputs[1] if len(cfg.inputs) > 1 else None)
        p = eager_problem(problem, cfg.reduction_limit)
        script = smtlib.emit_smtlib(p.qflia, p.bounds)
        if out is None:
            stream.write(script.text)
            return {"exit": 0, "silent": True}
        script.write(out)
        return {"input": path, "written": [out], "exit": 0}

    rec = _guard(single, path)
    if not rec.get("silent"):
        report.emit(rec)
    return rec["exit"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ilpmd",
        description="Solve linear integer constraints over tables with symbolic data.",
        epilog="Variables without declared bounds get +/- the default bound (2^30 unless "
               "--default-bound is given) so that branch-and-bound always terminates; "
               "results are complete only within those bounds.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("inputs", nargs="*", help="problem file(s) (.dz); emit-smt takes an optional output path")
    ap.add_argument("--out", help="output path (emit-smt) or directory (bench-gen)")
    ap.add_argument("--time-limit", type=float, help="seconds per solve")
    ap.add_argument("--node-limit", type=int, help="search nodes per solve")
    ap.add_argument("--default-bound", type=int, default=DEFAULT_BOUND,
                    help="magnitude of the bounds given to undeclared-range variables")
    ap.add_argument("--format", choices=("text", "json-lines"), default="text")
    ap.add_argument("--jobs", type=int, default=1, help="solve several inputs concurrently")
    ap.add_argument("--reduction-limit", type=int, default=2_000_000,
                    help="maximum guarded rows produced by the eager reduction")
    ap.add_argument("--family", choices=bench.FAMILIES)
    ap.add_argument("--rows", type=int, default=10)
    ap.add_argument("--picks", type=int, default=3)
    ap.add_argument("--symbolic-fraction", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--absent", action="store_true", help="geo-box: query a species not in the data")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_intermixed_args(argv)
    cfg = RunConfig(
        command=args.command, inputs=args.inputs, out=args.out, time_limit=args.time_limit,
        node_limit=args.node_limit, default_bound=args.default_bound, format=args.format,
        jobs=args.jobs, reduction_limit=args.reduction_limit, family=args.family, rows=args.rows,
        picks=args.picks, symbolic_fraction=args.symbolic_fraction, seed=args.seed,
        absent=args.absent)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
