"""Generators for the four benchmark families.

Each generator returns ``{filename: content}``: one ``.dz`` problem plus the
CSV tables it loads.  Output depends only on the spec, so a fixed seed
gives byte-identical files.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

FAMILIES = ("portfolio", "foreign-keys", "how-to", "geo-box")

SMALL, MEDIUM, LARGE = 0, 1, 2


@dataclass
class BenchSpec:
    family: str
    rows: int = 10
    picks: int = 3
    symbolic_fraction: float = 1.0
    seed: int = 0
    sector_divisor: int = 3
    smallcap_divisor: int = 4
    amounts: Optional[Sequence[int]] = None
    absent: bool = False
    name: Optional[str] = None

    def validate(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        if self.rows < 1:
            raise ValueError("rows must be at least 1")
        if self.picks < 1:
            raise ValueError("picks must be at least 1")
        if not 0.0 <= self.symbolic_fraction <= 1.0:
            raise ValueError("symbolic fraction must lie in [0, 1]")
        if self.sector_divisor < 1 or self.smallcap_divisor < 1:
            raise ValueError("divisors must be positive")
        if self.amounts is not None and len(self.amounts) != self.picks:
            raise ValueError("need one amount per pick")
        if self.family == "portfolio" and self.picks > self.rows:
            raise ValueError("cannot pick more distinct stocks than rows")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def col(r: str, i: int, k: int) -> str:
    """Accessor for column ``i`` (0-based) of a right-nested ``k``-tuple bound to ``r``."""
    out = r
    for _ in range(i):
        out = f"(snd {out})"
    return out if i == k - 1 else f"(fst {out})"


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = ["# " + ",".join(header)]
    lines += [",".join(str(c) for c in row) for row in rows]
    return "\n".join(lines) + "\n"


def _sum(terms: List[str]) -> str:
    if not terms:
        return "0"
    return terms[0] if len(terms) == 1 else "(+ " + " ".join(terms) + ")"


def _conj(parts: List[str]) -> str:
    return parts[0] if len(parts) == 1 else "(and " + " ".join(parts) + ")"


@dataclass
class _Out:
    decls: List[str] = field(default_factory=list)
    tables: List[str] = field(default_factory=list)
    asserts: List[str] = field(default_factory=list)
    objective: Optional[str] = None

    def declare(self, name, lo, hi):
        self.decls.append(f"(declare-int {name} {lo} {hi})")

    def render(self, comment: str) -> str:
        lines = [f"; {comment}"] + self.decls + self.tables
        lines += [f"(assert {a})" for a in self.asserts]
        if self.objective:
            lines.append(self.objective)
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# portfolio


def portfolio_data(rows: int, rng: random.Random):
    n_sectors = max(2, min(6, rows // 2))
    stocks = [(i, rng.choice((SMALL, MEDIUM, LARGE)), rng.randrange(n_sectors)) for i in range(1, rows + 1)]
    quotes = [(i, rng.randint(80, 140)) for i in range(1, rows + 1)]
    return stocks, quotes


def gen_portfolio(spec: BenchSpec, rng: random.Random, name: str) -> Dict[str, str]:
    stocks, quotes = portfolio_data(spec.rows, rng)
    n = spec.picks
    amounts = list(spec.amounts) if spec.amounts is not None else [rng.randint(1, 9)] * n
    total = sum(amounts)
    sectors = sorted({s for _, _, s in stocks})
    max_diff = max(d for _, d in quotes)
    out = _Out()
    out.tables.append(f'(table stocks csv "{name}_stocks.csv")')
    out.tables.append(f'(table quotes csv "{name}_quotes.csv")')
    for i in range(1, n + 1):
        out.declare(f"x{i}", 1, spec.rows)
        out.declare(f"c{i}", SMALL, LARGE)
        out.declare(f"s{i}", 0, max(sectors))
        out.declare(f"d{i}", 0, max_diff)
    for i in range(1, n + 1):
        cond = _conj([f"(= {col('r', k, 3)} {v}{i})" for k, v in enumerate("xcs")])
        out.asserts.append(f"(exists (sel r {cond} stocks))")
        out.asserts.append(
            f"(exists (sel q (and (= (fst q) x{i}) (= (snd q) d{i})) quotes))")
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            out.asserts.append(f"(not (= x{i} x{j}))")
    # if-then-else terms: e_{i,s} = 1 iff pick i is in sector s, m_i = 1 iff it is smallcap
    for s in sectors:
        terms = []
        for i in range(1, n + 1):
            e = f"e{i}_{s}"
            out.declare(e, 0, 1)
            out.asserts.append(f"(or (and (= {e} 1) (= s{i} {s})) (and (= {e} 0) (not (= s{i} {s}))))")
            terms.append(f"(* {amounts[i - 1]} {e})")
        out.asserts.append(f"(<= (* {spec.sector_divisor} {_sum(terms)}) {total})")
    terms = []
    for i in range(1, n + 1):
        m = f"m{i}"
        out.declare(m, 0, 1)
        out.asserts.append(f"(or (and (= {m} 1) (= c{i} {SMALL})) (and (= {m} 0) (not (= c{i} {SMALL}))))")
        terms.append(f"(* {amounts[i - 1]} {m})")
    out.asserts.append(f"(<= (* {spec.smallcap_divisor} {_sum(terms)}) {total})")
    out.objective = "(maximize " + _sum([f"(* {amounts[i - 1]} d{i})" for i in range(1, n + 1)]) + ")"
    return {
        f"{name}.dz": out.render(f"portfolio: {n} picks from {spec.rows} stocks, amounts {amounts}"),
        f"{name}_stocks.csv": csv_text(("id", "cap", "sector"), stocks),
        f"{name}_quotes.csv": csv_text(("id", "diff"), quotes),
    }


# --------------------------------------------------------------------------
# foreign keys


def gen_foreign_keys(spec: BenchSpec, rng: random.Random, name: str) -> Dict[str, str]:
    n_depts = max(2, min(20, spec.rows // 50 + 2))
    employees = [(i, rng.randrange(n_depts)) for i in range(1, spec.rows + 1)]
    out = _Out()
    out.tables.append(f'(table employees csv "{name}_employees.csv")')
    n_symbolic = round(spec.picks * spec.symbolic_fraction)
    for r in range(1, spec.picks + 1):
        target = rng.choice(employees)
        out.declare(f"d{r}", 0, n_depts - 1)
        if r <= n_symbolic:
            out.declare(f"e{r}", 1, spec.rows)
            ident = f"e{r}"
            # a lower bound on the id keeps the lookup from being trivial
            out.asserts.append(f"(>= e{r} {rng.randint(1, target[0])})")
        else:
            ident = str(target[0])
        out.asserts.append(f"(= d{r} {target[1]})")
        out.asserts.append(
            f"(exists (sel y (and (= (fst y) {ident}) (= (snd y) d{r})) employees))")
    return {
        f"{name}.dz": out.render(f"foreign-keys: {spec.picks} references into {spec.rows} employees"),
        f"{name}_employees.csv": csv_text(("id", "dept"), employees),
    }


# --------------------------------------------------------------------------
# how-to (join with symbolic bonuses)


def gen_how_to(spec: BenchSpec, rng: random.Random, name: str) -> Dict[str, str]:
    employees = [(i, rng.randint(20, 65), rng.randint(30, 120)) for i in range(1, spec.rows + 1)]
    young = [e for e in employees if e[1] < 30] or employees[:1]
    threshold = max(b for _, _, b in young) + rng.randint(1, 60)
    out = _Out()
    out.tables.append(f'(table employees csv "{name}_employees.csv")')
    bonus_rows = []
    for j in range(1, spec.picks + 1):
        if rng.random() < spec.symbolic_fraction:
            out.declare(f"bid{j}", 1, spec.rows)
            out.declare(f"amt{j}", 0, 100)
            bonus_rows.append((f"?bid{j}", f"?amt{j}"))
        else:
            bonus_rows.append((rng.randint(1, spec.rows), rng.randint(0, 100)))
    amts = [f"amt{j}" for j in range(1, spec.picks + 1) if bonus_rows[j - 1][1] == f"?amt{j}"]
    out.tables.append("(table bonuses (" + " ".join(f"({a} {b})" for a, b in bonus_rows) + "))")
    emp, bonus = "(fst p)", "(snd p)"
    cond = _conj([
        f"(= {col(emp, 0, 3)} (fst {bonus}))",
        f"(< {col(emp, 1, 3)} 30)",
        f"(> (+ {col(emp, 2, 3)} (snd {bonus})) {threshold})",
    ])
    out.asserts.append(f"(exists (sel p {cond} (prod employees bonuses)))")
    if amts:
        out.asserts.append(f"(<= {_sum(amts)} {50 * len(amts)})")
    return {
        f"{name}.dz": out.render(f"how-to: push a young employee's income past {threshold}"),
        f"{name}_employees.csv": csv_text(("id", "age", "base"), employees),
    }


# --------------------------------------------------------------------------
# geo-box


def gen_geo_box(spec: BenchSpec, rng: random.Random, name: str) -> Dict[str, str]:
    n_species = max(2, min(10, spec.rows // 10 + 2))
    obs = []
    centres = [(rng.randint(0, 1000), rng.randint(0, 1000)) for _ in range(n_species)]
    for i in range(1, spec.rows + 1):
        s = rng.randrange(n_species)
        cx, cy = centres[s]
        obs.append((i, s, cx + rng.randint(-150, 150), cy + rng.randint(-150, 150)))
    species = n_species if spec.absent else rng.randrange(n_species)
    width = height = 200
    out = _Out()
    out.tables.append(f'(table observations csv "{name}_observations.csv")')
    for v in ("lox", "hix", "loy", "hiy"):
        out.declare(v, -200, 1200)
    out.asserts.append(f"(<= (- hix lox) {width})")
    out.asserts.append(f"(<= (- hiy loy) {height})")
    for i in range(1, spec.picks + 1):
        out.declare(f"o{i}", 1, spec.rows)
        cond = _conj([
            f"(= {col('r', 0, 4)} o{i})",
            f"(= {col('r', 1, 4)} {species})",
            f"(<= lox {col('r', 2, 4)})", f"(<= {col('r', 2, 4)} hix)",
            f"(<= loy {col('r', 3, 4)})", f"(<= {col('r', 3, 4)} hiy)",
        ])
        out.asserts.append(f"(exists (sel r {cond} observations))")
        if i > 1:
            out.asserts.append(f"(< o{i - 1} o{i})")
    return {
        f"{name}.dz": out.render(f"geo-box: {spec.picks} sightings of species {species} in a box"),
        f"{name}_observations.csv": csv_text(("obs", "species", "lon", "lat"), obs),
    }


_GENERATORS = {
    "portfolio": gen_portfolio,
    "foreign-keys": gen_foreign_keys,
    "how-to": gen_how_to,
    "geo-box": gen_geo_box,
}


def bench_gen(spec: BenchSpec) -> Dict[str, str]:
    spec.validate()
    rng = random.Random(f"{spec.family}/{spec.rows}/{spec.picks}/{spec.seed}")
    name = spec.name or f"{spec.family.replace('-', '_')}_{spec.rows}_{spec.picks}_{spec.seed}"
    return _GENERATORS[spec.family](spec, rng, name)


def write_files(files: Dict[str, str], outdir: str) -> List[str]:
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for fname, content in sorted(files.items()):
        path = os.path.join(outdir, fname)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        paths.append(path)
    return paths


def problem_file(files: Dict[str, str]) -> str:
    return next(f for f in sorted(files) if f.endswith(".dz"))
