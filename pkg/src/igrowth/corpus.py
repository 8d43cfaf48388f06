"""Built-in grammar corpus with verified caps and expected results.

Grammar texts ship as package data in ``grammars/<name>.ig``.  Each entry
says how far it is checked, which engines run, and what the coefficients must
equal.  Expected results are written as comparison specs, the same strings the
``compare`` command accepts:

    partitions | tau | sigma | phi | pow2_floor_sqrt   built-in references
    rational:P/Q                                        expansion of P(z)/Q(z)
    coeffs:c0,c1,...                                    explicit list
    file:<path>                                         list read from a file
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from math import gcd
from pathlib import Path
from typing import Optional, Sequence

from .grammar import Grammar, parse_grammar
from .series import REFERENCE_KINDS, CountVector, TruncSeries, expand_rational, \
    reference_sequence


class SpecError(ValueError):
    """Malformed comparison spec."""


# --------------------------------------------------------------------------
# comparison specs


def parse_rational(text: str) -> tuple[list[int], list[int]]:
    """Integer coefficient lists (P, Q) with Q(0) = +-1 for an expression in z."""
    import sympy
    from sympy.parsing.sympy_parser import (convert_xor, implicit_multiplication,
                                            parse_expr, standard_transformations)

    z = sympy.Symbol("z")
    try:
        expr = parse_expr(text, local_dict={"z": z}, evaluate=True,
                          transformations=standard_transformations
                          + (implicit_multiplication, convert_xor))
    except Exception as exc:  # sympy raises a zoo of types for bad input
        raise SpecError(f"cannot parse rational function {text!r}: {exc}") from None
    if expr.free_symbols - {z}:
        raise SpecError(f"only the variable z may appear, got {sorted(map(str, expr.free_symbols))}")
    num, den = sympy.fraction(sympy.together(sympy.sympify(expr)))
    try:
        p = sympy.Poly(num, z)
        q = sympy.Poly(den, z)
    except sympy.PolynomialError as exc:
        raise SpecError(f"not a rational function of z: {text!r}") from exc
    q0 = q.eval(0)
    if q0 == 0:
        raise SpecError(f"denominator vanishes at z = 0 in {text!r}")
    pc = [Fraction(str(c)) / Fraction(str(q0)) for c in reversed(p.all_coeffs())]
    qc = [Fraction(str(c)) / Fraction(str(q0)) for c in reversed(q.all_coeffs())]
    if any(c.denominator != 1 for c in pc + qc):
        raise SpecError(f"coefficients of {text!r} are not integral after normalizing Q(0) = 1")
    return [int(c) for c in pc], [int(c) for c in qc]


def parse_coeff_list(text: str) -> list[int]:
    parts = text.replace(",", " ").replace("[", " ").replace("]", " ").split()
    try:
        return [int(x) for x in parts]
    except ValueError as exc:
        raise SpecError(f"bad coefficient list: {exc}") from None


def resolve_spec(spec: str, n: int) -> CountVector:
    """Coefficients c_0..c_N described by a comparison spec."""
    spec = spec.strip()
    if spec in REFERENCE_KINDS:
        return reference_sequence(spec, n)
    kind, _, rest = spec.partition(":")
    if kind == "rational" and rest:
        p, q = parse_rational(rest)
        return CountVector(expand_rational(p, q, n).coeffs, mode="reference")
    if kind == "coeffs" and rest:
        cs = parse_coeff_list(rest)
    elif kind == "file" and rest:
        try:
            cs = parse_coeff_list(Path(rest).read_text())
        except OSError as exc:
            raise SpecError(f"{rest}: {exc.strerror}") from None
    else:
        raise SpecError(f"unknown comparison spec {spec!r}; expected one of "
                        f"{', '.join(REFERENCE_KINDS)}, rational:P/Q, coeffs:..., file:...")
    if len(cs) < n + 1:
        raise SpecError(f"spec lists {len(cs)} coefficients, {n + 1} needed")
    return CountVector(tuple(cs[: n + 1]), mode="reference")


@dataclass
class Verdict:
    equal: bool
    first_diff: Optional[int] = None
    got: Optional[int] = None
    expected: Optional[int] = None

    def __str__(self) -> str:
        if self.equal:
            return "EQUAL"
        return f"DIFFER at n={self.first_diff}: got {self.got}, expected {self.expected}"


def compare_coeffs(got: Sequence[int], expected: Sequence[int], start: int = 0) -> Verdict:
    """Compare from index ``start`` through the shorter of the two vectors."""
    for k in range(start, min(len(got), len(expected))):
        if got[k] != expected[k]:
            return Verdict(False, k, got[k], expected[k])
    return Verdict(True)


# --------------------------------------------------------------------------
# entries


@dataclass(frozen=True)
class Check:
    spec: str
    mode: str = "words"  # words | derivations
    start: int = 0
    note: str = ""


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    description: str
    order: int  # N for both engines unless overridden
    methods: tuple[str, ...] = ("oracle", "dsv")
    checks: tuple[Check, ...] = ()
    balance: tuple[Fraction, int] = (Fraction(1), 1)
    oracle_len: Optional[int] = None
    dsv_order: Optional[int] = None
    depth: Optional[int] = None
    key_mode: str = "auto"
    max_forms: int = 2_000_000
    ambiguous: bool = False
    expected_open: bool = False
    grid: Optional[tuple[str, str, int]] = None  # (x terminal, y terminal, side) coprime grid
    runtime_s: float = 2.0

    @property
    def text(self) -> str:
        return grammar_text(self.name)

    def grammar(self) -> Grammar:
        return load_grammar(self.name)

    @property
    def oracle_max_len(self) -> int:
        return self.oracle_len if self.oracle_len is not None else self.order

    @property
    def solver_order(self) -> int:
        return self.dsv_order if self.dsv_order is not None else self.order


def grammar_text(name: str) -> str:
    return resources.files(__package__).joinpath("grammars").joinpath(f"{name}.ig").read_text()


@lru_cache(maxsize=None)
def load_grammar(name: str) -> Grammar:
    return parse_grammar(grammar_text(name))


def _indicator(ns, n) -> str:
    return "coeffs:" + ",".join("1" if k in ns else "0" for k in range(n + 1))


def _serial_formula(n: int) -> str:
    total = TruncSeries.zero(n)
    for j in range(1, n // 3 + 1):
        q = [1] + [0] * (3 * j)
        q[j] -= 1
        q[2 * j] -= 1
        q[3 * j] += 1  # (1 - z^j)(1 - z^2j)
        total = total + expand_rational([0] * (3 * j) + [1], q, n)
    return "coeffs:" + ",".join(map(str, total.coeffs))


_COMPOSITES = {4, 6, 8, 9, 10, 12, 14, 15, 16, 18, 20, 21, 22, 24}
# ordered factorizations c = d * e with 1 < d, e < c
_COMPOSITE_DERIVATIONS = "coeffs:0,0,0,0,1,0,2,0,2,1,2,0,4,0,2,2,3,0,4,0,4,2,2,0,6"

ENTRIES: tuple[CorpusEntry, ...] = (
    CorpusEntry("anbncn", "a^n b^n c^n for n >= 1", 30,
                checks=(Check("rational:z^3/(1-z^3)"),)),
    CorpusEntry("sqr", "unary words of length 2^n", 64,
                checks=(Check(_indicator({1, 2, 4, 8, 16, 32, 64}, 64)),), balance=(Fraction(1), 0)),
    CorpusEntry("gm_partitions", "one word per integer partition", 20,
                checks=(Check("partitions", start=1),)),
    CorpusEntry("intermediate", "coefficients 2^floor(sqrt n)", 25,
                checks=(Check("pow2_floor_sqrt"),)),
    CorpusEntry("hard_recursion", "two intertwined stack recursions, no closed form", 12,
                checks=()),
    CorpusEntry("serial", "serially loaded stacks g* then f*", 15,
                checks=(Check(_serial_formula(15)),)),
    CorpusEntry("ordering", "stack order changes the word, so Parikh keys are unsound", 12,
                depth=13, key_mode="exact_stack"),
    CorpusEntry("double_ww", "copy language ww over {a, b}", 20,
                checks=(Check("rational:1/(1-2z^2)"),), key_mode="parikh_tuple"),
    CorpusEntry("divisors", "one word per divisor of n", 30,
                checks=(Check("tau"),)),
    CorpusEntry("composites", "unary composites, ambiguous (ordered factorizations)", 24,
                checks=(Check(_indicator(_COMPOSITES, 24)),
                        Check(_COMPOSITE_DERIVATIONS, mode="derivations")),
                ambiguous=True, balance=(Fraction(1), 0)),
    CorpusEntry("sigma", "divisor grammar extended to count sigma(n)", 24,
                checks=(Check("sigma"),)),
    CorpusEntry("bg_simplified", "cutting sequences to coprime lattice points", 20,
                checks=(Check("phi"),), oracle_len=24, dsv_order=10,
                grid=("v", "h", 12), runtime_s=5.0),
    CorpusEntry("bg_full", "cutting sequences to all interior lattice points", 20,
                checks=(Check("rational:z^2/(1-z)^2"),), dsv_order=10, runtime_s=5.0),
    CorpusEntry("amb_quad", "a^i b^j a^k b^l with i = k or j = l, split disjointly", 20,
                checks=(Check("rational:z^4(1+3z)/((1-z)^3(1+z)^2)"),)),
    CorpusEntry("cs_exercise", "a^n b^m c^p with m = n > 0 or m = p > 0, authored here", 20,
                checks=(Check("rational:z^2/((1-z^2)(1-z^3)) + z^4/((1-z^3)(1-z)) "
                              "+ z^2/((1-z)(1-z^2))", note="formula derived for the split"),),
                expected_open=True),
)

BY_NAME = {e.name: e for e in ENTRIES}


def get_entry(name: str) -> CorpusEntry:
    try:
        return BY_NAME[name]
    except KeyError:
        raise KeyError(f"no corpus entry {name!r}; known: {', '.join(BY_NAME)}") from None


# --------------------------------------------------------------------------
# running an entry


@dataclass
class EntryResult:
    name: str
    passed: bool
    lines: list[str] = field(default_factory=list)
    seconds: float = 0.0

    def report(self) -> str:
        head = f"{'PASS' if self.passed else 'FAIL'}  {self.name}  ({self.seconds:.2f} s)"
        return "\n".join([head] + ["    " + ln for ln in self.lines])


def coprime_grid_mismatches(grid, side: int) -> list[tuple[int, int]]:
    bad = []
    for i in range(side + 1):
        for j in range(side + 1):
            want = 1 if i >= 1 and j >= 1 and gcd(i, j) == 1 else 0
            if grid.get((i, j), 0) != want:
                bad.append((i, j))
    return bad


def run_entry(entry: CorpusEntry) -> EntryResult:
    from .dsv import EvalConfig, SolverError, solve
    from .oracle import DerivationConfig, ambiguous_words, enumerate_words
    from .series import BivariateGrid, diagonal_sum

    t0 = time.perf_counter()
    g = entry.grammar()
    res = EntryResult(entry.name, True)

    def fail(msg):
        res.passed = False
        res.lines.append("FAIL " + msg)

    words = derivs = solver = None
    if "oracle" in entry.methods:
        n = entry.oracle_max_len
        wc = enumerate_words(g, DerivationConfig(max_len=n, balance=entry.balance,
                                                 max_forms=entry.max_forms))
        words, derivs = [0] * (n + 1), [0] * (n + 1)
        for w, c in wc.counts.items():
            words[len(w)] += 1
            derivs[len(w)] += c
        res.lines.append(f"oracle  max_len={n}  words={len(wc)}  truncated={wc.truncated}")
        if wc.truncated:
            fail("oracle hit a budget; counts are incomplete")
        amb = ambiguous_words(wc)
        if bool(amb) != entry.ambiguous:
            fail(f"ambiguity expected={entry.ambiguous}, found {amb[:3]}")
        if entry.grid:
            x, y, side = entry.grid
            cells: dict[tuple[int, int], int] = {}
            for w in wc.counts:
                key = (w.count(x), w.count(y))
                cells[key] = cells.get(key, 0) + 1
            bad = coprime_grid_mismatches(cells, side)
            if bad:
                fail(f"grid differs from the coprime indicator at {bad[:5]}")
            else:
                res.lines.append(f"grid {side}x{side} on ({x},{y}) equals the coprime indicator")
            # coefficients now come from the grid's diagonals
            diag = diagonal_sum(BivariateGrid.from_mapping(cells, n, n, max_total=n), entry.order)
            words = list(diag.coeffs)
    if "dsv" in entry.methods:
        cfg = EvalConfig(order=entry.solver_order, depth_cap=entry.depth, balance=entry.balance,
                         key_mode=entry.key_mode, ambiguity_probe=0)
        try:
            solver = solve(g, cfg)
        except SolverError as exc:
            fail(f"solver: {exc}")
        else:
            res.lines.append(f"dsv     N={cfg.order}  keys={solver.keys}  mode={solver.key_mode}"
                             f"  class={solver.loading_class}  cap={solver.depth_cap}")
            if derivs is not None:
                v = compare_coeffs(solver.coeffs, derivs)
                res.lines.append(f"dsv vs oracle derivations: {v}")
                if not v.equal:
                    res.passed = False
    for chk in entry.checks:
        got = (derivs if chk.mode == "derivations" else words)
        if got is None and solver is not None and (chk.mode == "derivations" or not entry.ambiguous):
            got = solver.coeffs
        if got is None:
            fail(f"no engine produced {chk.mode} counts for {chk.spec[:40]}")
            continue
        n = min(len(got) - 1, entry.order)
        expected = resolve_spec(chk.spec, n)
        v = compare_coeffs(got[: n + 1], expected.coeffs, chk.start)
        label = chk.spec if len(chk.spec) <= 48 else chk.spec[:45] + "..."
        res.lines.append(f"{chk.mode:<11} vs {label}: {v}")
        if not v.equal:
            res.passed = False
    res.seconds = time.perf_counter() - t0
    return res
