"""Functional-equation solver for indexed grammars.

Each (variable, stack) pair becomes its own unknown power series, truncated at
order N.  Contributions from stacks longer than a depth cap M are taken to be
zero; for a balanced grammar (stack length at most C*|w| + K) that is exact
through order N once M >= C*N + K.  Stack recursion through pushes therefore
ends at the cap, and what remains is a finite system solved by Kleene
iteration from zero, one strongly connected component at a time.

Memo keys are either exact stacks or, when every Parikh-equivalent pair of
stacks is known to give equal series, Parikh vectors of the stack.
"""

from __future__ import annotations

import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import Optional

from .grammar import Grammar, LoadingClass, Production, Stack, apply_production, \
    classify_loading, parikh_vector, stack_str
from .series import TruncSeries, _mul

log = logging.getLogger(__name__)

KEY_MODES = ("auto", "exact_stack", "parikh_tuple")


class SolverError(RuntimeError):
    pass


class NoStabilization(SolverError):
    pass


class DepthExhausted(SolverError):
    pass


class ParikhUnsound(SolverError):
    pass


# --------------------------------------------------------------------------
# equation view


@dataclass
class VarEquations:
    pop_rules: dict[str, list[Production]] = field(default_factory=dict)
    flat_rules: list[Production] = field(default_factory=list)
    push_rules: list[Production] = field(default_factory=list)


def _term(p: Production) -> str:
    """One product of the formal sum: terminals become z, epsilon becomes 1."""
    factors: list[str] = []
    z = 0
    for item in p.rhs:
        if isinstance(item, str):
            z += 1
            continue
        if z:
            factors.append("z" if z == 1 else f"z^{z}")
            z = 0
        factors.append(str(item))
    if z:
        factors.append("z" if z == 1 else f"z^{z}")
    return "·".join(factors) or "1"


@dataclass
class EquationSystem:
    grammar: Grammar
    equations: dict[str, VarEquations]

    def __getitem__(self, var: str) -> VarEquations:
        return self.equations[var]

    def rhs_expression(self, rules) -> str:
        return " + ".join(_term(p) for p in rules) or "0"

    def w_expression(self, var: str) -> str:
        """Sum over the alternatives of ``var`` that push nothing."""
        eq = self.equations[var]
        return self.rhs_expression(eq.flat_rules)

    def render(self) -> str:
        lines = []
        for v in self.grammar.variables:
            eq = self.equations[v]
            if eq.flat_rules or eq.push_rules:
                lines.append(f"{v} = {self.rhs_expression(eq.flat_rules + eq.push_rules)}")
            for sym, rules in eq.pop_rules.items():
                lines.append(f"{v}[{sym} ...] = {self.rhs_expression(rules)}")
        return "\n".join(lines)


def build_equation_view(g: Grammar) -> EquationSystem:
    eqs = {v: VarEquations() for v in g.variables}
    for p in g.productions:
        eq = eqs[p.lhs]
        if p.pop is not None:
            eq.pop_rules.setdefault(p.pop, []).append(p)
        elif any(w.push for w in p.rhs_vars):
            eq.push_rules.append(p)
        else:
            eq.flat_rules.append(p)
    return EquationSystem(g, eqs)


# --------------------------------------------------------------------------
# configuration and results


@dataclass
class EvalConfig:
    order: int
    depth_cap: Optional[int] = None
    max_rounds: Optional[int] = None
    key_mode: str = "auto"
    balance: Optional[tuple[Fraction, int]] = None
    # compare against a run at depth_cap + 1 and fail if they differ
    verify_depth: bool = True
    parikh_check_depth: Optional[int] = None
    # max_len for an oracle ambiguity probe; 0 disables it
    ambiguity_probe: int = 8
    max_keys: int = 1_000_000

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be >= 0")
        if self.key_mode not in KEY_MODES:
            raise ValueError(f"key_mode must be one of {KEY_MODES}")
        if self.depth_cap is not None and self.depth_cap < 1:
            raise ValueError("depth_cap must be >= 1")
        if self.max_rounds is not None and self.max_rounds < 2:
            raise ValueError("max_rounds must be >= 2")

    @property
    def cap(self) -> int:
        if self.depth_cap is not None:
            return self.depth_cap
        if self.balance is not None:
            c, k = self.balance
            return max(1, ceil(Fraction(c) * self.order + k))
        return 2 * self.order + 2

    @property
    def rounds(self) -> int:
        return self.max_rounds if self.max_rounds is not None else self.order + 2


@dataclass
class MemoTable:
    """Series per (variable, stack key); keys deeper than the cap are absent (zero)."""

    key_mode: str
    depth_cap: int
    indices: tuple[str, ...] = ()
    values: dict[tuple[str, tuple], TruncSeries] = field(default_factory=dict)
    representative: dict[tuple[str, tuple], Stack] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.values)

    def get(self, var: str, stack: Stack, order: int) -> TruncSeries:
        key = (var, _key_of(stack, self.key_mode, self.indices))
        return self.values.get(key, TruncSeries.zero(order))


@dataclass
class SolveResult:
    series: TruncSeries
    loading_class: str
    key_mode: str
    depth_cap: int
    stabilized: bool
    rounds: int
    keys: int
    warnings: list[str] = field(default_factory=list)
    memo: Optional[MemoTable] = None
    seconds: float = 0.0

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self.series.coeffs


def _key_of(stack: Stack, mode: str, indices) -> tuple:
    return parikh_vector(stack, indices) if mode == "parikh_tuple" else stack


# --------------------------------------------------------------------------
# core evaluation


class _System:
    """Discovered finite equation system at a fixed depth cap."""

    def __init__(self, g: Grammar, order: int, cap: int, mode: str, max_keys: int,
                 roots: list[tuple[str, Stack]]):
        self.g = g
        self.order = order
        self.cap = cap
        self.mode = mode
        self.keys: list[tuple[str, tuple]] = []
        self.reps: list[Stack] = []
        self.index: dict[tuple[str, tuple], int] = {}
        # per key: list of (terminal count, child key ids)
        self.terms: list[list[tuple[int, tuple[int, ...]]]] = []
        self.roots = [self._add(v, s) for v, s in roots]
        self._discover(max_keys)

    def _add(self, var: str, stack: Stack) -> int:
        key = (var, _key_of(stack, self.mode, self.g.indices))
        kid = self.index.get(key)
        if kid is None:
            kid = self.index[key] = len(self.keys)
            self.keys.append(key)
            self.reps.append(stack)
            self.terms.append(None)
        return kid

    def _discover(self, max_keys: int) -> None:
        g, cap, order = self.g, self.cap, self.order
        todo = list(self.roots)
        while todo:
            kid = todo.pop()
            if self.terms[kid] is not None:
                continue
            var, stack = self.keys[kid][0], self.reps[kid]
            terms = []
            for p in g.by_lhs[var]:
                if p.terminal_count > order:
                    continue
                stacks = apply_production(p, stack)
                if stacks is None or any(len(s) > cap for s in stacks):
                    continue
                children = []
                for w, s in zip(p.rhs_vars, stacks):
                    before = len(self.keys)
                    cid = self._add(w.name, s)
                    if len(self.keys) > before:
                        if len(self.keys) > max_keys:
                            raise SolverError(
                                f"more than {max_keys} memo keys at depth cap {cap}; "
                                "lower the order or the cap, or use Parikh keys")
                        todo.append(cid)
                    children.append(cid)
                terms.append((p.terminal_count, tuple(children)))
            self.terms[kid] = terms

    def _sccs(self) -> list[list[int]]:
        """Tarjan's algorithm, iterative; components come out children first."""
        n = len(self.keys)
        index = [-1] * n
        low = [0] * n
        on_stack = [False] * n
        stack: list[int] = []
        out: list[list[int]] = []
        counter = 0
        succ = [sorted({c for _, ch in ts for c in ch}) for ts in self.terms]
        for root in range(n):
            if index[root] != -1:
                continue
            work = [(root, 0)]
            index[root] = low[root] = counter
            counter += 1
            stack.append(root)
            on_stack[root] = True
            while work:
                v, i = work[-1]
                if i < len(succ[v]):
                    work[-1] = (v, i + 1)
                    w = succ[v][i]
                    if index[w] == -1:
                        index[w] = low[w] = counter
                        counter += 1
                        stack.append(w)
                        on_stack[w] = True
                        work.append((w, 0))
                    elif on_stack[w]:
                        low[v] = min(low[v], index[w])
                    continue
                work.pop()
                if work:
                    parent = work[-1][0]
                    low[parent] = min(low[parent], low[v])
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        comp.append(w)
                        if w == v:
                            break
                    out.append(comp)
        self.succ = succ
        return out

    def _eval_key(self, kid: int, val: list) -> Optional[tuple[int, ...]]:
        n = self.order
        acc = [0] * (n + 1)
        for tc, children in self.terms[kid]:
            if not children:
                acc[tc] += 1
                continue
            prod = None
            for c in children:
                v = val[c]
                if v is None:
                    prod = None
                    break
                prod = v[: n - tc + 1] if prod is None else _mul(prod, v, n - tc)
                if not any(prod):
                    prod = None
                    break
            if prod is None:
                continue
            for k in range(n - tc + 1):
                acc[k + tc] += prod[k]
        return tuple(acc) if any(acc) else None

    def solve(self, max_rounds: int) -> tuple[list, int]:
        """Values for every key (None for the zero series) and the most rounds any component took."""
        val: list = [None] * len(self.keys)
        worst = 1
        for comp in self._sccs():
            recursive = len(comp) > 1 or comp[0] in self.succ[comp[0]]
            if not recursive:
                val[comp[0]] = self._eval_key(comp[0], val)
                continue
            rounds = 0
            while True:
                rounds += 1
                if rounds > max_rounds:
                    names = ", ".join(f"{self.keys[k][0]}[{stack_str(self.reps[k])}]"
                                      for k in comp[:4])
                    raise NoStabilization(
                        f"values still changing after {max_rounds} rounds in a cycle through {names}")
                changed = False
                for kid in comp:
                    v = self._eval_key(kid, val)
                    if v != val[kid]:
                        val[kid] = v
                        changed = True
                if not changed:
                    break
            worst = max(worst, rounds)
        return val, worst

    def series(self, val, kid: int) -> TruncSeries:
        v = val[kid]
        return TruncSeries(v) if v is not None else TruncSeries.zero(self.order)


def _effective_mode(g: Grammar, cfg: EvalConfig, loading: LoadingClass, warnings: list) -> str:
    if cfg.key_mode == "exact_stack":
        return "exact_stack"
    depth = cfg.parikh_check_depth or min(cfg.cap, 8)
    if cfg.key_mode == "parikh_tuple":
        check = parikh_equivalence_check(g, depth, cfg.order)
        if not all(check.values()):
            bad = sorted(v for v, ok in check.items() if not ok)
            raise ParikhUnsound(f"Parikh-equivalent stacks give different series for {bad}")
        return "parikh_tuple"
    if loading.kind in ("single_index", "serial"):
        check = parikh_equivalence_check(g, depth, cfg.order)
        if all(check.values()):
            return "parikh_tuple"
        warnings.append("Parikh check failed; falling back to exact-stack keys")
    return "exact_stack"


def _run_at(g: Grammar, cfg: EvalConfig, mode: str, cap: int):
    system = _System(g, cfg.order, cap, mode, cfg.max_keys, [(g.start, ())])
    val, rounds = system.solve(cfg.rounds)
    return system, val, rounds


def eval_variable(g: Grammar, var: str, stack: Stack, cfg: EvalConfig,
                  memo: Optional[MemoTable] = None) -> TruncSeries:
    """Series of the sentential form ``var[stack]`` under the depth cap of ``cfg``.

    ``memo``, when given, receives every value computed along the way.
    """
    if var not in g.variables:
        raise ValueError(f"unknown variable {var!r}")
    mode = "exact_stack" if cfg.key_mode == "auto" else cfg.key_mode
    cap = max(cfg.cap, len(stack))
    system = _System(g, cfg.order, cap, mode, cfg.max_keys, [(var, tuple(stack))])
    val, _ = system.solve(cfg.rounds)
    if memo is not None:
        for kid, key in enumerate(system.keys):
            memo.values[key] = system.series(val, kid)
            memo.representative[key] = system.reps[kid]
    return system.series(val, system.roots[0])


def solve(g: Grammar, cfg: EvalConfig, keep_memo: bool = False) -> SolveResult:
    """Start series to order N; coefficient n counts derivations of words of length n."""
    t0 = time.perf_counter()
    warnings: list[str] = []
    loading = classify_loading(g)
    mode = _effective_mode(g, cfg, loading, warnings)
    cap = cfg.cap
    system, val, rounds = _run_at(g, cfg, mode, cap)
    series = system.series(val, system.roots[0])
    if cfg.verify_depth:
        system2, val2, _ = _run_at(g, cfg, mode, cap + 1)
        deeper = system2.series(val2, system2.roots[0])
        if deeper != series:
            first = next(k for k in range(cfg.order + 1) if deeper[k] != series[k])
            raise DepthExhausted(
                f"depth cap {cap} is too small: coefficient {first} changes at cap {cap + 1} "
                f"({series[first]} -> {deeper[first]})")
    if cfg.ambiguity_probe:
        from .oracle import DerivationConfig, ambiguity_scan

        probe = DerivationConfig(max_len=min(cfg.ambiguity_probe, cfg.order), max_forms=200_000)
        found = ambiguity_scan(g, probe)
        if found:
            word, count = found[0]
            warnings.append(
                f"ambiguous grammar: series counts derivations, not words "
                f"(e.g. {word} has {count} parse trees)")
    memo = None
    if keep_memo:
        memo = MemoTable(mode, cap, g.indices)
        for kid, key in enumerate(system.keys):
            memo.values[key] = system.series(val, kid)
            memo.representative[key] = system.reps[kid]
    return SolveResult(series, loading.kind, mode, cap, cfg.verify_depth, rounds, len(system.keys),
                       warnings, memo, time.perf_counter() - t0)


# --------------------------------------------------------------------------
# Parikh consolidation check


class ParikhCheck(dict):
    """variable -> bool, plus ``witnesses``: variable -> (stack, stack) that differ."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.witnesses: dict[str, tuple[Stack, Stack]] = {}


def parikh_equivalence_check(g: Grammar, depth: int, N: int) -> ParikhCheck:
    """Compare exact-key series across Parikh-equivalent reachable stacks.

    Every (variable, stack) reachable from the start with stack length at most
    ``depth`` is evaluated with exact keys under a depth cap of ``depth``;
    a variable passes when all of its Parikh-equivalent stacks agree through
    order N.
    """
    if depth < 2:
        raise ValueError("depth must be >= 2")
    system = _System(g, N, depth, "exact_stack", 2_000_000, [(g.start, ())])
    val, _ = system.solve(N + 2 + depth)
    groups: dict[tuple[str, tuple], list[int]] = defaultdict(list)
    for kid, (var, stack) in enumerate(system.keys):
        groups[(var, parikh_vector(stack, g.indices))].append(kid)
    result = ParikhCheck({v: True for v in g.variables})
    ordered = sorted(groups.items(), key=lambda kv: (len(system.reps[kv[1][0]]), kv[0]))
    for (var, _), members in ordered:
        members.sort(key=lambda k: (len(system.reps[k]), system.reps[k]))
        first = members[0]
        for other in members[1:]:
            if val[other] != val[first]:
                if result[var]:
                    result[var] = False
                    result.witnesses[var] = (system.reps[first], system.reps[other])
                break
    return result
