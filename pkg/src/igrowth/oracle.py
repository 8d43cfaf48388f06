"""Exhaustive leftmost-derivation engine: the ground truth for word counts.

Sentential forms are tuples whose items are terminals (plain strings) or
:class:`Var` pairs of a variable name and its index stack.  Identical forms
reached along different derivation prefixes are merged with their
multiplicities added, which keeps derivation counts exact.

Pruning never drops a form that could still yield a word within ``max_len``
unless the result is flagged ``truncated``.  Provably dead forms are detected
with a lower bound on the length of every word a (variable, stack) pair can
yield; see :class:`_YieldBound`.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

from .grammar import BOTTOM, Grammar, Stack, apply_production
from .series import CountVector

INF = math.inf


class Var(NamedTuple):
    name: str
    stack: Stack = ()

    def __str__(self) -> str:
        return f"{self.name}[{' '.join(self.stack)}]" if self.stack else self.name


SententialForm = tuple  # items: str (terminal) | Var


@dataclass(frozen=True)
class DerivationConfig:
    max_len: int = 12
    max_stack: int = 64
    max_items: int = 64
    max_forms: int = 2_000_000
    # (C, K) known to bound stack length by C*|w| + K; stacks beyond that bound
    # are pruned without setting the truncation flag
    balance: Optional[tuple[Fraction, int]] = None

    def __post_init__(self):
        for name in ("max_len", "max_stack", "max_items", "max_forms"):
            if getattr(self, name) < 1 and not (name == "max_len" and self.max_len == 0):
                raise ValueError(f"{name} must be >= 1")

    def stack_bound(self) -> Optional[float]:
        if self.balance is None:
            return None
        c, k = self.balance
        return float(Fraction(c) * self.max_len + k)


@dataclass
class WordCounts:
    counts: dict[tuple[str, ...], int]
    truncated: bool = False
    forms_expanded: int = 0

    def __len__(self) -> int:
        return len(self.counts)

    def words(self) -> list[str]:
        return [word_str(w) for w in sorted(self.counts, key=lambda w: (len(w), w))]

    def as_strings(self) -> dict[str, int]:
        return {word_str(w): c for w, c in sorted(self.counts.items(), key=lambda kv: (len(kv[0]), kv[0]))}


@dataclass
class ParikhGrid:
    axes: tuple[str, ...]
    grid: dict[tuple[int, ...], int]
    truncated: bool = False
    max_len: Optional[int] = None

    def __getitem__(self, key: tuple[int, ...]) -> int:
        return self.grid.get(key, 0)


@dataclass
class BalanceEstimate:
    C: Fraction
    K: int
    witnessed_pairs: list[tuple[int, int]]
    satisfied: bool
    truncated: bool = False


def word_str(word: Sequence[str]) -> str:
    if not word:
        return "ε"
    return "".join(word) if all(len(t) == 1 for t in word) else " ".join(word)


# --------------------------------------------------------------------------


def _rewrite(g: Grammar, var: Var) -> list[tuple]:
    """Right-hand sides (as item tuples) that can replace ``var``."""
    out = []
    for p in g.by_lhs[var.name]:
        stacks = apply_production(p, var.stack)
        if stacks is None:
            continue
        it = iter(stacks)
        out.append(tuple(item if isinstance(item, str) else Var(item.name, next(it))
                         for item in p.rhs))
    return out


def step_expand(form: SententialForm, g: Grammar) -> list[SententialForm]:
    """All forms obtained by rewriting the leftmost variable of ``form``."""
    for k, item in enumerate(form):
        if isinstance(item, Var):
            return [form[:k] + rhs + form[k + 1:] for rhs in _rewrite(g, item)]
    raise ValueError("form has no variable to expand")


class _YieldBound:
    """Lower bounds on the length of words derivable from (variable, stack).

    For a concrete stack sigma the bound is the exact minimum of an abstract
    grammar over states (V, u, sigma): ``u`` symbols of unknown identity sit
    on top of the known suffix sigma.  Pushes onto a non-empty stack become
    unknown symbols, pops of unknown symbols may use any pop rule, and ``u``
    is clamped to a cap whose class stands for every larger count.  Every
    concrete derivation maps onto an abstract one of equal yield, so the
    abstract minimum never exceeds the real one.

    Values saturate at ``limit``.  A suffix table depends only on the top
    symbol and the table below it, so tables are interned and shared.
    """

    def __init__(self, g: Grammar, limit: int, unknown_cap: int = 6):
        self.g = g
        self.cap = unknown_cap
        self.limit = limit
        self.var_ix = {v: i for i, v in enumerate(g.variables)}
        # per production: (lhs index, pop, terminals, ((rhs index, push length, push), ...))
        self.rules = [
            (self.var_ix[p.lhs], p.pop, p.terminal_count,
             tuple((self.var_ix[w.name], len(w.push), w.push) for w in p.rhs_vars))
            for p in g.productions
        ]
        self.free = self._fixpoint(lambda r, val: r[2] + sum(val[w] for w, _, _ in r[3]))
        self.empty = self._fixpoint(
            lambda r, val: r[2] + sum(self.free[w] if n else val[w] for w, n, _ in r[3]),
            only=lambda r: r[1] is None)
        self.store: list[tuple] = []
        self.interned: dict[tuple, int] = {}
        self.by_stack: dict[Stack, int] = {}
        self.by_parts: dict[tuple[str, int], int] = {}

    def _sat(self, x) -> float:
        return x if x < self.limit else self.limit

    def _fixpoint(self, cost, only=lambda r: True) -> list:
        val = [INF] * len(self.g.variables)
        changed = True
        while changed:
            changed = False
            for r in self.rules:
                if only(r):
                    c = self._sat(cost(r, val))
                    if c < val[r[0]]:
                        val[r[0]] = c
                        changed = True
        return val

    def _intern(self, table: list) -> int:
        key = tuple(table)
        tid = self.interned.get(key)
        if tid is None:
            tid = self.interned[key] = len(self.store)
            self.store.append(key)
        return tid

    def bound(self, var: str, stack: Stack) -> float:
        tid = self.by_stack.get(stack)
        if tid is None:
            tid = self._solve(stack)
        return self.store[tid][self.var_ix[var] * (self.cap + 1)]

    def _solve(self, stack: Stack) -> int:
        if not stack:
            self.by_stack[stack] = self._solve_empty()
            return self.by_stack[stack]
        # suffix tables only consult shorter non-empty suffixes
        chain = []
        s = stack
        while s and s not in self.by_stack:
            chain.append(s)
            s = s[1:]
        for s in reversed(chain):
            below = self.by_stack[s[1:]] if len(s) > 1 else -1
            key = (s[0], below)
            tid = self.by_parts.get(key)
            if tid is None:
                tid = self.by_parts[key] = self._solve_suffix(s[0], below)
            self.by_stack[s] = tid
        return self.by_stack[stack]

    def _solve_empty(self) -> int:
        # only u = 0 is reachable on the empty stack; pushes become concrete stacks
        n, w1 = len(self.g.variables), self.cap + 1
        val = [INF] * n
        changed = True
        while changed:
            changed = False
            for lhs, pop, tc, rhs in self.rules:
                if pop is not None:
                    continue
                cost = tc
                for w, k, push in rhs:
                    cost += self.bound(self.g.variables[w], push) if k else val[w]
                cost = self._sat(cost)
                if cost < val[lhs]:
                    val[lhs] = cost
                    changed = True
        table = [INF] * (n * w1)
        for i, x in enumerate(val):
            table[i * w1] = x
        return self._intern(table)

    def _solve_suffix(self, top: str, below: int) -> int:
        cap, w1 = self.cap, self.cap + 1
        low = self.store[below] if below >= 0 else None
        val = [INF] * (len(self.g.variables) * w1)
        sat = self._sat
        changed = True
        while changed:
            changed = False
            for lhs, pop, tc, rhs in self.rules:
                for u in range(w1):
                    if pop is None:
                        residual, src = (u,), val
                    elif u > 0:
                        if pop == BOTTOM:
                            continue
                        residual, src = ((u - 1,) if u < cap else (cap - 1, cap)), val
                    elif top != pop:
                        continue
                    elif low is not None:
                        residual, src = (0,), low
                    else:
                        cost = sat(tc + sum(self.free[w] if k else self.empty[w] for w, k, _ in rhs))
                        if cost < val[lhs * w1]:
                            val[lhs * w1] = cost
                            changed = True
                        continue
                    cost = tc
                    for w, k, push in rhs:
                        if k and push[-1] == BOTTOM:
                            cost = INF
                            break
                        base = w * w1
                        cost += min(src[base + min(r + k, cap)] for r in residual)
                    cost = sat(cost)
                    if cost < val[lhs * w1 + u]:
                        val[lhs * w1 + u] = cost
                        changed = True
        return self._intern(val)


def _run(g: Grammar, cfg: DerivationConfig, track_depth: bool = False):
    """Core enumeration; returns (word -> count or set of depths, truncated, expanded)."""
    lb = _YieldBound(g, cfg.max_len + 1)
    max_len = cfg.max_len
    soft_bound = cfg.stack_bound()
    start_key = ((), (Var(g.start, ()),), 0)
    frontier: dict = {start_key: 1}
    words: dict = defaultdict(set) if track_depth else defaultdict(int)
    truncated = False
    expanded = 0

    def item_bound(item):
        return 1 if isinstance(item, str) else lb.bound(item.name, item.stack)

    while frontier and not (truncated and expanded >= cfg.max_forms):
        nxt: dict = defaultdict(int)
        for (emitted, pending, depth), count in frontier.items():
            if expanded >= cfg.max_forms:
                truncated = True
                break
            expanded += 1
            head, rest = pending[0], pending[1:]
            rest_bound = sum(item_bound(it) for it in rest)
            for rhs in _rewrite(g, head):
                new_pending = rhs + rest
                k = 0
                while k < len(new_pending) and isinstance(new_pending[k], str):
                    k += 1
                new_emitted = emitted + new_pending[:k]
                new_pending = new_pending[k:]
                if len(new_emitted) > max_len:
                    continue
                deepest = max((len(it.stack) for it in rhs if isinstance(it, Var)), default=0)
                new_depth = max(depth, deepest) if track_depth else 0
                if not new_pending:
                    if track_depth:
                        words[new_emitted].add(new_depth)
                    else:
                        words[new_emitted] += count
                    continue
                if k <= len(rhs):
                    fresh = rhs[k:]
                    bound = len(new_emitted) + rest_bound + sum(item_bound(it) for it in fresh)
                else:
                    # the rule emitted only terminals and absorbed some of ``rest``
                    bound = len(new_emitted) + sum(item_bound(it) for it in new_pending)
                if bound > max_len:
                    continue
                if deepest > cfg.max_stack:
                    if soft_bound is None or deepest <= soft_bound:
                        truncated = True
                    continue
                if len(new_pending) > cfg.max_items:
                    truncated = True
                    continue
                nxt[(new_emitted, new_pending, new_depth)] += count
        frontier = nxt
    if frontier and expanded >= cfg.max_forms:
        truncated = True
    return dict(words), truncated, expanded


def enumerate_words(g: Grammar, cfg: DerivationConfig) -> WordCounts:
    """Parse-tree (leftmost derivation) count of every word of length <= max_len."""
    counts, truncated, expanded = _run(g, cfg)
    return WordCounts(counts, truncated, expanded)


def _coefficients(wc: WordCounts, n: int, mode: str) -> CountVector:
    cs = [0] * (n + 1)
    for w, c in wc.counts.items():
        cs[len(w)] += c if mode == "derivations" else 1
    return CountVector(tuple(cs), mode, wc.truncated)


def growth_coefficients(g: Grammar, cfg: DerivationConfig, mode: str = "words") -> CountVector:
    """c_n for n <= max_len: distinct words (``words``) or parse trees (``derivations``)."""
    if mode in ("distinct_words",):
        mode = "words"
    if mode not in ("words", "derivations"):
        raise ValueError(f"unknown mode {mode!r}")
    return _coefficients(enumerate_words(g, cfg), cfg.max_len, mode)


def ambiguous_words(wc: WordCounts) -> list[tuple[str, int]]:
    found = [(w, c) for w, c in wc.counts.items() if c >= 2]
    found.sort(key=lambda wc_: (len(wc_[0]), wc_[0]))
    return [(word_str(w), c) for w, c in found]


def ambiguity_scan(g: Grammar, cfg: DerivationConfig) -> list[tuple[str, int]]:
    """Words with two or more parse trees, shortest first, then lexicographic."""
    return ambiguous_words(enumerate_words(g, cfg))


def parikh_grid(g: Grammar, cfg: DerivationConfig, axes: Sequence[str]) -> ParikhGrid:
    """Distinct words keyed by how often each axis terminal occurs in them."""
    axes = tuple(axes)
    missing = [a for a in axes if a not in g.terminals]
    if missing:
        raise ValueError(f"axes {missing} are not terminals of the grammar")
    wc = enumerate_words(g, cfg)
    grid: dict[tuple[int, ...], int] = defaultdict(int)
    for w in wc.counts:
        grid[tuple(w.count(a) for a in axes)] += 1
    return ParikhGrid(axes, dict(grid), wc.truncated, cfg.max_len)


def estimate_balance(g: Grammar, cfg: DerivationConfig, max_offset: int = 8) -> BalanceEstimate:
    """Fit depth <= C*len + K over every complete derivation found.

    C is the smallest of 1, 2, 4, 8 admitting an offset K <= ``max_offset``;
    K is then minimal.  Finite data always admits some K, so the offset cap is
    what makes an unbalanced grammar visible.
    """
    found, truncated, _ = _run(g, cfg, track_depth=True)
    pairs = sorted({(d, len(w)) for w, depths in found.items() for d in depths})
    for c in (1, 2, 4, 8):
        k = max((math.ceil(d - c * n) for d, n in pairs), default=0)
        k = max(k, 0)
        if k <= max_offset:
            return BalanceEstimate(Fraction(c), k, pairs, True, truncated)
    k = max((d - 8 * n for d, n in pairs), default=0)
    return BalanceEstimate(Fraction(8), max(k, 0), pairs, False, truncated)
