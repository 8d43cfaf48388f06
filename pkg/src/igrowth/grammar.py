"""Indexed grammars: data model, text format, and structural analyses.

A production has an optional popped index on its left side and, on its right
side, a sequence of terminals and variable references.  Each variable
reference carries a push-string (topmost symbol first) that is prepended to the
residual stack of the left-hand variable.  ``$`` is an ordinary index symbol
reserved for the stack bottom; it is never declared.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional, Sequence, Union

BOTTOM = "$"
EPS = "eps"

Stack = tuple  # tuple[str, ...], topmost first


class GrammarError(ValueError):
    """Raised for malformed grammar text or an inconsistent grammar."""

    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}" + (f", col {col}" if col is not None else "") + ": "
        super().__init__(where + message)


@dataclass(frozen=True)
class RhsVar:
    name: str
    push: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.push:
            return self.name
        return f"{self.name}[{' '.join(self.push)}]"


RhsItem = Union[str, RhsVar]


@dataclass(frozen=True)
class Production:
    lhs: str
    pop: Optional[str]
    rhs: tuple[RhsItem, ...]

    @property
    def is_epsilon(self) -> bool:
        return not self.rhs

    @property
    def terminal_count(self) -> int:
        return sum(1 for item in self.rhs if isinstance(item, str))

    @property
    def rhs_vars(self) -> tuple[RhsVar, ...]:
        return tuple(item for item in self.rhs if isinstance(item, RhsVar))

    @property
    def pushes(self) -> bool:
        return any(v.push for v in self.rhs_vars)

    @property
    def index_traffic(self) -> int:
        """Number of index symbols popped plus pushed by this production."""
        return (self.pop is not None) + sum(len(v.push) for v in self.rhs_vars)

    def lhs_str(self) -> str:
        return self.lhs if self.pop is None else f"{self.lhs}[{self.pop}]"

    def rhs_str(self) -> str:
        return " ".join(str(item) for item in self.rhs) if self.rhs else EPS

    def __str__(self) -> str:
        return f"{self.lhs_str()} -> {self.rhs_str()}"


@dataclass(frozen=True)
class Grammar:
    variables: tuple[str, ...]
    terminals: tuple[str, ...]
    indices: tuple[str, ...]
    start: str
    productions: tuple[Production, ...]

    def __post_init__(self):
        _validate(self)

    @cached_property
    def by_lhs(self) -> dict[str, tuple[Production, ...]]:
        table: dict[str, list[Production]] = {v: [] for v in self.variables}
        for p in self.productions:
            table[p.lhs].append(p)
        return {v: tuple(ps) for v, ps in table.items()}

    @cached_property
    def used_indices(self) -> tuple[str, ...]:
        """Non-bottom index symbols that occur in some production."""
        seen = set()
        for p in self.productions:
            if p.pop is not None:
                seen.add(p.pop)
            for v in p.rhs_vars:
                seen.update(v.push)
        return tuple(i for i in self.indices if i in seen)

    def is_variable(self, name: str) -> bool:
        return name in self._varset

    @cached_property
    def _varset(self) -> frozenset:
        return frozenset(self.variables)


def _validate(g: Grammar) -> None:
    vs, ts, ix = set(g.variables), set(g.terminals), set(g.indices)
    if vs & ts:
        raise GrammarError(f"symbols declared both as variable and terminal: {sorted(vs & ts)}")
    if BOTTOM in ix:
        raise GrammarError("'$' is implicit and must not be declared as an index")
    if g.start not in vs:
        raise GrammarError(f"start symbol {g.start!r} is not a declared variable")
    for p in g.productions:
        if p.lhs not in vs:
            raise GrammarError(f"undeclared variable {p.lhs!r} on left side of {p}")
        if p.pop is not None and p.pop != BOTTOM and p.pop not in ix:
            raise GrammarError(f"undeclared index {p.pop!r} in {p}")
        for item in p.rhs:
            if isinstance(item, str):
                if item not in ts:
                    raise GrammarError(f"undeclared terminal {item!r} in {p}")
                continue
            if item.name not in vs:
                raise GrammarError(f"undeclared variable {item.name!r} in {p}")
            for k, sym in enumerate(item.push):
                if sym == BOTTOM:
                    if k != len(item.push) - 1:
                        raise GrammarError(f"'$' pushed above other symbols in {p}")
                elif sym not in ix:
                    raise GrammarError(f"undeclared index {sym!r} in {p}")


# --------------------------------------------------------------------------
# stack semantics shared by every evaluator


def apply_production(p: Production, stack: Stack) -> Optional[list[Stack]]:
    """Stacks handed to each rhs variable of ``p`` when it rewrites ``stack``.

    Returns None when ``p`` does not apply: its pop symbol is not on top, or a
    push places ``$`` on a non-empty residual stack.
    """
    if p.pop is not None:
        if not stack or stack[0] != p.pop:
            return None
        stack = stack[1:]
    out = []
    for v in p.rhs_vars:
        if v.push:
            if v.push[-1] == BOTTOM and stack:
                return None
            out.append(v.push + stack)
        else:
            out.append(stack)
    return out


def parikh_vector(stack: Stack, indices: Sequence[str]) -> tuple[int, ...]:
    return tuple(stack.count(i) for i in indices) + (stack.count(BOTTOM),)


def stack_str(stack: Stack) -> str:
    return "".join(stack) if all(len(s) == 1 for s in stack) else " ".join(stack)


# --------------------------------------------------------------------------
# text format

_TOKEN = re.compile(r"\s*(?:(->)|(\|)|(\[)|(\])|(\$)|([A-Za-z0-9_']+)|(\S))")
_KINDS = ("->", "|", "[", "]", "$", "n")
_HEADERS = ("start", "vars", "terminals", "indices")


def _tokens(text: str, lineno: int) -> Iterator[tuple[str, str, int]]:
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        kind = m.lastindex
        col = m.start(kind) + 1
        value = m.group(kind)
        if kind == 7:
            raise GrammarError(f"unexpected character {value!r}", lineno, col)
        yield (_KINDS[kind - 1], value, col)
        pos = m.end()


def parse_grammar(text: str) -> Grammar:
    """Parse grammar text into a validated :class:`Grammar`.

    >>> g = parse_grammar('''
    ... start S
    ... vars S T D
    ... terminals 0
    ... indices f
    ... S -> T[$]
    ... T -> T[f] | D
    ... D[f] -> D D
    ... D[$] -> 0
    ... ''')
    >>> len(g.productions), g.indices
    (5, ('f',))
    """
    start = None
    variables: list[str] = []
    terminals: list[str] = []
    indices: list[str] = []
    rule_lines: list[tuple[int, str]] = []

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "->" in line:
            rule_lines.append((lineno, line))
            continue
        words = line.split()
        head, rest = words[0], words[1:]
        if head not in _HEADERS:
            raise GrammarError(f"expected a header or a production, got {head!r}",
                               lineno, line.index(head) + 1)
        if head == "start":
            if len(rest) != 1:
                raise GrammarError("'start' takes exactly one variable", lineno)
            if start is not None:
                raise GrammarError("duplicate 'start' line", lineno)
            start = rest[0]
            continue
        target = {"vars": variables, "terminals": terminals, "indices": indices}[head]
        for name in rest:
            if name == EPS:
                raise GrammarError(f"'{EPS}' is reserved", lineno, line.index(name) + 1)
            if head == "indices" and name == BOTTOM:
                raise GrammarError("'$' is implicit and must not be declared", lineno,
                                   line.index(name) + 1)
            if not re.fullmatch(r"[A-Za-z0-9_']+", name):
                raise GrammarError(f"bad symbol name {name!r}", lineno, line.index(name) + 1)
            if name not in target:
                target.append(name)

    if start is None:
        raise GrammarError("missing 'start' line")
    if start not in variables and start not in terminals:
        variables.insert(0, start)  # the start line declares its variable
    varset, termset, idxset = set(variables), set(terminals), set(indices)
    clash = varset & termset
    if clash:
        raise GrammarError(f"symbols declared both as variable and terminal: {sorted(clash)}")

    productions = []
    for lineno, line in rule_lines:
        productions.extend(_parse_rule(line, lineno, varset, termset, idxset))
    try:
        return Grammar(tuple(variables), tuple(terminals), tuple(indices), start,
                       tuple(productions))
    except GrammarError as exc:
        raise GrammarError(str(exc)) from None


def _parse_rule(line, lineno, varset, termset, idxset) -> list[Production]:
    toks = list(_tokens(line, lineno))
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else ("end", "", len(line) + 1)

    def take(kind):
        nonlocal pos
        tok = peek()
        if tok[0] != kind:
            want = {"n": "a symbol", "]": "']'", "->": "'->'"}.get(kind, repr(kind))
            raise GrammarError(f"expected {want}, got {tok[1]!r}", lineno, tok[2])
        pos += 1
        return tok

    def index_symbol():
        tok = peek()
        if tok[0] == "$":
            take("$")
            return BOTTOM, tok[2]
        _, name, col = take("n")
        if name not in idxset:
            raise GrammarError(f"undeclared index {name!r}", lineno, col)
        return name, col

    _, lhs, col = take("n")
    if lhs not in varset:
        raise GrammarError(f"undeclared variable {lhs!r}", lineno, col)
    pop = None
    if peek()[0] == "[":
        take("[")
        pop, _ = index_symbol()
        take("]")
    take("->")

    alts: list[list[RhsItem]] = [[]]
    saw_eps = [False]
    while peek()[0] != "end":
        kind, value, col = peek()
        if kind == "|":
            take("|")
            if not alts[-1] and not saw_eps[-1]:
                raise GrammarError("empty alternative (write 'eps')", lineno, col)
            alts.append([])
            saw_eps.append(False)
            continue
        _, name, col = take("n")
        if name == EPS:
            if alts[-1] or saw_eps[-1]:
                raise GrammarError("'eps' must stand alone in its alternative", lineno, col)
            saw_eps[-1] = True
            continue
        if saw_eps[-1]:
            raise GrammarError("'eps' must stand alone in its alternative", lineno, col)
        if name in termset:
            if peek()[0] == "[":
                raise GrammarError(f"terminal {name!r} cannot carry indices", lineno, peek()[2])
            alts[-1].append(name)
        elif name in varset:
            push: list[str] = []
            if peek()[0] == "[":
                take("[")
                while peek()[0] != "]":
                    sym, scol = index_symbol()
                    if push and push[-1] == BOTTOM:
                        raise GrammarError("'$' may only be the bottom of a push-string",
                                           lineno, scol)
                    push.append(sym)
                take("]")
                if not push:
                    raise GrammarError("empty push-string", lineno, col)
            alts[-1].append(RhsVar(name, tuple(push)))
        else:
            raise GrammarError(f"undeclared symbol {name!r}", lineno, col)
    if not alts[-1] and not saw_eps[-1]:
        raise GrammarError("missing right-hand side", lineno, len(line) + 1)
    return [Production(lhs, pop, tuple(a)) for a in alts]


def render_grammar(g: Grammar) -> str:
    """Canonical text; productions sharing a left side are joined with bars."""
    lines = [f"start {g.start}", "vars " + " ".join(g.variables)]
    if g.terminals:
        lines.append("terminals " + " ".join(g.terminals))
    if g.indices:
        lines.append("indices " + " ".join(g.indices))
    groups: dict[tuple[str, Optional[str]], list[Production]] = {}
    for p in g.productions:
        groups.setdefault((p.lhs, p.pop), []).append(p)
    for ps in groups.values():
        lines.append(f"{ps[0].lhs_str()} -> " + " | ".join(p.rhs_str() for p in ps))
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# structural analyses


@dataclass
class StructureReport:
    epsilon_free: bool
    strict_reduced: bool
    unreachable_vars: set[str]
    unproductive_vars: set[str]
    notes: list[str] = field(default_factory=list)


def _explore_keys(g: Grammar, roots: Iterable[tuple[str, Stack]], max_stack: int,
                  max_keys: int):
    """Breadth-first closure of (variable, stack) keys under rewriting."""
    seen: dict[tuple[str, Stack], list[tuple[Production, list[tuple[str, Stack]]]]] = {}
    queue = deque(roots)
    complete = True
    while queue:
        key = queue.popleft()
        if key in seen:
            continue
        if len(seen) >= max_keys:
            complete = False
            break
        var, stack = key
        edges = []
        for p in g.by_lhs[var]:
            stacks = apply_production(p, stack)
            if stacks is None:
                continue
            if any(len(s) > max_stack for s in stacks):
                complete = False
                continue
            children = [(v.name, s) for v, s in zip(p.rhs_vars, stacks)]
            edges.append((p, children))
            queue.extend(c for c in children if c not in seen)
        seen[key] = edges
    return seen, complete


def check_structure(g: Grammar, max_stack: int = 16, max_keys: int = 200_000) -> StructureReport:
    """Report ε-freeness, strict reduced form, and bounded reachability/productivity."""
    eps_lhs = {p.lhs for p in g.productions if p.is_epsilon}
    epsilon_free = eps_lhs <= {g.start}
    strict = all(p.index_traffic <= 1 for p in g.productions)
    notes = []
    if not epsilon_free:
        notes.append("epsilon productions on " + ", ".join(sorted(eps_lhs - {g.start})))
    for p in g.productions:
        if p.index_traffic > 1:
            notes.append(f"not strictly reduced: {p}")

    keys, complete = _explore_keys(g, [(g.start, ())], max_stack, max_keys)
    reached = {v for v, _ in keys}
    unreachable = set(g.variables) - reached

    # productivity over explored keys plus shallow seeds for unreached variables
    extra = [(v, s) for v in sorted(unreachable) for s in ((), (BOTTOM,))]
    if extra:
        more, more_complete = _explore_keys(g, extra, max_stack, max_keys)
        complete = complete and more_complete
        for k, e in more.items():
            keys.setdefault(k, e)
    productive: set[tuple[str, Stack]] = set()
    changed = True
    while changed:
        changed = False
        for key, edges in keys.items():
            if key in productive:
                continue
            if any(all(c in productive for c in children) for _, children in edges):
                productive.add(key)
                changed = True
    unproductive = set(g.variables) - {v for v, _ in productive}
    if not complete:
        notes.append(f"reachability/productivity decided within bound (stack depth {max_stack})")
    return StructureReport(epsilon_free, strict, unreachable, unproductive, notes)


@dataclass
class LoadingClass:
    kind: str  # index_free | single_index | serial | general
    loaders: list[tuple[str, str]]
    evidence: str


def _self_pushes(g: Grammar) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {}
    for p in g.productions:
        for v in p.rhs_vars:
            if v.name == p.lhs and v.push and v.push[0] != BOTTOM:
                out.setdefault(p.lhs, set()).add(v.push[0])
    return out


def _serial_shape(stack: Stack, order: Sequence[str]) -> bool:
    """True iff ``stack`` reads f_n^* ... f_1^* [$] for the loading order f_1..f_n."""
    rank = {sym: k for k, sym in enumerate(order)}
    body = stack[:-1] if stack and stack[-1] == BOTTOM else stack
    ranks = [rank.get(s, -1) for s in body]
    return all(r >= 0 for r in ranks) and all(a >= b for a, b in zip(ranks, ranks[1:]))


def classify_loading(g: Grammar, probe_depth: int = 8) -> LoadingClass:
    """Strongest loading class whose hypotheses the grammar satisfies.

    Serial loading is detected structurally (a hand-off chain of self-loading
    variables) and then confirmed by checking every stack reachable within
    ``probe_depth``.
    """
    used = g.used_indices
    loaders = _self_pushes(g)
    if not used:
        return LoadingClass("index_free", [], "no index symbol besides '$' is used")
    if len(used) == 1:
        f = used[0]
        owners = sorted(v for v, syms in loaders.items() if f in syms)
        if len(owners) == 1:
            return LoadingClass("single_index", [(owners[0], f)],
                                f"only {f!r} is used and only {owners[0]} loads it onto itself")
        return LoadingClass("general", [],
                            f"single index {f!r} but self-loaded by {owners or 'no variable'}")

    bad = sorted(v for v, syms in loaders.items() if len(syms) != 1)
    if bad:
        return LoadingClass("general", [], f"{', '.join(bad)} self-load several index symbols")
    sym_owner: dict[str, list[str]] = {}
    for v, syms in loaders.items():
        sym_owner.setdefault(next(iter(syms)), []).append(v)
    if set(sym_owner) != set(used) or any(len(o) != 1 for o in sym_owner.values()):
        return LoadingClass("general", [], "index symbols are not each self-loaded by one variable")
    owner = {s: o[0] for s, o in sym_owner.items()}
    dedicated = {o: s for s, o in owner.items()}

    # hand-off edges: loader A pushes B's dedicated symbol onto B
    succ: dict[str, set[str]] = {v: set() for v in dedicated}
    for p in g.productions:
        if p.lhs not in dedicated:
            continue
        for v in p.rhs_vars:
            if v.name != p.lhs and v.name in dedicated and v.push[:1] == (dedicated[v.name],):
                succ[p.lhs].add(v.name)
    heads = [v for v in dedicated if not any(v in s for s in succ.values())]
    if len(heads) != 1:
        return LoadingClass("general", [], "loaders do not form a single hand-off chain")
    chain = [heads[0]]
    while succ[chain[-1]]:
        nxt = succ[chain[-1]]
        if len(nxt) != 1 or next(iter(nxt)) in chain:
            return LoadingClass("general", [], f"{chain[-1]} hands off to {sorted(nxt)}")
        chain.append(next(iter(nxt)))
    if len(chain) != len(dedicated):
        return LoadingClass("general", [], "loaders do not form a single hand-off chain")
    order = [dedicated[v] for v in chain]
    keys, _ = _explore_keys(g, [(g.start, ())], probe_depth, 100_000)
    for _, stack in keys:
        if not _serial_shape(stack, order):
            return LoadingClass("general", [],
                                f"reachable stack {stack_str(stack)} breaks serial order")
    pairs = [(v, dedicated[v]) for v in chain]
    text = " -> ".join(f"{v}({s})" for v, s in pairs)
    return LoadingClass("serial", pairs,
                        f"loaded serially along {text}; reachable stacks checked to depth {probe_depth}")
