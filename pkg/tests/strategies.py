"""Shared helpers: a naive enumerator and random grammar generators."""

from collections import defaultdict

from hypothesis import strategies as st

from igrowth.grammar import parse_grammar
from igrowth.oracle import Var, step_expand


def naive_counts(g, max_len, max_stack=12, max_items=24):
    """Leftmost derivations without any yield-length bound; plain terminal pruning only."""
    frontier = {(Var(g.start, ()),): 1}
    words = defaultdict(int)
    while frontier:
        nxt = defaultdict(int)
        for form, count in frontier.items():
            for succ in step_expand(form, g):
                terms = sum(1 for it in succ if isinstance(it, str))
                if terms > max_len or len(succ) > max_items:
                    continue
                if any(len(it.stack) > max_stack for it in succ if isinstance(it, Var)):
                    continue
                if all(isinstance(it, str) for it in succ):
                    words[succ] += count
                else:
                    nxt[succ] += count
        frontier = nxt
    return dict(words)


@st.composite
def loader_grammars(draw):
    """Single-index grammars whose stacks stay within |w| + 1.

    S -> T[$];  T -> T[f] | <X Y...>;  every f-pop rule of A and B emits a
    terminal and hands the rest of the stack to at least one variable, so some
    chain must pop every f, one terminal at a time.
    """
    worker = st.sampled_from(["A", "B"])
    firsts = draw(st.lists(worker, min_size=1, max_size=2))
    lines = ["start S", "vars S T A B", "terminals a b", "indices f",
             "S -> T[$]", "T -> T[f] | " + " ".join(firsts)]
    for v in ("A", "B"):
        alts = []
        for _ in range(draw(st.integers(1, 2))):
            body = [draw(st.sampled_from(["a", "b"])), draw(worker)]
            body += draw(st.lists(st.sampled_from(["a", "b", "A", "B"]), max_size=1))
            alts.append(" ".join(body))
        lines.append(f"{v}[f] -> " + " | ".join(alts))
        ends = draw(st.lists(st.sampled_from(["a", "b", "eps"]), min_size=1, max_size=2, unique=True))
        lines.append(f"{v}[$] -> " + " | ".join(ends))
    return parse_grammar("\n".join(lines) + "\n")


@st.composite
def context_free_grammars(draw):
    """Index-free grammars in which every rule emits a terminal."""
    names = ["S", "A", "B"]
    lines = ["start S", "vars S A B", "terminals a b"]
    for v in names:
        alts = []
        for _ in range(draw(st.integers(1, 3))):
            body = [draw(st.sampled_from(["a", "b"]))]
            body += draw(st.lists(st.sampled_from(["a", "b"] + names), max_size=2))
            draw(st.randoms()).shuffle(body)
            alts.append(" ".join(body))
        lines.append(f"{v} -> " + " | ".join(alts))
    return parse_grammar("\n".join(lines) + "\n")
