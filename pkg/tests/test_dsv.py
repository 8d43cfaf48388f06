from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from igrowth import corpus
from igrowth.dsv import (DepthExhausted, EvalConfig, MemoTable, NoStabilization, ParikhUnsound,
                         build_equation_view, eval_variable, parikh_equivalence_check, solve)
from igrowth.grammar import parse_grammar
from igrowth.oracle import DerivationConfig, growth_coefficients
from strategies import context_free_grammars, loader_grammars

G = corpus.load_grammar


def quiet(**kw):
    kw.setdefault("ambiguity_probe", 0)
    return EvalConfig(**kw)


def test_equation_view_examples():
    sqr = build_equation_view(G("sqr"))
    assert [str(p) for p in sqr["T"].flat_rules] == ["T -> D"]
    assert [str(p) for p in sqr["T"].push_rules] == ["T -> T[f]"]
    assert sqr.rhs_expression(sqr["D"].pop_rules["f"]) == "D·D"
    assert sqr.rhs_expression(sqr["D"].pop_rules["$"]) == "z"
    assert build_equation_view(G("gm_partitions")).w_expression("T") == "G·T + G"
    serial = build_equation_view(G("serial"))
    assert serial.w_expression("R") == "V·R + V" and not serial["R"].push_rules


@pytest.mark.parametrize("name", sorted(corpus.BY_NAME))
def test_every_production_in_one_bucket(name):
    g = G(name)
    view = build_equation_view(g)
    seen = []
    for v in g.variables:
        eq = view[v]
        seen += eq.flat_rules + eq.push_rules + [p for ps in eq.pop_rules.values() for p in ps]
    assert sorted(map(str, seen)) == sorted(map(str, g.productions))


def test_eval_examples():
    assert eval_variable(G("sqr"), "D", ("f", "f", "$"), quiet(order=6)).coeffs == (0, 0, 0, 0, 1, 0, 0)
    assert eval_variable(G("gm_partitions"), "G", ("f", "f", "$"), quiet(order=5)).coeffs == (0, 0, 0, 1, 0, 0)
    assert eval_variable(G("amb_quad"), "C", ("$",), quiet(order=4)).coeffs == (0, 1, 1, 1, 1)


def test_eval_fills_memo():
    memo = MemoTable("exact_stack", 10)
    eval_variable(G("sqr"), "T", ("$",), quiet(order=8, depth_cap=10), memo)
    assert memo.get("D", ("f", "$"), 8).coeffs == (0, 0, 1, 0, 0, 0, 0, 0, 0)
    assert memo.get("D", ("f",) * 11 + ("$",), 8).is_zero()


def test_solve_examples():
    assert solve(G("sqr"), quiet(order=8)).coeffs == (0, 1, 1, 0, 1, 0, 0, 0, 1)
    gm = solve(G("gm_partitions"), quiet(order=10)).coeffs
    assert gm[1:] == (1, 2, 3, 5, 7, 11, 15, 22, 30, 42)


def test_ordering_uses_exact_keys():
    res = solve(G("ordering"), quiet(order=12, depth_cap=13))
    assert res.key_mode == "exact_stack" and res.loading_class == "general"
    assert res.keys > 2 ** 13  # memo grows like 2^M for the general class


def test_parikh_check_examples():
    assert parikh_equivalence_check(G("double_ww"), 8, 12)["R"] is True
    ordc = parikh_equivalence_check(G("ordering"), 6, 12)
    assert ordc["N"] is False
    assert ordc.witnesses["N"] == (("alpha", "beta", "$"), ("beta", "alpha", "$"))
    assert all(parikh_equivalence_check(G("serial"), 6, 12).values())
    with pytest.raises(ValueError):
        parikh_equivalence_check(G("serial"), 1, 12)


def test_parikh_unsound_raises():
    with pytest.raises(ParikhUnsound):
        solve(G("ordering"), quiet(order=8, key_mode="parikh_tuple"))


def test_no_stabilization_on_epsilon_cycle():
    g = parse_grammar("start S\nvars S R\nterminals a\nS -> R\nR -> R | a\n")
    with pytest.raises(NoStabilization):
        solve(g, quiet(order=5))


def test_depth_exhausted_when_cap_too_small():
    with pytest.raises(DepthExhausted):
        solve(G("gm_partitions"), quiet(order=10, depth_cap=4))
    # without the check the truncated answer comes back silently
    low = solve(G("gm_partitions"), quiet(order=10, depth_cap=4, verify_depth=False))
    assert low.coeffs != solve(G("gm_partitions"), quiet(order=10)).coeffs


def test_ambiguity_warning():
    res = solve(G("composites"), EvalConfig(order=12))
    assert any("ambiguous" in w for w in res.warnings)
    assert not solve(G("gm_partitions"), EvalConfig(order=12)).warnings


def test_config_validation():
    with pytest.raises(ValueError):
        EvalConfig(order=5, depth_cap=0)
    with pytest.raises(ValueError):
        EvalConfig(order=5, max_rounds=1)
    with pytest.raises(ValueError):
        EvalConfig(order=5, key_mode="fast")
    assert EvalConfig(order=10).cap == 22
    assert EvalConfig(order=10, balance=(Fraction(1), 1)).cap == 11


@pytest.mark.parametrize("name", sorted(corpus.BY_NAME))
def test_solver_matches_oracle(name):
    e = corpus.get_entry(name)
    n = min(e.solver_order, 12)
    res = solve(G(name), quiet(order=n, balance=e.balance, key_mode=e.key_mode, depth_cap=e.depth))
    o = growth_coefficients(G(name), DerivationConfig(max_len=n, balance=e.balance), mode="derivations")
    assert not o.truncated
    assert res.coeffs == o.coeffs
    if not e.ambiguous:
        assert res.coeffs == growth_coefficients(G(name), DerivationConfig(max_len=n, balance=e.balance)).coeffs


@pytest.mark.parametrize("name", ["gm_partitions", "divisors", "serial", "amb_quad", "sigma",
                                  "intermediate", "double_ww", "hard_recursion"])
def test_parikh_keys_agree_with_exact(name):
    n = 10
    cap = 11
    check = parikh_equivalence_check(G(name), cap, n)
    assert all(check.values())
    a = solve(G(name), quiet(order=n, depth_cap=cap, key_mode="exact_stack"))
    b = solve(G(name), quiet(order=n, depth_cap=cap, key_mode="parikh_tuple", parikh_check_depth=cap))
    assert a.coeffs == b.coeffs and b.keys <= a.keys


@pytest.mark.parametrize("name", sorted(corpus.BY_NAME))
def test_deeper_cap_keeps_stable_coefficients(name):
    e = corpus.get_entry(name)
    n = min(e.solver_order, 8)
    base = solve(G(name), quiet(order=n, balance=e.balance, key_mode=e.key_mode, depth_cap=e.depth))
    more = solve(G(name), quiet(order=n, key_mode=e.key_mode, depth_cap=base.depth_cap + 2,
                                 max_rounds=2 * n + 4))
    assert base.coeffs == more.coeffs


def classical(g, n):
    """Context-free equations by plain Kleene iteration over whole-system passes."""
    val = {v: [0] * (n + 1) for v in g.variables}
    for _ in range(4 * n + 8):
        new = {}
        for v in g.variables:
            acc = [0] * (n + 1)
            for p in g.by_lhs[v]:
                term = [1] + [0] * n
                for item in p.rhs:
                    f = [0, 1] + [0] * (n - 1) if isinstance(item, str) else val[item.name]
                    term = [sum(term[i] * f[k - i] for i in range(k + 1)) for k in range(n + 1)]
                acc = [x + y for x, y in zip(acc, term)]
            new[v] = acc
        if new == val:
            break
        val = new
    return tuple(val[g.start])


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(context_free_grammars())
def test_index_free_matches_classical_equations(g):
    assert solve(g, quiet(order=8)).coeffs == classical(g, 8)


def test_anbncn_and_catalan():
    assert solve(G("anbncn"), quiet(order=15)).coeffs == tuple(1 if k and k % 3 == 0 else 0 for k in range(16))
    dyck = parse_grammar("start S\nvars S\nterminals a b\nS -> a S b S | eps\n")
    assert solve(dyck, quiet(order=10)).coeffs == (1, 0, 1, 0, 2, 0, 5, 0, 14, 0, 42)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(loader_grammars(), st.integers(2, 7))
def test_random_loader_grammars_match_oracle(g, n):
    res = solve(g, quiet(order=n, balance=(Fraction(1), 1)))
    o = growth_coefficients(g, DerivationConfig(max_len=n), mode="derivations")
    assert not o.truncated
    assert res.coeffs == o.coeffs
