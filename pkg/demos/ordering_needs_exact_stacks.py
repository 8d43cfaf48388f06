"""Two stacks with the same letter counts can yield different languages.
The Parikh check finds such a pair, and the solver then keeps whole stacks as keys."""
from igrowth import EvalConfig, eval_variable, parikh_equivalence_check, solve
from igrowth.corpus import load_grammar

g = load_grammar("ordering")
check = parikh_equivalence_check(g, depth=6, N=12)
print("Parikh-equivalent per variable:", dict(check))
a, b = check.witnesses["N"]
cfg = EvalConfig(order=8, depth_cap=8, ambiguity_probe=0)
print("N", a, eval_variable(g, "N", a, cfg).coeffs)
print("N", b, eval_variable(g, "N", b, cfg).coeffs)

res = solve(g, EvalConfig(order=12, depth_cap=13))
print("coefficients:", res.coeffs)
print("key mode:", res.key_mode, "memo keys:", res.keys)
for w in res.warnings:
    print("warning:", w)
