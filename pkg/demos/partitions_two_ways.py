"""Count the words of a partition grammar with the brute-force oracle and with
the equation solver, then line both up against the partition numbers."""
from igrowth import DerivationConfig, EvalConfig, growth_coefficients, reference_sequence, solve
from igrowth.corpus import load_grammar

N = 20
g = load_grammar("gm_partitions")

oracle = growth_coefficients(g, DerivationConfig(max_len=N, balance=(1, 1)))
solver = solve(g, EvalConfig(order=N))
ref = reference_sequence("partitions", N)

print(f"{'n':>3} {'oracle':>7} {'solver':>7} {'p(n)':>7}")
for n in range(1, N + 1):
    print(f"{n:>3} {oracle.coeffs[n]:>7} {solver.coeffs[n]:>7} {ref[n]:>7}")

print("solver keys:", solver.keys, "key mode:", solver.key_mode, "rounds:", solver.rounds)
