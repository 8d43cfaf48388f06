"""Sort the words of a two-letter grammar by letter counts; the occupied cells
are the coprime pairs, and the anti-diagonals sum to Euler's totient."""
from igrowth import BivariateGrid, DerivationConfig, diagonal_sum, parikh_grid, reference_sequence
from igrowth.corpus import load_grammar

g = load_grammar("bg_simplified")
grid = parikh_grid(g, DerivationConfig(max_len=24, balance=(1, 1)), ("v", "h"))
side = 12
for i in range(1, side + 1):
    print("".join("#" if grid[i, j] else "." for j in range(1, side + 1)))

print("diagonal sums:", diagonal_sum(BivariateGrid.from_mapping(grid.grid, 24, 24, max_total=24), 20).coeffs[2:])
print("phi(n):       ", reference_sequence("phi", 20).coeffs[2:])
