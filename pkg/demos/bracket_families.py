"""Bracket counts and their growth for the built-in families.

For each family the script builds brackets at a few accuracies, checks that
random members are covered, and fits the log-log slope of the counts.

    python demos/bracket_families.py
"""
import numpy as np

from bracketlab import brackets as B
from bracketlab.entropy import entropy_curve, fitted_exponent, integral_condition, parse_delta_grid
from bracketlab.seeding import generator

grid = parse_delta_grid("1e-3:1e-1:16log")
rng = generator(0, "demo-brackets")

for kind in B.FAMILIES:
    build = B.family_builder(kind, dim=1 if kind == B.MONOTONE else 2)
    family = build(0.2)
    cov, order = B.check_coverage(family, 500, 200, rng)
    curve = entropy_curve(build, grid)
    rprime = fitted_exponent(curve)
    verdict = integral_condition(curve, 2 * rprime, 2.0)
    print(f"{kind:15s} N(0.2) = {family.count:>8d}  cap {family.cap:9.3g}  misses {cov}  "
          f"slope {rprime:.2f}  integral at r={2 * rprime:.1f}: {'converges' if verdict.converges else 'diverges'}")

# one bracket up close, along a ray crossing the ball's boundary
family = B.family_builder(B.BALLS, dim=2)(0.05)
params = (np.array([0.4, 0.55]), 0.27)
b = B.locate_bracket(family, params)
X = np.column_stack([0.4 + np.linspace(0.15, 0.4, 6), np.full(6, 0.55)])
print("ball member     ", np.round(family.member(params)(X), 3))
print("lower / upper   ", np.round(b.lower(X), 3), np.round(b.upper(X), 3))
