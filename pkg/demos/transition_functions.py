"""Transition functions between nested sets and their Hölder norms.

Builds T[A, B] for a ball inside a larger ball, prints it along a ray, and
compares the sampled Hölder quotient with the a priori bound as the gap
shrinks.

    python demos/transition_functions.py
"""
import numpy as np

from bracketlab import geometry as geo

A = geo.ball([0.5, 0.5], 0.1)
for outer in (0.4, 0.2, 0.12, 0.105):
    T = geo.transition(A, geo.complement(geo.ball([0.5, 0.5], outer)), 1.0)
    est = geo.empirical_holder_norm(T, lambda rng, n: rng.uniform(0, 1, (n, 2)), 50_000, 1.0, seed=0)
    print(f"gap {outer - 0.1:.3f}: sampled norm {est:8.2f}  bound {geo.holder_bound(T):8.2f}")

T = geo.transition(A, geo.complement(geo.ball([0.5, 0.5], 0.3)))
ray = np.column_stack([np.linspace(0.5, 0.9, 9), np.full(9, 0.5)])
print("T along a ray:", np.round(T(ray), 3))
