"""Clustering where every center must serve at least ``L`` points."""

from __future__ import annotations

from collections import Counter

from sumradii.bench import brute_force_opt, random_instance
from sumradii.solver import solve

inst = random_instance(10, seed=10, k=3, lower_bound=3)
res = solve(inst, "glb")
sizes = Counter(c for c in res.solution.assignment.values() if c is not None)
print("cluster sizes:", dict(sorted(sizes.items())))
print(f"cost {float(res.cost):.4f}  optimum {float(brute_force_opt(inst).cost):.4f}")
