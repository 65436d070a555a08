"""Independent reference computations used by the tests.

Everything here works on plain Python sets and distance rows, with no
bitmasks and no package helpers beyond reading the instance, so a bug in
the package code cannot silently agree with its own check.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import networkx as nx

INF = float("inf")


def scan_ball(instance, center, radius):
    return {j for j in range(instance.n) if instance.distances[center][j] <= radius}


def naive_pairs(instance):
    """Every (radius, center) with radius a finite distance to an active point."""
    out = set()
    for i in range(instance.n):
        for j in instance.active_points:
            d = instance.distances[i][j]
            if d != INF:
                out.add((Fraction(d), i))
    return sorted(out)


def closure_components(instance, pairs):
    """Components by repeated merging of intersecting ball sets."""
    groups = [({p}, scan_ball(instance, p.center, p.radius)) for p in pairs]
    merged = True
    while merged:
        merged = False
        for a, b in itertools.combinations(range(len(groups)), 2):
            if groups[a][1] & groups[b][1]:
                ps = groups[a][0] | groups[b][0]
                pts = groups[a][1] | groups[b][1]
                groups = [g for t, g in enumerate(groups) if t not in (a, b)] + [(ps, pts)]
                merged = True
                break
    return {frozenset(g[0]) for g in groups}


def cardinality_ok(instance, centers, radii, bound):
    """Every point covered and each center able to take ``bound`` own points.

    The second condition is a flow feasibility question; extra covered points
    can always be given to any center that reaches them.
    """
    balls = {c: scan_ball(instance, c, r) for c, r in zip(centers, radii)}
    g = nx.DiGraph()
    for c in centers:
        g.add_edge("s", ("c", c), capacity=bound[c])
        for j in balls[c]:
            g.add_edge(("c", c), ("p", j), capacity=1)
    for j in range(instance.n):
        g.add_edge(("p", j), "t", capacity=1)
    need = sum(bound[c] for c in centers)
    return nx.maximum_flow_value(g, "s", "t") == need


def naive_opt(instance, cardinality=None):
    """Minimum sum of radii by plain enumeration of pair combinations."""
    pairs = naive_pairs(instance)
    active = set(instance.active_points)
    best = None
    for size in range(1, instance.k + 1):
        for combo in itertools.combinations(pairs, size):
            centers = [c for _, c in combo]
            if len(set(centers)) < size:
                continue
            cost = sum(r for r, _ in combo)
            if best is not None and cost >= best:
                continue
            covered = set()
            for r, c in combo:
                covered |= scan_ball(instance, c, r)
            if len(active - covered) > instance.m:
                continue
            if cardinality is not None and not cardinality_ok(instance, centers, [r for r, _ in combo], cardinality):
                continue
            best = cost
    return best


def floyd_warshall(n, edges):
    d = [[INF] * n for _ in range(n)]
    for i in range(n):
        d[i][i] = 0
    for u, v in edges:
        d[u][v] = d[v][u] = 1
    for w in range(n):
        for u in range(n):
            for v in range(n):
                if d[u][w] + d[w][v] < d[u][v]:
                    d[u][v] = d[u][w] + d[w][v]
    return d


def best_disjoint(instance, component):
    """Largest radius sum over pairwise-disjoint subsets, by full enumeration."""
    items = list(set(component))
    balls = [scan_ball(instance, p.center, p.radius) for p in items]
    best = Fraction(0)
    for size in range(1, len(items) + 1):
        for combo in itertools.combinations(range(len(items)), size):
            if all(not (balls[a] & balls[b]) for a, b in itertools.combinations(combo, 2)):
                best = max(best, sum((items[t].radius for t in combo), Fraction(0)))
    return best
