"""JSON instance and report documents.

Instance document
-----------------
A JSON object with these keys:

``k`` (int, required), ``m`` (int, default 0)
    Cluster and outlier budgets.
``distances``
    Full square matrix.  Entries are rational strings such as ``"3/4"`` or
    ``"2"``, integers, or ``"inf"`` for unreachable pairs.  The matrix must
    be symmetric with a zero diagonal.
``points`` with ``"metric": "euclidean"``
    Alternative to ``distances``: a list of coordinate vectors (rational
    strings or numbers).  Distances are rounded up to multiples of
    ``1/denominator`` (``"denominator"``, default ``2**32``).
``lower_bounds`` (optional)
    ``{"variant": "cardinality", "parameters": {"L": [..]}}``,
    ``{"variant": "colored_weight", "parameters": {"weights": [..],
    "colors": [..], "minimums": [{"<color>": "<weight>"}, ..]}}`` or
    ``{"variant": "explicit_radius", "parameters": {"radii": [.., null]}}``.
``active`` (optional)
    Points that must be covered; default all.

Rationals are always written as strings so documents round-trip exactly.
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from typing import Any

from .metric import (
    DEFAULT_DENOMINATOR,
    UNREACHABLE,
    Cardinality,
    ColoredWeight,
    ExplicitRadius,
    LowerBoundSpec,
    MetricInstance,
    Pair,
    euclidean_distances,
    to_fraction,
)

FORMAT = "sumradii-instance/1"


class ParseError(ValueError):
    """The document does not describe a valid instance."""


def rat(x) -> str | None:
    if x is None:
        return None
    if x == UNREACHABLE:
        return "inf"
    return str(Fraction(x))


def _lb_to_dict(lb: LowerBoundSpec) -> dict:
    if isinstance(lb, Cardinality):
        return {"variant": "cardinality", "parameters": {"L": list(lb.bounds)}}
    if isinstance(lb, ColoredWeight):
        return {
            "variant": "colored_weight",
            "parameters": {
                "weights": [rat(w) for w in lb.weights],
                "colors": list(lb.colors),
                "minimums": [{str(c): rat(w) for c, w in sorted(e.items())} for e in lb.minimums],
            },
        }
    if isinstance(lb, ExplicitRadius):
        return {"variant": "explicit_radius", "parameters": {"radii": [rat(r) for r in lb.radii]}}
    raise TypeError(f"unknown lower-bound spec {lb!r}")


def _lb_from_dict(doc: dict) -> LowerBoundSpec:
    variant = doc.get("variant")
    params = doc.get("parameters", {})
    if variant == "cardinality":
        return Cardinality(tuple(params["L"]))
    if variant == "colored_weight":
        mins = tuple({int(c): w for c, w in e.items()} for e in params["minimums"])
        return ColoredWeight(tuple(params["weights"]), tuple(params["colors"]), mins)
    if variant == "explicit_radius":
        return ExplicitRadius(tuple(params["radii"]))
    raise ParseError(f"unknown lower-bound variant {variant!r}")


def instance_to_dict(instance: MetricInstance) -> dict:
    doc: dict[str, Any] = {"format": FORMAT, "k": instance.k, "m": instance.m}
    doc["distances"] = [[rat(v) for v in row] for row in instance.distances]
    if instance.coordinates is not None:
        doc["points"] = [[rat(c) for c in p] for p in instance.coordinates]
    if instance.lower_bounds is not None:
        doc["lower_bounds"] = _lb_to_dict(instance.lower_bounds)
    if instance.active is not None:
        doc["active"] = sorted(instance.active)
    if instance.radius_cap is not None:
        doc["radius_cap"] = rat(instance.radius_cap)
    return doc


def instance_from_dict(doc: dict) -> MetricInstance:
    try:
        if "k" not in doc:
            raise ParseError("missing 'k'")
        lb = _lb_from_dict(doc["lower_bounds"]) if doc.get("lower_bounds") else None
        coords = None
        if "distances" in doc:
            dist = doc["distances"]
            if "points" in doc:
                coords = tuple(tuple(to_fraction(c) for c in p) for p in doc["points"])
        elif "points" in doc:
            if doc.get("metric", "euclidean") != "euclidean":
                raise ParseError(f"unsupported metric {doc.get('metric')!r}")
            dist, coords = euclidean_distances(doc["points"], int(doc.get("denominator", DEFAULT_DENOMINATOR)))
        else:
            raise ParseError("need 'distances' or 'points'")
        inst = MetricInstance(
            dist,
            k=int(doc["k"]),
            m=int(doc.get("m", 0)),
            lower_bounds=lb,
            active=frozenset(doc["active"]) if "active" in doc else None,
            radius_cap=doc.get("radius_cap"),
            coordinates=coords,
        )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ParseError(str(exc)) from exc
    asym = verify_metric_symmetry(inst)
    if asym:
        raise ParseError(asym[0])
    return inst


def verify_metric_symmetry(instance: MetricInstance) -> list[str]:
    dist = instance.distances
    out = []
    for i in range(instance.n):
        if dist[i][i] != 0:
            out.append(f"d({i},{i}) is not zero")
        for j in range(i + 1, instance.n):
            if dist[i][j] != dist[j][i]:
                out.append(f"asymmetric: d({i},{j}) != d({j},{i})")
    return out


def dumps_instance(instance: MetricInstance) -> str:
    return json.dumps(instance_to_dict(instance), indent=1, sort_keys=True) + "\n"


def loads_instance(text: str) -> MetricInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("instance document must be a JSON object")
    return instance_from_dict(doc)


def load_instance(path: str) -> MetricInstance:
    with open(path, encoding="utf-8") as fh:
        return loads_instance(fh.read())


def instance_digest(instance: MetricInstance) -> str:
    """SHA-256 of the canonical instance document."""
    canon = json.dumps(instance_to_dict(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def pair_record(p: Pair) -> list:
    return [p.center, rat(p.radius)]
