from __future__ import annotations

import json
from fractions import Fraction

import pytest

from sumradii.bench import random_instance, tight_instance
from sumradii.io import (
    ParseError,
    dumps_instance,
    instance_digest,
    instance_to_dict,
    load_instance,
    loads_instance,
)
from sumradii.metric import UNREACHABLE, Cardinality, ColoredWeight, ExplicitRadius, MetricInstance


def small(lb=None):
    d = ((0, 1, 3), (1, 0, 2), (3, 2, 0))
    return MetricInstance(d, k=2, m=1, lower_bounds=lb)


@pytest.mark.parametrize(
    "lb",
    [
        None,
        Cardinality((1, 2, 2)),
        ColoredWeight(
            (Fraction(1), Fraction(1, 2), Fraction(2)),
            (0, 1, 0),
            ({0: Fraction(1)}, {1: Fraction(1, 2)}, {0: Fraction(2), 1: Fraction(0)}),
        ),
        ExplicitRadius((Fraction(1), None, Fraction(2))),
    ],
)
def test_roundtrip(lb):
    inst = small(lb)
    again = loads_instance(dumps_instance(inst))
    assert again == inst
    assert instance_digest(again) == instance_digest(inst)


def test_roundtrip_euclidean_and_unreachable(tmp_path):
    for inst in (random_instance(6, dim=3, seed=4, k=2, m=1), tight_instance(3, 2)):
        path = tmp_path / "x.json"
        path.write_text(dumps_instance(inst))
        assert load_instance(str(path)) == inst
    doc = instance_to_dict(tight_instance(3, 2))
    assert doc["distances"][0][20] == "inf"
    assert loads_instance(json.dumps(doc)).d(0, 20) == UNREACHABLE


def test_points_document():
    doc = {"k": 1, "metric": "euclidean", "points": [["0", "0"], ["3", "4"]]}
    inst = loads_instance(json.dumps(doc))
    assert inst.d(0, 1) == 5


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        "[1, 2]",
        json.dumps({"distances": [["0"]]}),
        json.dumps({"k": 1, "distances": [["0", "1"], ["2", "0"]]}),
        json.dumps({"k": 1}),
        json.dumps({"k": 1, "distances": [["0", "x"], ["x", "0"]]}),
        json.dumps({"k": 1, "distances": [["0"]], "lower_bounds": {"variant": "nope"}}),
        json.dumps({"k": 1, "metric": "manhattan", "points": [[0]]}),
    ],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        loads_instance(text)


def test_digest_is_canonical():
    inst = random_instance(5, seed=1)
    text = dumps_instance(inst)
    reordered = json.dumps(json.loads(text), sort_keys=False, indent=4)
    assert instance_digest(loads_instance(reordered)) == instance_digest(inst)
