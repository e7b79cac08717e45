import json

import numpy as np
import pytest

from spectral_gate.verdict import CriterionVerdict, Status, Witness, _jsonable, trend_status


def test_violated_needs_witness():
    with pytest.raises(ValueError):
        CriterionVerdict(Status.VIOLATED)
    v = CriterionVerdict("violated", [Witness(0.0, (1.0,), 1.0)])
    assert v.status is Status.VIOLATED and not v.satisfied


def test_jsonable_handles_numpy_and_complex():
    doc = _jsonable({"a": np.float64(1.5), "b": np.arange(3), "c": np.array([1 + 2j]), "d": np.inf})
    text = json.dumps(doc)
    assert json.loads(text)["b"] == [0, 1, 2]


def test_trend_status():
    assert trend_status([1, 2, 3], 2.5)
    assert not trend_status([1, 3, 2], 0.5)
    assert not trend_status([1, 2, 3], 10)


def test_to_dict_round():
    v = CriterionVerdict(Status.SATISFIED_SAMPLED, [Witness(2.0, label="x")], {"k": np.int64(3)}, [{"r": 1.0}])
    d = v.to_dict()
    assert d["status"] == "satisfied (sampled)" and d["params"]["k"] == 3
