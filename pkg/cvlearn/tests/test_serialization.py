import json
import numpy as np
import pytest
from cvlearn.exceptions import ConfigError
from cvlearn.gg import gg_outcome_probability, make_cat_state
from cvlearn.learner import HypothesisParam, circuit_probability
from cvlearn.photodetection import PhotoCountEffect
from cvlearn.serialization import config_hash, dump, from_dict, load, to_dict
from cvlearn.symplectic import (
    GaussianChannel,
    GaussianState,
    GeneralDyneEffect,
    HalfSpaceEffect,
)


def test_cat_state_document():
    cat = make_cat_state(0.9, -1)
    doc = json.loads(json.dumps(to_dict(cat)))
    assert doc["type"] == "gg-state"
    restored = from_dict(doc)
    effect = GeneralDyneEffect.heterodyne([0.4, 0.1])
    assert gg_outcome_probability(restored, None, effect) == pytest.approx(
        gg_outcome_probability(cat, None, effect), abs=1e-14
    )


def test_hypothesis_with_template(rng):
    hyp = HypothesisParam.random("gg-fixed-coeff", 1, rng, template=make_cat_state(1.0))
    restored = from_dict(json.loads(json.dumps(to_dict(hyp))))
    assert restored.kind == "gg-fixed-coeff"
    np.testing.assert_array_equal(restored.theta, hyp.theta)
    effect = GeneralDyneEffect.heterodyne([0.2, -0.3])
    assert circuit_probability(restored.decode(), None, effect) == pytest.approx(
        circuit_probability(hyp.decode(), None, effect), abs=1e-14
    )


def test_file_documents(tmp_path):
    objects = [
        GaussianState.squeezed(0.3, alpha=0.2),
        GaussianChannel.loss(0.6),
        HalfSpaceEffect([1.0, 0.0], 0.5),
        PhotoCountEffect(2, {(1,): 1.0, (2,): 0.5}),
    ]
    for index, obj in enumerate(objects):
        path = tmp_path / f"object{index}.json"
        dump(obj, path)
        assert to_dict(load(path)) == to_dict(obj)


def test_config_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


def test_missing_type_tag():
    with pytest.raises(ConfigError, match="type"):
        from_dict({"mean": [0.0, 0.0]})


def test_missing_field():
    with pytest.raises(ConfigError, match="cov"):
        from_dict({"type": "gaussian-state", "mean": [0.0, 0.0]})


def test_unknown_type():
    with pytest.raises(ConfigError):
        from_dict({"type": "wavefunction"})
    with pytest.raises(ConfigError):
        to_dict(object())


def test_unparsable_file(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load(path)


def test_load_notes_the_file(tmp_path):
    path = tmp_path / "partial.json"
    path.write_text(json.dumps({"type": "general-dyne", "outcome": [0.0, 0.0]}))
    with pytest.raises(ConfigError) as excinfo:
        load(path)
    assert "partial.json" in str(excinfo.value) + "".join(getattr(excinfo.value, "__notes__", []))
