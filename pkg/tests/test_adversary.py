"""Tests for the adversarial realizations of the reference experiment."""
import numpy as np
import pytest

from core.adversary import AdversaryKind, behavior_equivalence, make_model
from core.behavior import behavior_of, certification_inputs
from core.certifier import certify
from core.errors import InputError, SourceIndependenceError
from core.network import Scenario, Variant, build_reference_model
from core.states import complex_pair, ghz_state, w_state


@pytest.mark.parametrize("text, expected", [
    ("reference", AdversaryKind.reference()),
    ("Conjugate", AdversaryKind.conjugate()),
    ("flagged:0.3", AdversaryKind.flagged(0.3)),
    ("isometry:7", AdversaryKind.isometry(7)),
    ("noisy:0.9", AdversaryKind.noisy(0.9)),
    ("noisy:0.8:2", AdversaryKind.noisy(0.8, pair=2)),
])
def test_parse(text, expected):
    assert AdversaryKind.parse(text) == expected


@pytest.mark.parametrize("text", ["", "flagged", "flagged:x", "isometry:1.5", "noisy:0.9:1:2", "mirror"])
def test_parse_rejects_malformed(text):
    with pytest.raises(InputError):
        AdversaryKind.parse(text)


def test_describe_roundtrips():
    for kind in (AdversaryKind.flagged(0.25), AdversaryKind.isometry(3), AdversaryKind.noisy(0.5, 2)):
        assert AdversaryKind.parse(kind.describe()) == kind


def test_kind_validation():
    with pytest.raises(InputError):
        AdversaryKind.flagged(1.2)
    with pytest.raises(InputError):
        AdversaryKind.noisy(-0.1)
    with pytest.raises(InputError):
        AdversaryKind.noisy(0.9, pair=0)


def test_flagged_rejected_in_fully_variant():
    with pytest.raises(SourceIndependenceError, match="violates source independence"):
        make_model(AdversaryKind.flagged(0.5), ghz_state(2), Scenario(Variant.FULLY, 2))


def test_noisy_pair_out_of_range():
    with pytest.raises(InputError):
        make_model(AdversaryKind.noisy(0.9, pair=3), ghz_state(2), Scenario(Variant.NETWORK, 2))


def test_flagged_behavior_independent_of_alpha():
    sc = Scenario(Variant.NETWORK, 2)
    psi = complex_pair()
    ref = build_reference_model(psi, sc)
    models = [make_model(AdversaryKind.flagged(a), psi, sc) for a in (0.0, 0.3, 1.0)]
    assert behavior_equivalence(models[0], models[1]) < 1e-10
    assert behavior_equivalence(models[1], models[2]) < 1e-10
    assert behavior_equivalence(models[1], ref) < 1e-10


@pytest.mark.parametrize("variant", list(Variant))
def test_conjugate_model_reproduces_reference(variant):
    sc = Scenario(variant, 2)
    psi = complex_pair()
    rows = certification_inputs(sc)
    assert behavior_equivalence(make_model(AdversaryKind.conjugate(), psi, sc),
                                build_reference_model(psi, sc), rows) < 1e-10


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_isometry_model_reproduces_reference(seed):
    sc = Scenario(Variant.NETWORK, 2)
    psi = w_state(2)
    assert behavior_equivalence(make_model(AdversaryKind.isometry(seed), psi, sc),
                                build_reference_model(psi, sc)) < 1e-10


def test_isometry_model_fully_variant():
    sc = Scenario(Variant.FULLY, 2)
    psi = ghz_state(2)
    model = make_model(AdversaryKind.isometry(4), psi, sc)
    assert model.sources is not None
    assert behavior_equivalence(model, build_reference_model(psi, sc), certification_inputs(sc)) < 1e-10


def test_isometry_seed_changes_the_model():
    sc = Scenario(Variant.NETWORK, 1)
    a = make_model(AdversaryKind.isometry(0), ghz_state(1), sc)
    b = make_model(AdversaryKind.isometry(1), ghz_state(1), sc)
    assert a.layout.total_dim == b.layout.total_dim
    assert not np.allclose(a.state.amplitudes, b.state.amplitudes)


def test_adversarial_behaviors_certify():
    sc = Scenario(Variant.NETWORK, 2)
    psi = complex_pair()
    rows = certification_inputs(sc)
    for kind in (AdversaryKind.conjugate(), AdversaryKind.flagged(0.3), AdversaryKind.isometry(2)):
        assert certify(behavior_of(make_model(kind, psi, sc), rows), psi).passed


def test_behavior_equivalence_needs_same_scenario():
    a = build_reference_model(ghz_state(1), Scenario(Variant.NETWORK, 1))
    b = build_reference_model(ghz_state(1), Scenario(Variant.FULLY, 1))
    with pytest.raises(InputError):
        behavior_equivalence(a, b)
