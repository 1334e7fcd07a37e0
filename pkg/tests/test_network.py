"""Tests for scenarios and physical models of the two network variants."""
import numpy as np
import pytest

from core.errors import (
    AlphabetError,
    DimensionMismatchError,
    InputError,
    MissingInputsError,
    SourceIndependenceError,
)
from core.network import (
    PhysicalModel,
    Scenario,
    Variant,
    build_reference_model,
    network_state,
)
from core.states import basis_state, ghz_state, max_entangled, phi_plus
from core.tensor import LinOp, SiteLayout, apply_on_sites, reduced_matrix


def test_variant_parse():
    assert Variant.parse("FULLY") is Variant.FULLY
    with pytest.raises(InputError):
        Variant.parse("triangle")


def test_scenario_accepts_members_and_mixed_case():
    assert Variant.parse(Variant.FULLY) is Variant.FULLY
    assert Scenario(Variant.NETWORK, 2).variant is Variant.NETWORK
    assert Scenario("Fully", 2).variant is Variant.FULLY
    assert Scenario(Variant.NETWORK, 2) == Scenario("network", 2)


def test_network_scenario_alphabets():
    sc = Scenario(Variant.NETWORK, 2)
    assert sc.party_names == ("A1", "A2", "B1", "B2")
    assert sc.inputs(0) == ("0", "1", "2", "3", "4", "5", "bsm")
    assert sc.inputs(3) == ("0", "1", "2")
    assert sc.outcomes(0, "bsm") == ("00", "01", "10", "11")
    assert sc.outcomes(2, "1") == ("0", "1")


def test_fully_scenario_alphabets():
    sc = Scenario(Variant.FULLY, 2)
    assert sc.party_names == ("A1", "A2", "B")
    assert sc.inputs(2) == ("00", "01", "02", "10", "11", "12", "20", "21", "22", "even", "odd")
    assert sc.outcomes(2, "12") == ("00", "01", "10", "11")
    assert len(sc.outcomes(2, "even")) == 4
    assert sc.outcomes(2, "odd")[0] == "00"


def test_fully_scenario_single_party_has_only_vectors():
    sc = Scenario(Variant.FULLY, 1)
    assert sc.inputs(1) == ("0", "1", "2")


def test_fully_scenario_parallel_labels_join_pairs():
    sc = Scenario(Variant.FULLY, 4)
    labels = sc.outcomes(4, "odd")
    assert len(labels) == 16
    assert labels[-1] == "11.11"


@pytest.mark.parametrize("variant, n, count", [
    (Variant.NETWORK, 1, 21),
    (Variant.NETWORK, 3, 9261),
    (Variant.FULLY, 2, 49 * 11),
    (Variant.FULLY, 1, 21),
])
def test_input_tuple_counts(variant, n, count):
    sc = Scenario(variant, n)
    assert sc.num_input_tuples == count
    assert len(sc.input_tuples()) == count


def test_canonical_order_and_sort_key():
    sc = Scenario(Variant.NETWORK, 1)
    rows = sc.input_tuples()
    assert rows[0] == ("0", "0")
    assert rows[-1] == ("bsm", "2")
    assert sorted(rows, key=sc.sort_key) == rows
    with pytest.raises(AlphabetError):
        sc.sort_key(("7", "0"))


def test_scenario_dict_roundtrip():
    sc = Scenario(Variant.FULLY, 3)
    assert Scenario.from_dict(sc.to_dict()) == sc


def test_scenario_needs_a_party():
    with pytest.raises(InputError):
        Scenario(Variant.NETWORK, 0)


def test_network_state_layout():
    psi = network_state(basis_state("1"))
    # A1 = 1, then phi+ on (Abar1, B1)
    expected = np.kron([0, 1], phi_plus().amplitudes)
    np.testing.assert_allclose(psi.amplitudes, expected)


def test_reference_model_sites():
    model = build_reference_model(ghz_state(2), Scenario(Variant.NETWORK, 2))
    assert model.party_sites == ((0, 2), (1, 3), (4,), (5,))
    assert model.site_names == ("A1", "A2", "A1~", "A2~", "B1", "B2")
    full = build_reference_model(ghz_state(2), Scenario(Variant.FULLY, 2))
    assert full.party_sites[-1] == (4, 5)
    assert full.sources == ((0, 1), (2, 4), (3, 5))


def test_reference_model_rejects_bad_targets():
    with pytest.raises(DimensionMismatchError):
        build_reference_model(ghz_state(3), Scenario(Variant.NETWORK, 2))
    with pytest.raises(DimensionMismatchError):
        build_reference_model(max_entangled(3), Scenario(Variant.NETWORK, 2))


def test_fully_model_needs_sources():
    ref = build_reference_model(ghz_state(1), Scenario(Variant.FULLY, 1))
    with pytest.raises(SourceIndependenceError):
        PhysicalModel(ref.scenario, ref.state, ref.party_sites, ref.measurements)


def test_fully_model_rejects_correlated_sources():
    ref = build_reference_model(ghz_state(1), Scenario(Variant.FULLY, 1))
    cnot = LinOp(SiteLayout.qubits(2), np.eye(4)[[0, 1, 3, 2]])
    tangled = apply_on_sites(cnot, (0, 1), ref.state)
    with pytest.raises(SourceIndependenceError, match="violates source independence"):
        PhysicalModel(ref.scenario, tangled, ref.party_sites, ref.measurements, ref.sources)
    mixed = tangled.density()
    with pytest.raises(SourceIndependenceError, match="violates source independence"):
        PhysicalModel(ref.scenario, mixed, ref.party_sites, ref.measurements, ref.sources)


def test_model_checks_input_alphabets():
    ref = build_reference_model(ghz_state(1), Scenario(Variant.NETWORK, 1))
    partial = ({k: v for k, v in ref.measurements[0].items() if k != "bsm"}, ref.measurements[1])
    with pytest.raises(MissingInputsError):
        PhysicalModel(ref.scenario, ref.state, ref.party_sites, partial)


def test_model_observable_of_main_setting():
    ref = build_reference_model(ghz_state(1), Scenario(Variant.NETWORK, 1))
    obs = ref.observable(0, "0").matrix
    assert obs.shape == (4, 4)
    with pytest.raises(AlphabetError):
        ref.observable(0, "bsm")


def test_reference_pairs_are_maximally_entangled():
    model = build_reference_model(ghz_state(2), Scenario(Variant.NETWORK, 2))
    rho = reduced_matrix(model.state, (3, 5))
    np.testing.assert_allclose(rho, np.outer(phi_plus().amplitudes, phi_plus().amplitudes), atol=1e-14)
