"""Tests for the 3-CHSH, tomography and alignment checks and the certification report."""
import functools
import itertools
import math
import time

import numpy as np
import pytest

from config.protocol import ALIGNMENT_PATTERN, BELL_LABELS, CHSH_BLOCKS, THREE_CHSH_MAX
from core.adversary import AdversaryKind, make_model
from core.behavior import Behavior, behavior_of, certification_inputs, reference_behavior
from core.certifier import (
    Tolerance,
    alignment_table,
    certify,
    check_3chsh,
    check_alignment,
    check_tomography_condition,
    chsh_contexts,
    chsh_value,
    tomography_lhs,
    tomography_rhs,
)
from core.errors import InputError
from core.gates import correction_unitary, pauli
from core.network import Scenario, Variant
from core.states import basis_state, complex_pair, ghz_state, random_target, w_state
from core.tensor import conjugate

SIX_ROOT_TWO = 6 * math.sqrt(2)


def test_three_chsh_constant():
    assert THREE_CHSH_MAX == pytest.approx(8.48528137, abs=1e-8)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_reference_ghz_reaches_six_root_two(n):
    sc = Scenario(Variant.NETWORK, n)
    b = reference_behavior(ghz_state(n), sc, certification_inputs(sc))
    results = check_3chsh(b)
    assert [r.pair for r in results] == list(range(1, n + 1))
    for r in results:
        assert r.total == pytest.approx(SIX_ROOT_TWO, abs=1e-12)
        assert r.blocks == pytest.approx([2 * math.sqrt(2)] * 3, abs=1e-12)
        assert r.passed


def test_full_ghz3_certification_is_fast_and_passes():
    start = time.perf_counter()
    sc = Scenario(Variant.NETWORK, 3)
    b = reference_behavior(ghz_state(3), sc)
    report = certify(b, ghz_state(3))
    assert time.perf_counter() - start < 60.0
    assert len(b.table) == 9261
    assert report.passed
    assert report.chsh[0].total == pytest.approx(8.48528137, abs=1e-8)


def test_chsh_value_single_block():
    b = reference_behavior(ghz_state(1), Scenario(Variant.NETWORK, 1))
    assert chsh_value(b, 1, 2) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    with pytest.raises(InputError):
        chsh_value(b, 2, 1)
    with pytest.raises(InputError):
        chsh_value(b, 1, 4)


@pytest.mark.parametrize("psi", [ghz_state(2), w_state(2), complex_pair(), basis_state("01")])
def test_tomography_condition_on_reference(psi):
    for variant in Variant:
        sc = Scenario(variant, 2)
        b = reference_behavior(psi, sc, certification_inputs(sc))
        assert check_tomography_condition(b, psi) < 1e-9


def _rhs_by_kron(psi, n):
    """(1/4^N) <psi| (x) U^dag sigma U |psi> from full Kronecker products."""
    out = np.zeros((4,) * n + (3,) * n)
    v = psi.amplitudes
    for a in itertools.product(range(4), repeat=n):
        for k in itertools.product(range(3), repeat=n):
            ops = []
            for j in range(n):
                u = correction_unitary(BELL_LABELS[a[j]]).matrix
                ops.append(u.conj().T @ pauli("zxy"[k[j]]).matrix @ u)
            full = functools.reduce(np.kron, ops)
            out[a + k] = np.vdot(v, full @ v).real / 4 ** n
    return out


def test_tomography_sides_match_kron_products():
    psi = complex_pair()
    expected = _rhs_by_kron(psi, 2)
    np.testing.assert_allclose(tomography_rhs(psi, 2), expected, atol=1e-14)
    b = reference_behavior(psi, Scenario(Variant.NETWORK, 2))
    assert np.max(np.abs(tomography_lhs(b) - expected)) < 1e-9


def test_tomography_conjugation_symmetry():
    psi = complex_pair()
    b = reference_behavior(psi, Scenario(Variant.NETWORK, 2), certification_inputs(Scenario(Variant.NETWORK, 2)))
    direct = check_tomography_condition(b, psi)
    mirrored = check_tomography_condition(b, conjugate(psi), conjugate_frame=True)
    assert direct == pytest.approx(mirrored, abs=1e-15)
    assert check_tomography_condition(b, conjugate(psi)) > 0.1


def test_wrong_target_fails_tomography():
    sc = Scenario(Variant.NETWORK, 2)
    b = reference_behavior(ghz_state(2), sc, certification_inputs(sc))
    report = certify(b, basis_state("00"))
    assert report.chsh_passed
    assert not report.tomography_passed
    assert not report.passed


@pytest.mark.parametrize("n", [2, 3, 4])
def test_alignment_pattern_fully(n):
    sc = Scenario(Variant.FULLY, n)
    b = reference_behavior(ghz_state(n), sc, certification_inputs(sc))
    assert check_alignment(b) < 1e-12
    table = alignment_table(b, "odd", 0)
    for bell in BELL_LABELS:
        for column, expected in ALIGNMENT_PATTERN[bell].items():
            assert table[bell][column] == pytest.approx(expected, abs=1e-12)
        assert abs(table[bell]["ZZ"]) == pytest.approx(0.25, abs=1e-12)


def test_alignment_only_in_fully_variant():
    b = reference_behavior(ghz_state(1), Scenario(Variant.NETWORK, 1))
    with pytest.raises(InputError):
        check_alignment(b)
    single = reference_behavior(ghz_state(1), Scenario(Variant.FULLY, 1))
    assert check_alignment(single) == 0.0


@pytest.mark.parametrize("n", [2, 3])
def test_fully_certification_passes(n):
    sc = Scenario(Variant.FULLY, n)
    psi = w_state(n)
    b = reference_behavior(psi, sc, certification_inputs(sc))
    report = certify(b, psi)
    assert report.passed
    for pair in report.chsh:
        assert pair.worst_total == pytest.approx(SIX_ROOT_TWO, abs=1e-10)
    assert report.alignment_residual < 1e-12


def test_noisy_pair_reduces_three_chsh_and_fails():
    sc = Scenario(Variant.NETWORK, 2)
    model = make_model(AdversaryKind.noisy(0.9, pair=1), ghz_state(2), sc)
    b = behavior_of(model, certification_inputs(sc))
    report = certify(b, ghz_state(2))
    assert report.chsh[0].total == pytest.approx(SIX_ROOT_TWO * 0.9, abs=1e-12)
    assert report.chsh[1].total == pytest.approx(SIX_ROOT_TWO, abs=1e-12)
    assert report.failing_pairs == [1]
    assert not report.passed


def test_tolerance_widens_acceptance():
    sc = Scenario(Variant.NETWORK, 1)
    model = make_model(AdversaryKind.noisy(0.999), ghz_state(1), sc)
    b = behavior_of(model)
    loose = Tolerance(eps_chsh=0.01, eps_tomo=0.01, eps_align=0.01)
    assert certify(b, ghz_state(1), loose).chsh_passed
    assert not certify(b, ghz_state(1)).chsh_passed
    with pytest.raises(InputError):
        Tolerance(eps_chsh=-1.0)


def test_report_dict_and_fidelities():
    psi = complex_pair()
    sc = Scenario(Variant.NETWORK, 2)
    report = certify(reference_behavior(psi, sc, certification_inputs(sc)), psi)
    data = report.to_dict()
    assert data["passed"] is True
    assert data["scenario"] == {"variant": "network", "n": 2}
    assert data["chsh"]["failing_pairs"] == []
    assert data["alignment"]["max_residual"] is None
    assert report.target_fidelity == pytest.approx(1.0, abs=1e-10)
    assert report.conjugate_fidelity == pytest.approx(0.0, abs=1e-10)


def test_random_targets_certify(rng):
    """Reference behaviors of Haar-random targets pass in both variants."""
    for variant in Variant:
        sc = Scenario(variant, 2)
        psi = random_target(2, rng)
        report = certify(reference_behavior(psi, sc, certification_inputs(sc)), psi)
        assert report.passed
        assert report.target_fidelity == pytest.approx(1.0, abs=1e-9)


def test_chsh_contexts_all_reach_the_maximum():
    sc = Scenario(Variant.FULLY, 2)
    b = reference_behavior(ghz_state(2), sc, certification_inputs(sc))
    totals = chsh_contexts(b, 2)
    assert totals.shape == (3, 3, 3)
    np.testing.assert_allclose(totals, SIX_ROOT_TWO, atol=1e-10)
    with pytest.raises(InputError):
        chsh_contexts(reference_behavior(ghz_state(1), Scenario(Variant.NETWORK, 1)), 1)


def test_chsh_value_ignores_relabeled_spectator_party():
    sc = Scenario(Variant.NETWORK, 2)
    b = reference_behavior(ghz_state(2), sc, certification_inputs(sc))
    # reverse every outcome label of A2, which pair 1 marginalizes away
    relabeled = Behavior(sc, {k: np.flip(arr, axis=1) for k, arr in b.table.items()})
    for block in CHSH_BLOCKS:
        assert chsh_value(relabeled, 1, block) == pytest.approx(chsh_value(b, 1, block), abs=1e-12)
    assert chsh_value(relabeled, 2, 1) == pytest.approx(-chsh_value(b, 2, 1), abs=1e-12)
