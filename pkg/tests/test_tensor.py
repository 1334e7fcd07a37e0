"""Tests for registers, states, operators and the basic tensor operations."""
import math

import numpy as np
import pytest

from core.errors import (
    AlphabetError,
    DimensionMismatchError,
    NormalizationError,
    NotHermitianError,
    NotPositiveError,
    SiteError,
)
from core.states import basis_state, bell_state, ghz_state, max_entangled, phi_plus, w_state
from core.tensor import (
    DensityOp,
    LinOp,
    PureState,
    SiteLayout,
    apply_on_sites,
    conjugate,
    expectation,
    fidelity,
    hermitian_eigensystem,
    lift_operator,
    partial_trace,
    partial_transpose,
    permute_sites,
    purify,
    random_density_op,
    random_pure_state,
    reduced_matrix,
    schmidt_decompose,
    schmidt_rank,
    tensor_product,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def test_layout_rejects_small_dims():
    with pytest.raises(SiteError):
        SiteLayout((2, 1))


def test_pure_state_checks_norm():
    with pytest.raises(NormalizationError):
        PureState(SiteLayout.qubits(1), [1.0, 1.0])
    sub = PureState(SiteLayout.qubits(1), [0.5, 0.0], normalized=False)
    assert sub.norm == pytest.approx(0.5)


def test_pure_state_checks_length():
    with pytest.raises(DimensionMismatchError):
        PureState(SiteLayout.qubits(2), [1.0, 0.0])


def test_site_zero_is_most_significant():
    psi = basis_state("10")
    assert psi.amplitudes[2] == 1.0
    qutrit = basis_state("12", dims=(2, 3))
    assert qutrit.amplitudes[5] == 1.0


def test_density_op_validation():
    with pytest.raises(NotHermitianError):
        DensityOp(SiteLayout.qubits(1), [[1.0, 1.0], [0.0, 0.0]])
    with pytest.raises(NotPositiveError):
        DensityOp(SiteLayout.qubits(1), np.diag([1.5, -0.5]))
    op = DensityOp(SiteLayout.qubits(1), np.diag([1.5, -0.5]), is_state=False)
    assert op.trace == pytest.approx(1.0)


def test_linop_flags():
    op = LinOp(SiteLayout.qubits(1), X)
    assert op.hermitian_flag and op.unitary_flag
    proj = LinOp(SiteLayout.qubits(1), np.diag([1.0, 0.0]))
    assert proj.hermitian_flag and not proj.unitary_flag


def test_partial_trace_of_bell_state_is_maximally_mixed():
    rho = partial_trace(phi_plus(), [0])
    np.testing.assert_allclose(rho.matrix, np.eye(2) / 2, atol=1e-14)


def test_partial_trace_cannot_remove_everything():
    with pytest.raises(SiteError, match="cannot trace out all sites"):
        reduced_matrix(phi_plus(), [])


def test_reduced_matrix_keeps_given_order():
    psi = tensor_product(basis_state("0"), basis_state("1"))
    forward = reduced_matrix(psi, [0, 1])
    backward = reduced_matrix(psi, [1, 0])
    assert forward[1, 1] == pytest.approx(1.0)
    assert backward[2, 2] == pytest.approx(1.0)


def test_partial_trace_pure_matches_mixed(rng):
    psi = random_pure_state(SiteLayout((2, 3, 2)), rng)
    a = partial_trace(psi, [0, 2]).matrix
    b = partial_trace(psi.density(), [0, 2]).matrix
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_partial_transpose_spectrum_of_phi_plus():
    values = np.linalg.eigvalsh(partial_transpose(phi_plus().density(), [1]).matrix)
    np.testing.assert_allclose(values, [-0.5, 0.5, 0.5, 0.5], atol=1e-12)


def test_partial_transpose_twice_is_identity(rng):
    rho = random_density_op(SiteLayout((2, 3)), rng)
    twice = partial_transpose(partial_transpose(rho, [0]), [0])
    np.testing.assert_allclose(twice.matrix, rho.matrix, atol=1e-14)


def test_eigensystem_descending(rng):
    rho = random_density_op(SiteLayout.qubits(2), rng)
    eig = hermitian_eigensystem(rho)
    assert np.all(np.diff(eig.values) <= 1e-15)
    recon = (eig.vectors * eig.values) @ eig.vectors.conj().T
    np.testing.assert_allclose(recon, rho.matrix, atol=1e-10)


def test_eigensystem_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        hermitian_eigensystem(LinOp(SiteLayout.qubits(1), [[0, 1], [0, 0]]))


def test_schmidt_ranks():
    assert schmidt_rank(phi_plus(), [0]) == 2
    assert schmidt_rank(basis_state("01"), [0]) == 1
    assert schmidt_rank(ghz_state(3), [0, 1]) == 2
    assert schmidt_rank(max_entangled(3), [0]) == 3


def test_schmidt_coefficients_reconstruct(rng):
    psi = random_pure_state(SiteLayout((2, 3)), rng)
    s = schmidt_decompose(psi, [0])
    assert np.sum(s.coefficients ** 2) == pytest.approx(1.0)
    recon = (s.left * s.coefficients) @ s.right.T
    np.testing.assert_allclose(recon.reshape(-1), psi.amplitudes, atol=1e-12)


def test_schmidt_needs_two_sides():
    with pytest.raises(SiteError):
        schmidt_decompose(phi_plus(), [0, 1])


def test_fidelity_pure_and_mixed(rng):
    psi = random_pure_state(SiteLayout.qubits(2), rng)
    assert fidelity(psi, psi) == pytest.approx(1.0)
    assert fidelity(psi, psi.density()) == pytest.approx(1.0)
    assert fidelity(psi.density(), psi.density()) == pytest.approx(1.0, abs=1e-6)
    assert fidelity(bell_state("00"), bell_state("11")) == pytest.approx(0.0)


def test_conjugate_of_real_state_is_itself():
    np.testing.assert_array_equal(conjugate(w_state(3)).amplitudes, w_state(3).amplitudes)


def test_apply_on_sites_matches_kron():
    psi = basis_state("000")
    out = apply_on_sites(LinOp(SiteLayout.qubits(1), X), [1], psi)
    np.testing.assert_allclose(out.amplitudes, basis_state("010").amplitudes)
    assert out.normalized


def test_apply_on_sites_to_density(rng):
    rho = random_density_op(SiteLayout.qubits(2), rng)
    op = LinOp(SiteLayout.qubits(1), Z)
    out = apply_on_sites(op, [0], rho)
    full = np.kron(Z, np.eye(2))
    np.testing.assert_allclose(out.matrix, full @ rho.matrix @ full.conj().T, atol=1e-14)


def test_apply_on_sites_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        apply_on_sites(LinOp(SiteLayout.qubits(2), np.eye(4)), [0], basis_state("00"))


def test_lift_operator_reversed_sites():
    cnot = np.eye(4)[[0, 1, 3, 2]]
    layout = SiteLayout.qubits(2)
    lifted = lift_operator(LinOp(layout, cnot), [1, 0], layout)
    swap = np.eye(4)[[0, 2, 1, 3]]
    np.testing.assert_allclose(lifted.matrix, swap @ cnot @ swap)


def test_permute_sites_roundtrip(rng):
    psi = random_pure_state(SiteLayout((2, 3, 2)), rng)
    moved = permute_sites(psi, [2, 0, 1])
    assert moved.layout.local_dims == (2, 2, 3)
    back = permute_sites(moved, [1, 2, 0])
    np.testing.assert_allclose(back.amplitudes, psi.amplitudes)


def test_purify_reproduces_state(rng):
    rho = random_density_op(SiteLayout.qubits(2), rng, rank=2)
    big = purify(rho)
    np.testing.assert_allclose(partial_trace(big, [0, 1]).matrix, rho.matrix, atol=1e-12)


def test_expectation_of_zz_on_ghz():
    zz = LinOp(SiteLayout.qubits(2), np.kron(Z, Z))
    assert expectation(ghz_state(3), zz, [0, 2]).real == pytest.approx(1.0)
    assert expectation(ghz_state(3).density(), zz, [1, 2]).real == pytest.approx(1.0)


def test_bell_state_amplitudes():
    np.testing.assert_allclose(bell_state("11").amplitudes, np.array([0, 1, -1, 0]) / math.sqrt(2))
    assert np.array_equal(bell_state("psi-").amplitudes, bell_state("11").amplitudes)
    with pytest.raises(AlphabetError):
        bell_state("22")
