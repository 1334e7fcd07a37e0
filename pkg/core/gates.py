"""Canonical operators of the reference experiment.

Pauli observables, the six main-party observables, Bell-basis measurement,
teleportation corrections, parallel Bell measurements, conjugation-controlled
operators and the qudit-to-qubit encoding.
"""
import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from config.protocol import (
    AUX_SETTINGS,
    BELL_LABELS,
    BIT_OUTCOMES,
    CHSH_BLOCKS,
    EVEN_PAIRING,
    ODD_PAIRING,
    PAIR_LABEL_SEPARATOR,
    PAULI_OF_SETTING,
    TSIRELSON_BOUND,
)
from config.settings import FLAG_TOL
from core.errors import AlphabetError, ConventionError, InputError
from core.states import bell_state, phi_plus
from core.tensor import (
    LinOp,
    PureState,
    SiteLayout,
    apply_on_sites,
    lift_operator,
    reduced_matrix,
)

_I2 = np.eye(2, dtype=complex)
_PAULI = {
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
}
_SQRT2 = math.sqrt(2.0)

# A_x as (coefficient of z, x, y) / sqrt(2)
_MAIN_COEFFS = {
    0: (1, 1, 0),
    1: (1, -1, 0),
    2: (1, 0, -1),
    3: (1, 0, 1),
    4: (0, 1, -1),
    5: (0, 1, 1),
}

_CORRECTIONS = {
    "00": _I2,
    "01": _PAULI["z"],
    "10": _PAULI["x"],
    "11": _PAULI["x"] @ _PAULI["z"],
}


# ------------------------------------------------------------------
# Domain types
# ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProjectorSet:
    """Projective measurement: one projector per outcome label."""

    projectors: tuple[LinOp, ...]
    outcome_labels: tuple[str, ...]
    stack: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        projectors = tuple(self.projectors)
        labels = tuple(str(label) for label in self.outcome_labels)
        if not projectors or len(projectors) != len(labels):
            raise InputError("a measurement needs one projector per outcome label")
        if len(set(labels)) != len(labels):
            raise InputError(f"repeated outcome label in {labels}")
        layout = projectors[0].layout
        if any(p.layout != layout for p in projectors):
            raise InputError("projectors act on different registers")
        stack = np.stack([p.matrix for p in projectors])
        for label, p in zip(labels, projectors):
            if not p.hermitian_flag:
                raise InputError(f"projector {label} is not Hermitian")
        products = np.einsum("aij,bjk->abik", stack, stack)
        idx = np.arange(len(labels))
        if np.max(np.abs(products[idx, idx] - stack)) > FLAG_TOL:
            raise InputError("projectors are not idempotent")
        off = products.copy()
        off[idx, idx] = 0.0
        if np.max(np.abs(off)) > FLAG_TOL:
            raise InputError("projectors are not mutually orthogonal")
        if np.max(np.abs(stack.sum(axis=0) - np.eye(layout.total_dim))) > FLAG_TOL:
            raise InputError("projectors do not sum to the identity")
        stack.setflags(write=False)
        object.__setattr__(self, "projectors", projectors)
        object.__setattr__(self, "outcome_labels", labels)
        object.__setattr__(self, "stack", stack)

    @property
    def layout(self) -> SiteLayout:
        return self.projectors[0].layout

    def projector(self, label: str) -> LinOp:
        try:
            return self.projectors[self.outcome_labels.index(label)]
        except ValueError:
            raise AlphabetError(f"unknown outcome {label!r}; expected one of {self.outcome_labels}")

    def observable(self, signs=None) -> LinOp:
        """sum_a s_a P_a; the default signs (+1, -1) give the dichotomic observable."""
        if signs is None:
            signs = [(-1) ** i for i in range(len(self.projectors))]
        return LinOp(self.layout, np.tensordot(np.asarray(signs, dtype=complex), self.stack, axes=1))

    def conjugated(self) -> "ProjectorSet":
        return ProjectorSet(tuple(LinOp(p.layout, p.matrix.conj()) for p in self.projectors),
                            self.outcome_labels)


@dataclass(frozen=True, eq=False)
class Observable:
    """Dichotomic observable: Hermitian and unitary, spectrum in {+1, -1}."""

    op: LinOp

    def __post_init__(self):
        if not (self.op.hermitian_flag and self.op.unitary_flag):
            raise InputError("a dichotomic observable must be Hermitian and unitary")

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    def projector(self, bit: int | str) -> LinOp:
        b = int(bit)
        eye = np.eye(self.op.layout.total_dim)
        return LinOp(self.op.layout, (eye + (-1) ** b * self.op.matrix) / 2)

    def projector_set(self) -> ProjectorSet:
        return ProjectorSet(tuple(self.projector(b) for b in BIT_OUTCOMES), BIT_OUTCOMES)


def observable_projector(obs: Observable | LinOp, bit: int | str) -> LinOp:
    """(1 + (-1)^b O)/2 for a dichotomic observable O."""
    if isinstance(obs, LinOp):
        obs = Observable(obs)
    return obs.projector(bit)


# ------------------------------------------------------------------
# Single-qubit observables
# ------------------------------------------------------------------

def _setting_index(value, upper: int) -> int:
    try:
        idx = int(value)
    except (TypeError, ValueError):
        raise AlphabetError(f"setting {value!r} is not an integer")
    if idx < 0 or idx >= upper:
        raise AlphabetError(f"setting {idx} out of range 0..{upper - 1}")
    return idx


@functools.cache
def pauli(k: str) -> Observable:
    """sigma_z, sigma_x or sigma_y as an Observable."""
    if k not in _PAULI:
        raise AlphabetError(f"unknown Pauli {k!r}")
    return Observable(LinOp(SiteLayout.qubits(1), _PAULI[k]))


def _main_matrix(x: int) -> np.ndarray:
    cz, cx, cy = _MAIN_COEFFS[x]
    return (cz * _PAULI["z"] + cx * _PAULI["x"] + cy * _PAULI["y"]) / _SQRT2


@functools.cache
def _verify_convention() -> None:
    """Every CHSH block must reach 2*sqrt(2) on phi+ with un-negated aux Paulis."""
    phi = phi_plus().amplitudes
    for block, (x1, x2, y1, y2) in CHSH_BLOCKS.items():
        a1, a2 = _main_matrix(int(x1)), _main_matrix(int(x2))
        b1 = _PAULI[PAULI_OF_SETTING[y1]]
        b2 = _PAULI[PAULI_OF_SETTING[y2]]
        op = np.kron(a1, b1) + np.kron(a1, b2) + np.kron(a2, b1) - np.kron(a2, b2)
        value = np.vdot(phi, op @ phi).real
        if abs(value - TSIRELSON_BOUND) > FLAG_TOL:
            raise ConventionError(f"CHSH block {block} reaches {value:.12f} on phi+")


@functools.cache
def main_observable(x: int | str) -> Observable:
    """A_x for x in 0..5 (combinations of two Paulis divided by sqrt(2))."""
    idx = _setting_index(x, len(_MAIN_COEFFS))
    _verify_convention()
    return Observable(LinOp(SiteLayout.qubits(1), _main_matrix(idx)))


def aux_projector(b: int | str, y: int | str) -> LinOp:
    """(1 + (-1)^b sigma_y)/2 with sigma_0 = z, sigma_1 = x, sigma_2 = y."""
    bit = _setting_index(b, 2)
    setting = AUX_SETTINGS[_setting_index(y, len(AUX_SETTINGS))]
    return observable_projector(pauli(PAULI_OF_SETTING[setting]), bit)


def product_pauli_measurement(settings: str) -> ProjectorSet:
    """Independent Pauli measurements, one digit of ``settings`` per qubit.

    Outcome labels are bit strings in qubit order.
    """
    per_site = [[aux_projector(b, y).matrix for b in range(2)] for y in settings]
    layout = SiteLayout.qubits(len(settings))
    projectors, labels = [], []
    for bits in itertools.product(range(2), repeat=len(settings)):
        mat = functools.reduce(np.kron, (per_site[i][b] for i, b in enumerate(bits)))
        projectors.append(LinOp(layout, mat))
        labels.append("".join(str(b) for b in bits))
    return ProjectorSet(tuple(projectors), tuple(labels))


def pauli_frame(n: int) -> list[ProjectorSet]:
    """All 3^n product Pauli measurements on n qubits, settings in lexicographic order."""
    return [product_pauli_measurement("".join(s)) for s in itertools.product(AUX_SETTINGS, repeat=n)]


# ------------------------------------------------------------------
# Bell measurements and teleportation
# ------------------------------------------------------------------

@functools.cache
def bell_basis() -> ProjectorSet:
    """Bell-state measurement with labels 00 phi+, 01 phi-, 10 psi+, 11 psi-."""
    layout = SiteLayout.qubits(2)
    projectors = []
    for label in BELL_LABELS:
        v = bell_state(label).amplitudes
        projectors.append(LinOp(layout, np.outer(v, v.conj())))
    return ProjectorSet(tuple(projectors), BELL_LABELS)


def _teleport_weight(phi: PureState, label: str) -> np.ndarray:
    """Bell outcome ``label`` on (phi, first half of phi+), corrected far half (unnormalized)."""
    joint = PureState(SiteLayout.qubits(3), np.kron(phi.amplitudes, phi_plus().amplitudes))
    projected = apply_on_sites(bell_basis().projector(label), (0, 1), joint)
    corrected = apply_on_sites(LinOp(SiteLayout.qubits(1), _CORRECTIONS[label]), (2,), projected)
    return reduced_matrix(corrected, (2,))


@functools.cache
def _verify_teleportation() -> None:
    rng = np.random.default_rng(7)
    test_vectors = [np.array([1, 0]), np.array([0, 1]), np.array([1, 1]) / _SQRT2,
                    np.array([1, 1j]) / _SQRT2]
    for _ in range(4):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        test_vectors.append(v / np.linalg.norm(v))
    for v in test_vectors:
        phi = PureState(SiteLayout.qubits(1), v)
        target = np.outer(phi.amplitudes, phi.amplitudes.conj()) / 4
        for label in BELL_LABELS:
            if np.max(np.abs(_teleport_weight(phi, label) - target)) > FLAG_TOL:
                raise ConventionError(f"teleportation identity fails for outcome {label}")


def correction_unitary(a: str) -> LinOp:
    """Pauli correction for Bell outcome ``a``: I, sigma_z, sigma_x, sigma_x sigma_z."""
    if a not in _CORRECTIONS:
        raise AlphabetError(f"unknown Bell outcome {a!r}")
    _verify_teleportation()
    return LinOp(SiteLayout.qubits(1), _CORRECTIONS[a])


def bsm_pairs(pairing: str, n: int) -> list[tuple[int, int]]:
    """0-based site pairs of the parallel Bell measurement.

    even: (0,1), (2,3), ...; odd: (n-1,0), (1,2), (3,4), ...
    The last site is left alone when n is odd.
    """
    if n < 2:
        raise InputError(f"parallel Bell measurements need at least 2 sites, got {n}")
    if pairing == EVEN_PAIRING:
        return [(2 * k, 2 * k + 1) for k in range(n // 2)]
    if pairing == ODD_PAIRING:
        return [(n - 1, 0)] + [(2 * k - 1, 2 * k) for k in range(1, n // 2)]
    raise AlphabetError(f"unknown pairing {pairing!r}")


def parallel_bsm(pairing: str, n: int) -> ProjectorSet:
    """Bell measurements on every pair of ``bsm_pairs``; labels joined with '.' in pair order."""
    pairs = bsm_pairs(pairing, n)
    layout = SiteLayout.qubits(n)
    lifted = [
        {label: lift_operator(bell_basis().projector(label), pair, layout).matrix
         for label in BELL_LABELS}
        for pair in pairs
    ]
    projectors, labels = [], []
    for combo in itertools.product(BELL_LABELS, repeat=len(pairs)):
        mat = functools.reduce(np.matmul, (lifted[k][label] for k, label in enumerate(combo)))
        projectors.append(LinOp(layout, mat))
        labels.append(PAIR_LABEL_SEPARATOR.join(combo))
    return ProjectorSet(tuple(projectors), tuple(labels))


# ------------------------------------------------------------------
# Conjugation control and qudit encoding
# ------------------------------------------------------------------

def conjugation_controlled(m: LinOp, flag_site_dim: int = 2) -> LinOp:
    """m on flag |0>, conj(m) on every other flag level; flag is the last site."""
    flag0 = np.zeros((flag_site_dim, flag_site_dim))
    flag0[0, 0] = 1.0
    rest = np.eye(flag_site_dim) - flag0
    layout = m.layout.concat(SiteLayout((flag_site_dim,)))
    return LinOp(layout, np.kron(m.matrix, flag0) + np.kron(m.matrix.conj(), rest))


def conjugation_controlled_set(ps: ProjectorSet, flag_site_dim: int = 2) -> ProjectorSet:
    return ProjectorSet(tuple(conjugation_controlled(p, flag_site_dim) for p in ps.projectors),
                        ps.outcome_labels)


def encode_qudit(psi: PureState) -> PureState:
    """Map every d-level site onto ceil(log2 d) qubits, |j> -> binary(j) big-endian."""
    dims = psi.layout.local_dims
    d = dims[0]
    if any(x != d for x in dims):
        raise InputError(f"qudit encoding needs equal local dimensions, got {dims}")
    k = max(1, math.ceil(math.log2(d)))
    padded = np.pad(psi.tensor(), [(0, 2 ** k - d)] * len(dims))
    return PureState(SiteLayout.qubits(k * len(dims)), padded.reshape(-1),
                     normalized=psi.normalized)
