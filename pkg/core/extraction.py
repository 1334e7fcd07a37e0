"""Extraction of the certified state from a physical model.

Operators are regularized to unitaries, the auxiliary side of every pair is
run through a SWAP circuit onto fresh ancillas (B'_j takes the qubit, B''_j
the flag), and the main parties' Bell measurements are undone by Pauli
corrections on B'. The output lives on B'_1..B'_N, B''_1..B''_N.
"""
import functools
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from config.protocol import AUX_SETTINGS, BELL_LABELS, BSM_INPUT, MAIN_SETTINGS
from config.settings import (
    ENSEMBLE_CUTOFF,
    ISOMETRY_TOL,
    KRAUS_TOL,
    REGULARIZE_ZERO_TOL,
)
from core.errors import (
    AlphabetError,
    DimensionMismatchError,
    InputError,
    KrausCompletenessError,
    MissingInputsError,
    NotHermitianError,
)
from core.gates import correction_unitary
from core.network import PhysicalModel, Variant
from core.tensor import (
    DensityOp,
    LinOp,
    PureState,
    SiteLayout,
    apply_on_sites,
    conjugate,
    reduced_matrix,
    tensor_product,
)

logger = logging.getLogger(__name__)

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)
_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)
_I2 = np.eye(2, dtype=complex)


# ------------------------------------------------------------------
# Regularized operators
# ------------------------------------------------------------------

def regularize(op: LinOp) -> LinOp:
    """Same eigenvectors, eigenvalues replaced by their sign (sign(0) = +1)."""
    if not op.hermitian_flag:
        raise NotHermitianError("only Hermitian operators can be regularized")
    values, vectors = np.linalg.eigh(op.matrix)
    signs = np.where(values < -REGULARIZE_ZERO_TOL, -1.0, 1.0)
    return LinOp(op.layout, (vectors * signs) @ vectors.conj().T)


def _unitarity_gap(m: np.ndarray) -> float:
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[1]))))


@dataclass(frozen=True, eq=False)
class RegularizedTriple:
    """Z, X, Y unitaries of one party plus their anticommutators on the party's reduced state."""

    z: LinOp
    x: LinOp
    y: LinOp
    anticommutators: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("z", "x", "y"):
            op = getattr(self, name)
            if op.layout != self.z.layout:
                raise DimensionMismatchError("triple operators act on different registers")
            gap = _unitarity_gap(op.matrix)
            if gap > ISOMETRY_TOL:
                raise InputError(f"{name.upper()} is not unitary (gap {gap:.3e})")

    @property
    def layout(self) -> SiteLayout:
        return self.z.layout


def anticommutation_residuals(triple: RegularizedTriple, rho: np.ndarray) -> dict[str, float]:
    """max-norm of {P, Q} rho for the pairs (Z,X), (Z,Y), (X,Y)."""
    ops = {"Z": triple.z.matrix, "X": triple.x.matrix, "Y": triple.y.matrix}
    out = {}
    for p, q in (("Z", "X"), ("Z", "Y"), ("X", "Y")):
        anti = ops[p] @ ops[q] + ops[q] @ ops[p]
        out[p + q] = float(np.max(np.abs(anti @ rho)))
    return out


def _observable(model: PhysicalModel, party: int, x: str, signs=None) -> LinOp:
    try:
        ps = model.measurement(party, x)
    except AlphabetError:
        raise MissingInputsError(
            f"party {model.scenario.party_names[party]} has no input {x!r} for its triple")
    return ps.observable(signs)


def build_party_triple(model: PhysicalModel, party: int, coordinate: int | None = None) -> RegularizedTriple:
    """Regularized (Z, X, Y) of one party.

    Main parties combine their settings as (A0+A1)/sqrt2, (A0-A1)/sqrt2 and
    (A2-A3)/sqrt2. Auxiliary parties use their Pauli settings directly; the
    fully network-assisted auxiliary party needs the pair ``coordinate`` and
    reads it from the vector input with that coordinate set and all others 0.
    """
    sc = model.scenario
    if sc.is_main(party):
        a = [_observable(model, party, x).matrix for x in MAIN_SETTINGS[:4]]
        layout = model.layout.restrict(model.party_sites[party])
        s = math.sqrt(2.0)
        z = regularize(LinOp(layout, (a[0] + a[1]) / s))
        x = regularize(LinOp(layout, (a[0] - a[1]) / s))
        y = regularize(LinOp(layout, (a[2] - a[3]) / s))
    elif sc.variant is Variant.NETWORK:
        z, x, y = (_observable(model, party, k) for k in AUX_SETTINGS)
    else:
        if coordinate is None or not 0 <= coordinate < sc.n:
            raise InputError(f"aux coordinate must be in 0..{sc.n - 1}, got {coordinate!r}")
        bits = np.array(list(itertools.product((0, 1), repeat=sc.n)))
        signs = (-1.0) ** bits[:, coordinate]
        base = [AUX_SETTINGS[0]] * sc.n
        ops = []
        for k in AUX_SETTINGS:
            vector = list(base)
            vector[coordinate] = k
            ops.append(_observable(model, party, "".join(vector), signs))
        z, x, y = ops
    triple = RegularizedTriple(z, x, y)
    rho = reduced_matrix(model.state, model.party_sites[party])
    return RegularizedTriple(z, x, y, anticommutation_residuals(triple, rho))


# ------------------------------------------------------------------
# SWAP circuits
# ------------------------------------------------------------------

def _controlled(w: np.ndarray, control: int) -> np.ndarray:
    """Controlled-w on (system, C', C''); control 0 selects C', 1 selects C''."""
    d = w.shape[0]
    eye = np.eye(d, dtype=complex)
    if control == 0:
        return np.kron(np.kron(eye, _P0), _I2) + np.kron(np.kron(w, _P1), _I2)
    return np.kron(np.kron(eye, _I2), _P0) + np.kron(np.kron(w, _I2), _P1)


def _hadamard(d: int, ancilla: int) -> np.ndarray:
    eye = np.eye(d, dtype=complex)
    if ancilla == 0:
        return np.kron(np.kron(eye, _H), _I2)
    return np.kron(np.kron(eye, _I2), _H)


@dataclass(frozen=True, eq=False)
class SideCircuit:
    """SWAP circuit of one party: a unitary on (party sites, C', C'')."""

    unitary: LinOp
    party_dims: tuple[int, ...]

    def isometry_matrix(self) -> np.ndarray:
        """The circuit with both ancillas fixed to |0>: a (4D x D) isometry."""
        return self.unitary.matrix[:, ::4]


def swap_side(triple: RegularizedTriple, side: str) -> SideCircuit:
    """H C'; controlled-Z; H C'; controlled-X; H C''; controlled-G; H C''.

    G = i Y X on the auxiliary side and i X Y on the main side, whose Y acts
    as -sigma_y; both choices mark the conjugated branch with C'' = 1.
    """
    if side not in ("main", "aux"):
        raise InputError(f"side must be 'main' or 'aux', got {side!r}")
    z, x, y = triple.z.matrix, triple.x.matrix, triple.y.matrix
    d = z.shape[0]
    g = 1j * (x @ y if side == "main" else y @ x)
    steps = [
        _hadamard(d, 0), _controlled(z, 0), _hadamard(d, 0), _controlled(x, 0),
        _hadamard(d, 1), _controlled(g, 1), _hadamard(d, 1),
    ]
    u = np.eye(4 * d, dtype=complex)
    for step in steps:
        u = step @ u
    layout = triple.layout.concat(SiteLayout.qubits(2))
    return SideCircuit(LinOp(layout, u), triple.layout.local_dims)


@dataclass(frozen=True, eq=False)
class SwapIsometry:
    """Main-side and aux-side SWAP circuits of pair j."""

    main: SideCircuit
    aux: SideCircuit
    pair: int

    def __post_init__(self):
        for circuit in (self.main, self.aux):
            v = circuit.isometry_matrix()
            gap = _unitarity_gap(v)
            if gap > ISOMETRY_TOL:
                raise InputError(f"SWAP circuit is not an isometry (gap {gap:.3e})")

    def isometry_matrix(self) -> np.ndarray:
        return np.kron(self.main.isometry_matrix(), self.aux.isometry_matrix())

    def apply(self, state: PureState, main_sites, aux_sites) -> PureState:
        """Append A', A'', B', B'' in |0> (in that order) and run both circuits."""
        out = tensor_product(state, PureState(SiteLayout.qubits(4), _zero(4)))
        m = state.layout.num_sites
        out = apply_on_sites(self.main.unitary, tuple(main_sites) + (m, m + 1), out)
        return apply_on_sites(self.aux.unitary, tuple(aux_sites) + (m + 2, m + 3), out)


def _zero(n: int) -> np.ndarray:
    v = np.zeros(2 ** n, dtype=complex)
    v[0] = 1.0
    return v


def swap_isometry(triple_main: RegularizedTriple, triple_aux: RegularizedTriple, pair: int) -> SwapIsometry:
    return SwapIsometry(swap_side(triple_main, "main"), swap_side(triple_aux, "aux"), pair)


# ------------------------------------------------------------------
# Extraction channel
# ------------------------------------------------------------------

class AlphaDecomposition(NamedTuple):
    alpha: float
    residual: float
    conjugate_weight: float


def decompose_alpha(extracted: DensityOp | PureState, psi: PureState) -> AlphaDecomposition:
    """Weights of psi (x) |0..0> and psi* (x) |1..1> in the extracted state."""
    n = psi.layout.num_sites
    if extracted.layout.local_dims != (2,) * (2 * n) or not psi.layout.is_qubits:
        raise DimensionMismatchError(
            f"extracted state on {extracted.layout.local_dims} for a {n}-qubit target")
    flags0 = _zero(n)
    flags1 = np.zeros(2 ** n, dtype=complex)
    flags1[-1] = 1.0
    plain = np.kron(psi.amplitudes, flags0)
    conj = np.kron(conjugate(psi).amplitudes, flags1)
    if isinstance(extracted, PureState):
        alpha = abs(np.vdot(plain, extracted.amplitudes)) ** 2
        beta = abs(np.vdot(conj, extracted.amplitudes)) ** 2
        total = extracted.norm ** 2
    else:
        alpha = np.vdot(plain, extracted.matrix @ plain).real
        beta = np.vdot(conj, extracted.matrix @ conj).real
        total = extracted.trace
    alpha, beta = float(alpha), float(beta)
    return AlphaDecomposition(alpha, max(0.0, float(total) - alpha - beta), beta)


@dataclass
class ExtractionResult:
    extracted: DensityOp
    alpha: float
    conjugate_weight: float
    residual: float
    fidelity: float
    trace: float
    flag_pattern: dict[str, float]
    anticommutators: list[dict[str, float]]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "conjugate_weight": self.conjugate_weight,
            "residual": self.residual,
            "fidelity": self.fidelity,
            "trace": self.trace,
            "flag_pattern": self.flag_pattern,
            "anticommutators": self.anticommutators,
        }


def _ensemble(state: PureState | DensityOp) -> list[tuple[float, np.ndarray]]:
    if isinstance(state, PureState):
        return [(1.0, state.amplitudes)]
    values, vectors = np.linalg.eigh(state.matrix)
    return [(float(v), vectors[:, i]) for i, v in enumerate(values) if v > ENSEMBLE_CUTOFF]


def pair_isometries(model: PhysicalModel) -> list[tuple[SwapIsometry, tuple[int, ...], RegularizedTriple]]:
    """SWAP isometry of every pair with the aux sites it acts on and the aux triple."""
    sc = model.scenario
    out = []
    for j in range(sc.n):
        party = sc.aux_party(j)
        coordinate = j if sc.variant is Variant.FULLY else None
        triple = build_party_triple(model, party, coordinate)
        iso = swap_isometry(build_party_triple(model, j), triple, pair=j + 1)
        out.append((iso, model.party_sites[party], triple))
    return out


def _project_mains(vec: np.ndarray, model: PhysicalModel, layout: SiteLayout,
                   j: int, labels: tuple[str, ...], keep: tuple[int, ...],
                   corrections: dict[str, np.ndarray], acc: np.ndarray):
    """Accumulate the corrected B'B'' state of every Bell outcome tuple."""
    n = model.scenario.n
    if j == n:
        state = PureState(layout, vec, normalized=False)
        rho = reduced_matrix(state, keep)
        u = np.kron(functools.reduce(np.kron, [corrections[a] for a in labels]), np.eye(2 ** n))
        acc += u @ rho @ u.conj().T
        return
    ps = model.measurement(j, BSM_INPUT)
    sites = model.party_sites[j]
    for label in BELL_LABELS:
        projected = apply_on_sites(ps.projector(label), sites, PureState(layout, vec, normalized=False))
        if projected.norm ** 2 <= ENSEMBLE_CUTOFF:
            continue
        _project_mains(projected.amplitudes, model, layout, j + 1, labels + (label,), keep, corrections, acc)


def extraction_channel(model: PhysicalModel) -> ExtractionResult:
    """Apply sum_a (x)U_{a_j} (x)M_{a_j|bsm} V_B to the model state and reduce to B', B''."""
    sc = model.scenario
    n = sc.n
    if model.target is None:
        raise InputError("model has no target state to compare with")
    isometries = pair_isometries(model)
    base = model.layout.num_sites
    layout = model.layout.concat(SiteLayout.qubits(2 * n))
    primes = tuple(base + j for j in range(n))
    flags = tuple(base + n + j for j in range(n))
    keep = primes + flags
    corrections = {a: correction_unitary(a).matrix for a in BELL_LABELS}
    acc = np.zeros((4 ** n, 4 ** n), dtype=complex)
    ancillas = _zero(2 * n)
    for weight, vec in _ensemble(model.state):
        state = PureState(layout, np.kron(vec, ancillas), normalized=False)
        for j, (iso, sites, _) in enumerate(isometries):
            state = apply_on_sites(iso.aux.unitary, tuple(sites) + (primes[j], flags[j]), state)
        part = np.zeros_like(acc)
        _project_mains(state.amplitudes, model, layout, 0, (), keep, corrections, part)
        acc += weight * part
    trace = float(np.trace(acc).real)
    if abs(trace - 1.0) > KRAUS_TOL:
        raise KrausCompletenessError(f"extraction channel is not trace preserving: trace {trace!r}")
    acc = (acc + acc.conj().T) / 2 / trace
    extracted = DensityOp(SiteLayout.qubits(2 * n), acc)
    alpha, residual, beta = decompose_alpha(extracted, model.target)
    flag_rho = reduced_matrix(extracted, tuple(range(n, 2 * n)))
    flag_pattern = {
        "".join(bits): float(flag_rho[i, i].real)
        for i, bits in enumerate(itertools.product("01", repeat=n))
    }
    result = ExtractionResult(
        extracted=extracted,
        alpha=alpha,
        conjugate_weight=beta,
        residual=residual,
        fidelity=alpha + beta,
        trace=trace,
        flag_pattern=flag_pattern,
        anticommutators=[c[2].anticommutators for c in isometries],
    )
    logger.info("Extraction of %s model: alpha=%.10f fidelity=%.10f", model.label, alpha, alpha + beta)
    return result
