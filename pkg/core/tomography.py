"""Tomography up to complex conjugation.

Partial-transpose spectra of pure states, the [-1/2, 1] bounds on PT spectra,
linear-inversion tomography over projective frames, genuine multipartite
entanglement of pure states and the flagged-mixture / conjugation
decomposition used to recognize psi and psi* branches.
"""
import functools
import itertools
import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from config.protocol import AUX_SETTINGS, BELL_LABELS, BSM_INPUT
from config.settings import (
    CONJUGATION_FIT_TOL,
    FLAG_TOL,
    FRAME_RANK_TOL,
    NORMALIZATION_TOL,
    PSD_FLOOR,
    PT_LOWER,
    PT_UPPER,
    SCHMIDT_TOL,
)
from core.errors import (
    DimensionMismatchError,
    InputError,
    InvalidWeightsError,
    NormalizationError,
    RankDeficientFrameError,
)
from core.gates import ProjectorSet, correction_unitary, pauli_frame
from core.network import Variant
from core.tensor import (
    DensityOp,
    PureState,
    SiteLayout,
    partial_transpose,
    schmidt_decompose,
    schmidt_rank,
)

logger = logging.getLogger(__name__)


# ------------------------------------------------------------------
# Partial-transpose spectra
# ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PTSpectrum:
    """Eigenvalues of a pure state's partial transpose with their origin.

    Tags: ``square`` for lambda_i^2, ``plus`` / ``minus`` for
    +lambda_i lambda_j / -lambda_i lambda_j with i < j.
    """

    eigenvalues: np.ndarray
    tags: tuple[str, ...]

    def __post_init__(self):
        values = np.asarray(self.eigenvalues, dtype=float)
        if values.size != len(self.tags):
            raise InputError("one provenance tag per eigenvalue is required")
        if values.min() < PT_LOWER - FLAG_TOL or values.max() > PT_UPPER + FLAG_TOL:
            raise InputError(f"PT eigenvalues outside [{PT_LOWER}, {PT_UPPER}]")
        if abs(values.sum() - 1.0) > FLAG_TOL:
            raise NormalizationError(f"PT spectrum sums to {values.sum()!r}")
        values.setflags(write=False)
        object.__setattr__(self, "eigenvalues", values)
        object.__setattr__(self, "tags", tuple(self.tags))

    def sorted_values(self) -> np.ndarray:
        return np.sort(self.eigenvalues)[::-1]


def pt_spectrum_pure(schmidt) -> PTSpectrum:
    """Spectrum of (|phi><phi|)^{T_B} from the Schmidt coefficients of phi."""
    lam = np.asarray(schmidt, dtype=float).reshape(-1)
    if lam.size == 0 or np.any(lam < 0):
        raise InputError("Schmidt coefficients must be nonnegative")
    total = float(np.sum(lam ** 2))
    if abs(total - 1.0) > SCHMIDT_TOL:
        raise NormalizationError(f"squared Schmidt coefficients sum to {total!r}")
    values = list(lam ** 2)
    tags = ["square"] * lam.size
    for i, j in itertools.combinations(range(lam.size), 2):
        prod = lam[i] * lam[j]
        values.extend([prod, -prod])
        tags.extend(["plus", "minus"])
    return PTSpectrum(np.array(values), tuple(tags))


class PTBounds(NamedTuple):
    min_eig: float
    max_eig: float
    separable: bool


def pt_bounds_check(rho: DensityOp | PureState, subset) -> PTBounds:
    """Eigen-range of the partial transpose on ``subset``.

    A maximal PT eigenvalue of 1 witnesses a product state.
    """
    if isinstance(rho, PureState):
        rho = rho.density()
    values = np.linalg.eigvalsh(partial_transpose(rho, subset).matrix)
    low, high = float(values[0]), float(values[-1])
    return PTBounds(low, high, abs(high - 1.0) <= SCHMIDT_TOL)


# ------------------------------------------------------------------
# Linear-inversion tomography
# ------------------------------------------------------------------

class Reconstruction(NamedTuple):
    rho: DensityOp
    residual: float
    min_eig: float


def _frame_matrix(frame: list[ProjectorSet]) -> np.ndarray:
    """Rows conj(vec(P)) so that row . vec(rho) = Tr(P rho)."""
    return np.concatenate([ps.stack.conj().reshape(len(ps.outcome_labels), -1) for ps in frame])


def _frame_inverse(frame: list[ProjectorSet]) -> tuple[np.ndarray, np.ndarray]:
    a = _frame_matrix(frame)
    dim2 = a.shape[1]
    s = np.linalg.svd(a, compute_uv=False)
    rank = int(np.sum(s > FRAME_RANK_TOL * s[0]))
    if rank < dim2:
        raise RankDeficientFrameError(f"frame has rank {rank}, tomography needs {dim2}")
    return a, np.linalg.pinv(a)


@functools.cache
def _pauli_inverse(n: int) -> tuple[np.ndarray, np.ndarray]:
    return _frame_inverse(pauli_frame(n))


def _hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2


def reconstruct_state(frame: list[ProjectorSet], probabilities) -> Reconstruction:
    """Linear inversion of outcome probabilities over a tomographically complete frame.

    ``probabilities[i]`` lists the outcome probabilities of ``frame[i]`` in
    outcome-label order. Positivity of the result is reported, not enforced.
    """
    if len(frame) != len(probabilities):
        raise InputError(f"{len(probabilities)} probability rows for {len(frame)} measurements")
    layout = frame[0].layout
    if any(ps.layout != layout for ps in frame):
        raise DimensionMismatchError("frame measurements act on different registers")
    p = np.concatenate([np.asarray(row, dtype=float).reshape(-1) for row in probabilities])
    a, pinv = _frame_inverse(frame)
    if p.size != a.shape[0]:
        raise InputError(f"{p.size} probabilities for {a.shape[0]} frame outcomes")
    dim = layout.total_dim
    m = _hermitize((pinv @ p).reshape(dim, dim))
    residual = float(np.max(np.abs((a @ m.reshape(-1)).real - p)))
    return _finish(layout, m, residual)


def _finish(layout: SiteLayout, m: np.ndarray, residual: float) -> Reconstruction:
    min_eig = float(np.linalg.eigvalsh(m)[0])
    if min_eig < PSD_FLOOR:
        logger.warning("Reconstructed operator has negative eigenvalue %.3e", min_eig)
    rho = DensityOp(layout, m, normalized=False, is_state=False)
    return Reconstruction(rho, residual, min_eig)


def reconstruct_target(behavior) -> Reconstruction:
    """Teleported target read off the all-Bell-measurement rows of a behavior.

    For every Bell outcome tuple a, the auxiliary Pauli statistics give the
    (unnormalized) teleported state, which is corrected by the Pauli unitaries
    of a and summed.
    """
    sc = behavior.scenario
    n = sc.n
    a_mat, pinv = _pauli_inverse(n)
    columns = []
    for k in itertools.product(AUX_SETTINGS, repeat=n):
        aux = k if sc.variant is Variant.NETWORK else ("".join(k),)
        row = behavior.probabilities((BSM_INPUT,) * n + tuple(aux))
        columns.append(row.reshape(4 ** n, 2 ** n))
    probs = np.concatenate(columns, axis=1)
    dim = 2 ** n
    solved = pinv @ probs.T
    residual = float(np.max(np.abs((a_mat @ solved).real.T - probs)))
    blocks = solved.T.reshape(4 ** n, dim, dim)
    corrections = {label: correction_unitary(label).matrix for label in BELL_LABELS}
    total = np.zeros((dim, dim), dtype=complex)
    for idx, labels in enumerate(itertools.product(BELL_LABELS, repeat=n)):
        u = functools.reduce(np.kron, (corrections[label] for label in labels))
        total += u @ blocks[idx] @ u.conj().T
    return _finish(SiteLayout.qubits(n), _hermitize(total), residual)


# ------------------------------------------------------------------
# Entanglement structure
# ------------------------------------------------------------------

def bipartitions(n: int) -> list[tuple[int, ...]]:
    """The 2^(n-1) - 1 bipartitions of n sites, each given by the side holding site 0."""
    out = []
    for size in range(0, n - 1):
        for rest in itertools.combinations(range(1, n), size):
            out.append((0,) + rest)
    return out


def gme_check(psi: PureState) -> bool:
    """True iff psi has Schmidt rank > 1 across every bipartition."""
    n = psi.layout.num_sites
    if n == 1:
        return True
    return all(schmidt_rank(psi, side) > 1 for side in bipartitions(n))


def _transpose_pattern(pattern: str) -> tuple[int, ...]:
    return tuple(i for i, s in enumerate(pattern) if s == "-")


def flagged_mixture(psi: PureState, weights: dict[str, float]) -> DensityOp:
    """sum over flag patterns of alpha_pattern (|psi><psi|)^{T_pattern}.

    A pattern is a string of '+' / '-' per site; '-' sites are transposed.
    """
    n = psi.layout.num_sites
    total = float(sum(weights.values()))
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise InvalidWeightsError(f"flag weights sum to {total!r}")
    rho = psi.density()
    out = np.zeros_like(rho.matrix)
    for pattern, alpha in weights.items():
        if len(pattern) != n or set(pattern) - {"+", "-"}:
            raise InvalidWeightsError(f"bad flag pattern {pattern!r} for {n} sites")
        if alpha < 0:
            raise InvalidWeightsError(f"negative weight {alpha!r} for pattern {pattern}")
        sites = _transpose_pattern(pattern)
        part = partial_transpose(rho, sites).matrix if sites else rho.matrix
        out = out + alpha * part
    return DensityOp(psi.layout, _hermitize(out), is_state=False)


def conjugation_decomposition(rho: DensityOp | PureState, psi: PureState) -> float | None:
    """alpha with rho = alpha |psi><psi| + (1 - alpha) |psi*><psi*|, or None if no such alpha."""
    if isinstance(rho, PureState):
        rho = rho.density()
    if rho.layout.local_dims != psi.layout.local_dims:
        raise DimensionMismatchError("rho and psi live on different registers")
    p = np.outer(psi.amplitudes, psi.amplitudes.conj())
    q = p.conj()
    diff = p - q
    scale = float(np.vdot(diff, diff).real)
    if scale <= FLAG_TOL ** 2:
        alpha = 1.0
    else:
        alpha = float(np.vdot(diff, rho.matrix - q).real / scale)
        alpha = min(1.0, max(0.0, alpha))
    residual = float(np.max(np.abs(rho.matrix - (alpha * p + (1 - alpha) * q))))
    if residual > CONJUGATION_FIT_TOL:
        logger.debug("No conjugation decomposition: residual %.3e", residual)
        return None
    return alpha


def pt_listing(psi: PureState, subset) -> dict:
    """Partial-transpose spectrum of |psi><psi| on ``subset`` with its bounds.

    When the subset leaves a complement, the Schmidt-derived spectrum with
    provenance tags is included.
    """
    subset = tuple(sorted(set(psi.layout.check_sites(subset))))
    if not subset:
        raise InputError("partial transpose needs at least one site")
    values = np.sort(np.linalg.eigvalsh(partial_transpose(psi.density(), subset).matrix))[::-1]
    bounds = pt_bounds_check(psi, subset)
    listing = {
        "subset": list(subset),
        "eigenvalues": [float(v) for v in values],
        "sum": float(values.sum()),
        "min_eig": bounds.min_eig,
        "max_eig": bounds.max_eig,
        "within_bounds": bool(bounds.min_eig >= PT_LOWER - FLAG_TOL and bounds.max_eig <= PT_UPPER + FLAG_TOL),
        "separable": bounds.separable,
        "schmidt_spectrum": None,
    }
    if len(subset) < psi.layout.num_sites:
        spectrum = pt_spectrum_pure(schmidt_decompose(psi, subset).coefficients)
        order = np.argsort(-spectrum.eigenvalues, kind="stable")
        listing["schmidt_spectrum"] = {
            "eigenvalues": [float(spectrum.eigenvalues[i]) for i in order],
            "tags": [spectrum.tags[i] for i in order],
        }
    return listing
