"""Certification of a behavior against the reference correlations.

Three checks: maximal 3-CHSH violation on every (main, auxiliary) pair, the
tomography condition on the all-Bell-measurement rows, and, in the fully
network-assisted variant, the alignment correlations of the parallel Bell
measurements.
"""
import functools
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from config.protocol import (
    ALIGNMENT_FAMILIES,
    ALIGNMENT_PATTERN,
    AUX_SETTINGS,
    BELL_LABELS,
    BSM_INPUT,
    CHSH_BLOCKS,
    PAIR_LABEL_SEPARATOR,
    PAIRINGS,
    PAULI_OF_SETTING,
    THREE_CHSH_MAX,
)
from config.settings import DEFAULT_TOL_ALIGN, DEFAULT_TOL_CHSH, DEFAULT_TOL_TOMO
from core.behavior import Behavior
from core.errors import DimensionMismatchError, InputError
from core.gates import bsm_pairs, correction_unitary, pauli
from core.network import Scenario, Variant
from core.tensor import PureState, conjugate
from core.tomography import reconstruct_target

logger = logging.getLogger(__name__)

_SIGNS = np.array([1.0, -1.0])


@dataclass(frozen=True)
class Tolerance:
    eps_chsh: float = DEFAULT_TOL_CHSH
    eps_tomo: float = DEFAULT_TOL_TOMO
    eps_align: float = DEFAULT_TOL_ALIGN

    def __post_init__(self):
        for name in ("eps_chsh", "eps_tomo", "eps_align"):
            if getattr(self, name) < 0:
                raise InputError(f"{name} must be nonnegative, got {getattr(self, name)!r}")


# ------------------------------------------------------------------
# Correlators
# ------------------------------------------------------------------

@functools.cache
def _contexts(n: int) -> tuple[str, ...]:
    """Settings of the other N-1 coordinates of a fully-variant aux vector."""
    return tuple("".join(c) for c in itertools.product(AUX_SETTINGS, repeat=n - 1))


def _aux_vector(n: int, j: int, y: str, context: str) -> str:
    return context[:j] + y + context[j:]


@functools.cache
def _bit_signs(n: int, j: int) -> np.ndarray:
    """(-1)^{b_j} over the bit-string outcomes of an n-qubit product measurement."""
    bits = np.array(list(itertools.product((0, 1), repeat=n)))
    return (-1.0) ** bits[:, j]


def _correlator(behavior: Behavior, j: int, x: str, y: str, context: str | None = None) -> float:
    """<A_x^(j) B_y^(j)> with every other party marginalized."""
    sc = behavior.scenario
    n = sc.n
    aux = sc.aux_party(j)
    if sc.variant is Variant.NETWORK:
        return behavior.expectation({j: x, aux: y}, {j: _SIGNS, aux: _SIGNS})
    vector = _aux_vector(n, j, y, context if context is not None else AUX_SETTINGS[0] * (n - 1))
    return behavior.expectation({j: x, aux: vector}, {j: _SIGNS, aux: _bit_signs(n, j)})


def _check_pair(sc: Scenario, pair: int) -> int:
    if pair < 1 or pair > sc.n:
        raise InputError(f"pair {pair} out of range 1..{sc.n}")
    return pair - 1


def chsh_value(behavior: Behavior, pair: int, block: int, contexts: dict[str, str] | None = None) -> float:
    """CHSH(x1, x2; y1, y2) of ``block`` on the 1-based ``pair``.

    ``contexts`` maps an aux setting to the settings of the other coordinates
    of the aux vector (fully network-assisted variant only).
    """
    if block not in CHSH_BLOCKS:
        raise InputError(f"block {block} not in {sorted(CHSH_BLOCKS)}")
    j = _check_pair(behavior.scenario, pair)
    contexts = contexts or {}
    x1, x2, y1, y2 = CHSH_BLOCKS[block]

    def e(x, y):
        return _correlator(behavior, j, x, y, contexts.get(y))

    return e(x1, y1) + e(x1, y2) + e(x2, y1) - e(x2, y2)


@dataclass
class PairChsh:
    pair: int
    blocks: list[float]
    total: float
    worst_total: float
    deviation: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "pair": self.pair,
            "blocks": self.blocks,
            "total": self.total,
            "worst_total": self.worst_total,
            "deviation": self.deviation,
            "passed": self.passed,
        }


def chsh_contexts(behavior: Behavior, pair: int) -> np.ndarray:
    """3-CHSH totals of a fully-variant pair over every context triple.

    Axis k indexes the context used with aux setting k, in the order of
    the other coordinates of the aux vector.
    """
    sc = behavior.scenario
    if sc.variant is not Variant.FULLY:
        raise InputError("aux contexts exist only in the fully network-assisted variant")
    j = _check_pair(sc, pair)
    contexts = _contexts(sc.n)
    settings = sorted({x for block in CHSH_BLOCKS.values() for x in block[:2]})
    corr = {
        (x, y): np.array([_correlator(behavior, j, x, y, c) for c in contexts])
        for x in settings for y in AUX_SETTINGS
    }
    axis = {y: i for i, y in enumerate(AUX_SETTINGS)}
    total = np.zeros((len(contexts),) * len(AUX_SETTINGS))
    for x1, x2, y1, y2 in CHSH_BLOCKS.values():
        shape1 = [1] * len(AUX_SETTINGS)
        shape1[axis[y1]] = len(contexts)
        shape2 = [1] * len(AUX_SETTINGS)
        shape2[axis[y2]] = len(contexts)
        first = (corr[x1, y1] + corr[x2, y1]).reshape(shape1)
        second = (corr[x1, y2] - corr[x2, y2]).reshape(shape2)
        total = total + first + second
    return total


def check_3chsh(behavior: Behavior, tol: Tolerance | None = None) -> list[PairChsh]:
    """3-CHSH total of every pair against 6*sqrt(2)."""
    tol = tol or Tolerance()
    sc = behavior.scenario
    results = []
    for pair in range(1, sc.n + 1):
        blocks = [chsh_value(behavior, pair, b) for b in sorted(CHSH_BLOCKS)]
        total = float(sum(blocks))
        if sc.variant is Variant.FULLY:
            totals = chsh_contexts(behavior, pair)
            gaps = np.abs(totals - THREE_CHSH_MAX)
            worst = float(totals.reshape(-1)[int(np.argmax(gaps))])
        else:
            worst = total
        deviation = abs(worst - THREE_CHSH_MAX)
        passed = deviation <= tol.eps_chsh
        logger.debug("Pair %d: 3-CHSH %.12f (worst %.12f)", pair, total, worst)
        results.append(PairChsh(pair, blocks, total, worst, deviation, passed))
    return results


# ------------------------------------------------------------------
# Tomography condition
# ------------------------------------------------------------------

def _local_frame(conjugate_frame: bool) -> dict[tuple[str, str], np.ndarray]:
    """U_a^dagger sigma_k U_a for every Bell outcome a and aux setting k."""
    table = {}
    for a in BELL_LABELS:
        u = correction_unitary(a).matrix
        for k in AUX_SETTINGS:
            sigma = pauli(PAULI_OF_SETTING[k]).matrix
            if conjugate_frame:
                sigma = sigma.conj()
            table[a, k] = u.conj().T @ sigma @ u
    return table


def tomography_rhs(psi: PureState, n: int, conjugate_frame: bool = False) -> np.ndarray:
    """(1/4^N) <psi| (x)_j U_{a_j}^dagger sigma_{k_j} U_{a_j} |psi> as an array indexed (a..., k...)."""
    frame = _local_frame(conjugate_frame)
    tensor = psi.tensor()
    out = np.zeros((4,) * n + (3,) * n)
    for a in itertools.product(range(4), repeat=n):
        for k in itertools.product(range(3), repeat=n):
            t = tensor
            for j in range(n):
                op = frame[BELL_LABELS[a[j]], AUX_SETTINGS[k[j]]]
                t = np.moveaxis(np.tensordot(op, t, axes=([1], [j])), 0, j)
            out[a + k] = np.vdot(tensor, t).real / 4 ** n
    return out


def tomography_lhs(behavior: Behavior) -> np.ndarray:
    """<(x)_j M_{a_j|bsm} (x) B_k> from the behavior, indexed (a..., k...)."""
    sc = behavior.scenario
    n = sc.n
    out = np.zeros((4,) * n + (3,) * n)
    for k in itertools.product(range(3), repeat=n):
        settings = tuple(AUX_SETTINGS[i] for i in k)
        aux = settings if sc.variant is Variant.NETWORK else ("".join(settings),)
        row = behavior.probabilities((BSM_INPUT,) * n + aux)
        arr = row.reshape((4,) * n + (2,) * n)
        for _ in range(n):
            arr = np.tensordot(arr, _SIGNS, axes=([arr.ndim - 1], [0]))
        out[(Ellipsis,) + k] = arr
    return out


def check_tomography_condition(behavior: Behavior, psi: PureState,
                               conjugate_frame: bool = False) -> float:
    """Max over (a, k) of |LHS - RHS| of the tomography condition."""
    n = behavior.scenario.n
    if psi.layout.local_dims != (2,) * n:
        raise DimensionMismatchError(f"target on {psi.layout.local_dims} for N={n} qubits")
    if not psi.normalized:
        raise InputError("target state must be normalized")
    residual = float(np.max(np.abs(tomography_lhs(behavior) - tomography_rhs(psi, n, conjugate_frame))))
    logger.debug("Tomography residual %.3e", residual)
    return residual


# ------------------------------------------------------------------
# Alignment (fully network-assisted)
# ------------------------------------------------------------------

def _label_indicator(labels: tuple[str, ...], position: int, bell: str) -> np.ndarray:
    return np.array([1.0 if lab.split(PAIR_LABEL_SEPARATOR)[position] == bell else 0.0
                     for lab in labels])


def alignment_table(behavior: Behavior, pairing: str, position: int) -> dict[str, dict[str, float]]:
    """Correlations of the pair at ``position`` of ``pairing``, projected on each Bell label."""
    sc = behavior.scenario
    j, k = bsm_pairs(pairing, sc.n)[position]
    aux = sc.n
    labels = sc.outcomes(aux, pairing)
    table = {}
    for bell in BELL_LABELS:
        ind = _label_indicator(labels, position, bell)
        first = ALIGNMENT_FAMILIES["ZZ"][0][0]
        row = {"1": behavior.expectation({j: first, k: first, aux: pairing}, {aux: ind})}
        for family, (settings, signs) in ALIGNMENT_FAMILIES.items():
            value = 0.0
            for (x, sx), (xp, sxp) in itertools.product(zip(settings, signs), repeat=2):
                value += sx * sxp * behavior.expectation(
                    {j: x, k: xp, aux: pairing}, {j: _SIGNS, k: _SIGNS, aux: ind})
            row[family] = value / 2
        table[bell] = row
    return table


def check_alignment(behavior: Behavior) -> float:
    """Largest deviation of the alignment correlations from the +-1/4 pattern."""
    sc = behavior.scenario
    if sc.variant is not Variant.FULLY:
        raise InputError("alignment correlations exist only in the fully network-assisted variant")
    if sc.n < 2:
        return 0.0
    worst = 0.0
    for pairing in PAIRINGS:
        for position in range(len(bsm_pairs(pairing, sc.n))):
            table = alignment_table(behavior, pairing, position)
            for bell, row in table.items():
                for column, value in row.items():
                    worst = max(worst, abs(value - ALIGNMENT_PATTERN[bell][column]))
    logger.debug("Alignment residual %.3e", worst)
    return worst


# ------------------------------------------------------------------
# Report
# ------------------------------------------------------------------

@dataclass
class CertReport:
    variant: str
    n: int
    chsh: list[PairChsh]
    tomography_residual: float
    alignment_residual: float | None
    tolerance: Tolerance
    target_fidelity: float | None = None
    conjugate_fidelity: float | None = None
    chsh_passed: bool = field(init=False)
    tomography_passed: bool = field(init=False)
    alignment_passed: bool = field(init=False)

    def __post_init__(self):
        self.chsh_passed = all(p.passed for p in self.chsh)
        self.tomography_passed = self.tomography_residual <= self.tolerance.eps_tomo
        self.alignment_passed = (self.alignment_residual is None
                                 or self.alignment_residual <= self.tolerance.eps_align)

    @property
    def passed(self) -> bool:
        return self.chsh_passed and self.tomography_passed and self.alignment_passed

    @property
    def failing_pairs(self) -> list[int]:
        return [p.pair for p in self.chsh if not p.passed]

    def to_dict(self) -> dict:
        return {
            "scenario": {"variant": self.variant, "n": self.n},
            "passed": self.passed,
            "chsh": {
                "passed": self.chsh_passed,
                "target": THREE_CHSH_MAX,
                "pairs": [p.to_dict() for p in self.chsh],
                "failing_pairs": self.failing_pairs,
            },
            "tomography": {
                "passed": self.tomography_passed,
                "max_residual": self.tomography_residual,
                "target_fidelity": self.target_fidelity,
                "conjugate_fidelity": self.conjugate_fidelity,
            },
            "alignment": {
                "passed": self.alignment_passed,
                "max_residual": self.alignment_residual,
            },
            "tolerance": {
                "chsh": self.tolerance.eps_chsh,
                "tomography": self.tolerance.eps_tomo,
                "alignment": self.tolerance.eps_align,
            },
        }


def certify(behavior: Behavior, psi: PureState, tol: Tolerance | None = None) -> CertReport:
    """Run every check of the behavior's variant; passes iff all checks pass."""
    tol = tol or Tolerance()
    sc = behavior.scenario
    chsh = check_3chsh(behavior, tol)
    tomo = check_tomography_condition(behavior, psi)
    align = check_alignment(behavior) if sc.variant is Variant.FULLY else None
    recon = reconstruct_target(behavior).rho
    rho = recon.matrix
    target_fid = float(np.vdot(psi.amplitudes, rho @ psi.amplitudes).real)
    conj = conjugate(psi).amplitudes
    conj_fid = float(np.vdot(conj, rho @ conj).real)
    report = CertReport(sc.variant.value, sc.n, chsh, tomo, align, tol, target_fid, conj_fid)
    if report.passed:
        logger.info("Certification passed: %s N=%d", sc.variant.value, sc.n)
    else:
        logger.warning("Certification failed: pairs %s, tomography %.3e, alignment %s",
                       report.failing_pairs, tomo, align)
    return report
