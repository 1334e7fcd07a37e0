"""Named target states used by tests, the command line and adversary models."""
import math

import numpy as np

from config.protocol import BELL_STATE_NAMES
from core.errors import AlphabetError
from core.tensor import PureState, SiteLayout, random_pure_state


def basis_state(bits: str, dims: tuple[int, ...] | None = None) -> PureState:
    """Computational basis state, e.g. ``basis_state("010")``."""
    levels = tuple(int(c) for c in bits)
    layout = SiteLayout(dims if dims is not None else (2,) * len(levels))
    amps = np.zeros(layout.total_dim, dtype=complex)
    amps[np.ravel_multi_index(levels, layout.local_dims)] = 1.0
    return PureState(layout, amps)


def bell_state(label: str) -> PureState:
    """Bell state for a two-bit label (00 phi+, 01 phi-, 10 psi+, 11 psi-) or its name."""
    names = {v: k for k, v in BELL_STATE_NAMES.items()}
    label = names.get(label, label)
    if label not in BELL_STATE_NAMES:
        raise AlphabetError(f"unknown Bell label {label!r}")
    parity, phase = int(label[0]), int(label[1])
    sign = -1.0 if phase else 1.0
    amps = np.zeros(4, dtype=complex)
    if parity == 0:
        amps[0], amps[3] = 1.0, sign
    else:
        amps[1], amps[2] = 1.0, sign
    return PureState(SiteLayout.qubits(2), amps / math.sqrt(2.0))


def phi_plus() -> PureState:
    return bell_state("00")


def ghz_state(n: int) -> PureState:
    """(|0...0> + |1...1>)/sqrt(2) on n qubits."""
    amps = np.zeros(2 ** n, dtype=complex)
    amps[0] = amps[-1] = 1.0 / math.sqrt(2.0)
    return PureState(SiteLayout.qubits(n), amps)


def w_state(n: int) -> PureState:
    """Equal superposition of the n single-excitation basis states."""
    amps = np.zeros(2 ** n, dtype=complex)
    for k in range(n):
        amps[1 << k] = 1.0 / math.sqrt(n)
    return PureState(SiteLayout.qubits(n), amps)


def complex_pair() -> PureState:
    """(|00> + i|11>)/sqrt(2): the smallest target that differs from its conjugate."""
    amps = np.array([1.0, 0.0, 0.0, 1.0j]) / math.sqrt(2.0)
    return PureState(SiteLayout.qubits(2), amps)


def max_entangled(d: int) -> PureState:
    """sum_j |jj>/sqrt(d) on two d-level sites."""
    amps = np.eye(d, dtype=complex).reshape(-1) / math.sqrt(d)
    return PureState(SiteLayout((d, d)), amps)


def random_target(n: int, rng: np.random.Generator) -> PureState:
    return random_pure_state(SiteLayout.qubits(n), rng)
