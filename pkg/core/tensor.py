"""Dense linear algebra over multi-site registers.

Every register is a tensor product of sites with explicit local dimensions.
Site 0 is the most significant index of the flattened register, so the
amplitude of |i_0 i_1 ... i_{n-1}> sits at the row-major index of
(i_0, ..., i_{n-1}) in an array of shape ``local_dims``.
"""
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import linalg as sla

from config.settings import (
    EIGEN_RESIDUAL_TOL,
    FLAG_TOL,
    HERMITIAN_TOL,
    NORM_TOL,
    PSD_FLOOR,
    SCHMIDT_TOL,
)
from core.errors import (
    DimensionMismatchError,
    NormalizationError,
    NotHermitianError,
    NotPositiveError,
    NumericalError,
    SiteError,
)


# ------------------------------------------------------------------
# Domain types
# ------------------------------------------------------------------

@dataclass(frozen=True)
class SiteLayout:
    """Ordered per-site dimensions of a register."""

    local_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.local_dims)
        if not dims:
            raise SiteError("a register needs at least one site")
        if any(d < 2 for d in dims):
            raise SiteError(f"local dimensions must be >= 2, got {dims}")
        object.__setattr__(self, "local_dims", dims)

    @classmethod
    def qubits(cls, n: int) -> "SiteLayout":
        return cls((2,) * n)

    @property
    def num_sites(self) -> int:
        return len(self.local_dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.local_dims)

    @property
    def is_qubits(self) -> bool:
        return all(d == 2 for d in self.local_dims)

    def check_sites(self, sites: Sequence[int]) -> tuple[int, ...]:
        """Validate an ordered list of distinct site indices and return it as a tuple."""
        out = tuple(int(s) for s in sites)
        for s in out:
            if s < 0 or s >= self.num_sites:
                raise SiteError(f"site {s} out of range for {self.num_sites} sites")
        if len(set(out)) != len(out):
            raise SiteError(f"repeated site in {out}")
        return out

    def dims_of(self, sites: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.local_dims[s] for s in sites)

    def restrict(self, sites: Sequence[int]) -> "SiteLayout":
        return SiteLayout(self.dims_of(self.check_sites(sites)))

    def concat(self, other: "SiteLayout") -> "SiteLayout":
        return SiteLayout(self.local_dims + other.local_dims)


@dataclass(frozen=True, eq=False)
class PureState:
    """Amplitude vector over a register; ``normalized=False`` marks subnormalized vectors."""

    layout: SiteLayout
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.layout.total_dim:
            raise DimensionMismatchError(
                f"{amps.size} amplitudes for a register of dimension {self.layout.total_dim}"
            )
        if self.normalized:
            norm = float(np.linalg.norm(amps))
            if abs(norm - 1.0) > NORM_TOL:
                raise NormalizationError(f"state norm {norm!r} differs from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.local_dims)

    def normalize(self) -> "PureState":
        return PureState(self.layout, self.amplitudes / self.norm)

    def density(self) -> "DensityOp":
        return DensityOp(
            self.layout,
            np.outer(self.amplitudes, self.amplitudes.conj()),
            normalized=self.normalized,
        )


@dataclass(frozen=True, eq=False)
class DensityOp:
    """Hermitian matrix over a register.

    ``normalized`` requires unit trace and ``is_state`` requires positive
    semidefiniteness down to the PSD floor. Operators that are Hermitian but
    not states (partial transposes, flagged mixtures) use ``is_state=False``.
    """

    layout: SiteLayout
    matrix: np.ndarray
    normalized: bool = True
    is_state: bool = True

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        dim = self.layout.total_dim
        if mat.shape != (dim, dim):
            raise DimensionMismatchError(f"matrix shape {mat.shape} for dimension {dim}")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
            raise NotHermitianError("density operator is not Hermitian")
        if self.normalized:
            tr = np.trace(mat).real
            if abs(tr - 1.0) > NORM_TOL:
                raise NormalizationError(f"trace {tr!r} differs from 1")
        if self.is_state:
            low = float(np.linalg.eigvalsh(mat)[0])
            if low < PSD_FLOOR:
                raise NotPositiveError(f"eigenvalue {low!r} below floor {PSD_FLOOR}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def as_linop(self) -> "LinOp":
        return LinOp(self.layout, self.matrix)


@dataclass(frozen=True, eq=False)
class LinOp:
    """Square operator over a register; hermitian/unitary flags are computed on construction."""

    layout: SiteLayout
    matrix: np.ndarray
    hermitian_flag: bool = field(init=False)
    unitary_flag: bool = field(init=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        dim = self.layout.total_dim
        if mat.shape != (dim, dim):
            raise DimensionMismatchError(f"matrix shape {mat.shape} for dimension {dim}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        herm = bool(np.max(np.abs(mat - mat.conj().T)) <= FLAG_TOL)
        unit = bool(np.max(np.abs(mat.conj().T @ mat - np.eye(dim))) <= FLAG_TOL)
        object.__setattr__(self, "hermitian_flag", herm)
        object.__setattr__(self, "unitary_flag", unit)

    @classmethod
    def identity(cls, layout: SiteLayout) -> "LinOp":
        return cls(layout, np.eye(layout.total_dim))

    @property
    def dagger(self) -> "LinOp":
        return LinOp(self.layout, self.matrix.conj().T)

    def __matmul__(self, other: "LinOp") -> "LinOp":
        if self.layout != other.layout:
            raise DimensionMismatchError("operator layouts differ")
        return LinOp(self.layout, self.matrix @ other.matrix)


class Eigensystem(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


class Schmidt(NamedTuple):
    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray


# ------------------------------------------------------------------
# Index plumbing
# ------------------------------------------------------------------

def _apply_rows(op: np.ndarray, sites: tuple[int, ...], dims: tuple[int, ...],
                block: np.ndarray) -> np.ndarray:
    """Apply ``op`` to the listed sites of the row index of a (dim x K) block."""
    k = len(sites)
    cols = block.shape[1]
    t = block.reshape(dims + (cols,))
    t = np.moveaxis(t, sites, tuple(range(k)))
    moved = t.shape
    t = (op @ t.reshape(op.shape[1], -1)).reshape(moved)
    t = np.moveaxis(t, tuple(range(k)), sites)
    return t.reshape(-1, cols)


def _check_local(op: LinOp, sites: tuple[int, ...], layout: SiteLayout):
    if op.layout.local_dims != layout.dims_of(sites):
        raise DimensionMismatchError(
            f"operator dims {op.layout.local_dims} do not match sites {sites} "
            f"with dims {layout.dims_of(sites)}"
        )


def reduced_matrix(state: PureState | DensityOp, sites: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on ``sites``, kept in the order given."""
    layout = state.layout
    keep = layout.check_sites(sites)
    if not keep:
        raise SiteError("cannot trace out all sites")
    rest = tuple(s for s in range(layout.num_sites) if s not in keep)
    dk = math.prod(layout.dims_of(keep))
    if isinstance(state, PureState):
        m = state.tensor().transpose(keep + rest).reshape(dk, -1)
        return m @ m.conj().T
    n = layout.num_sites
    t = state.matrix.reshape(layout.local_dims * 2)
    perm = keep + rest + tuple(n + s for s in keep) + tuple(n + s for s in rest)
    dr = layout.total_dim // dk
    t = t.transpose(perm).reshape(dk, dr, dk, dr)
    return np.trace(t, axis1=1, axis2=3)


# ------------------------------------------------------------------
# Operations
# ------------------------------------------------------------------

def tensor_product(a, b):
    """Tensor product of two states or operators of the same kind."""
    if type(a) is not type(b):
        raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")
    layout = a.layout.concat(b.layout)
    if isinstance(a, PureState):
        return PureState(layout, np.kron(a.amplitudes, b.amplitudes),
                         normalized=a.normalized and b.normalized)
    if isinstance(a, DensityOp):
        return DensityOp(layout, np.kron(a.matrix, b.matrix),
                         normalized=a.normalized and b.normalized,
                         is_state=a.is_state and b.is_state)
    return LinOp(layout, np.kron(a.matrix, b.matrix))


def partial_trace(rho: DensityOp | PureState, keep) -> DensityOp:
    """Trace out every site not in ``keep``; kept sites stay in ascending order."""
    keep = sorted(set(keep))
    if not keep:
        raise SiteError("cannot trace out all sites")
    m = reduced_matrix(rho, keep)
    m = (m + m.conj().T) / 2
    normalized = rho.normalized
    is_state = True if isinstance(rho, PureState) else rho.is_state
    return DensityOp(rho.layout.restrict(keep), m, normalized=normalized, is_state=is_state)


def partial_transpose(rho: DensityOp | LinOp, subset) -> LinOp:
    """Transpose the listed sites in the computational basis."""
    layout = rho.layout
    subset = layout.check_sites(sorted(set(subset)))
    n = layout.num_sites
    axes = list(range(2 * n))
    for s in subset:
        axes[s], axes[n + s] = n + s, s
    t = rho.matrix.reshape(layout.local_dims * 2).transpose(axes)
    return LinOp(layout, t.reshape(layout.total_dim, layout.total_dim))


def hermitian_eigensystem(m: LinOp | DensityOp) -> Eigensystem:
    """Eigenvalues in descending order with orthonormal eigenvectors as columns."""
    if isinstance(m, LinOp) and not m.hermitian_flag:
        raise NotHermitianError("eigensystem requested for a non-Hermitian operator")
    values, vectors = np.linalg.eigh(m.matrix)
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()
    recon = (vectors * values) @ vectors.conj().T
    residual = float(np.max(np.abs(m.matrix - recon)))
    if residual > EIGEN_RESIDUAL_TOL:
        raise NumericalError(f"eigendecomposition residual {residual:.3e}")
    return Eigensystem(values, vectors)


def schmidt_decompose(psi: PureState, bipartition) -> Schmidt:
    """Schmidt decomposition of ``psi`` across ``bipartition`` | complement.

    Both sides keep their sites in ascending order. Only coefficients above
    SCHMIDT_TOL are returned.
    """
    layout = psi.layout
    side = tuple(sorted(set(layout.check_sites(bipartition))))
    rest = tuple(s for s in range(layout.num_sites) if s not in side)
    if not side or not rest:
        raise SiteError("a bipartition needs sites on both sides")
    da = math.prod(layout.dims_of(side))
    m = psi.tensor().transpose(side + rest).reshape(da, -1)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    keep = s > SCHMIDT_TOL
    return Schmidt(s[keep], u[:, keep], vh[keep, :].T)


def schmidt_rank(psi: PureState, bipartition) -> int:
    return int(schmidt_decompose(psi, bipartition).coefficients.size)


def fidelity(a: PureState | DensityOp, b: PureState | DensityOp) -> float:
    """Uhlmann fidelity; reduces to |<a|b>|^2 for pure inputs."""
    if a.layout.local_dims != b.layout.local_dims:
        raise DimensionMismatchError(
            f"layouts {a.layout.local_dims} and {b.layout.local_dims} differ"
        )
    if isinstance(a, PureState) and isinstance(b, PureState):
        value = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    elif isinstance(a, PureState):
        value = np.vdot(a.amplitudes, b.matrix @ a.amplitudes).real
    elif isinstance(b, PureState):
        value = np.vdot(b.amplitudes, a.matrix @ b.amplitudes).real
    else:
        root = sla.sqrtm(a.matrix)
        value = np.trace(sla.sqrtm(root @ b.matrix @ root)).real ** 2
    return float(min(1.0, max(0.0, value)))


def conjugate(x):
    """Entrywise complex conjugation in the computational basis."""
    if isinstance(x, PureState):
        return PureState(x.layout, x.amplitudes.conj(), normalized=x.normalized)
    if isinstance(x, DensityOp):
        return DensityOp(x.layout, x.matrix.conj(), normalized=x.normalized, is_state=x.is_state)
    return LinOp(x.layout, x.matrix.conj())


def apply_on_sites(op: LinOp, sites: Sequence[int], target: PureState | DensityOp):
    """Apply a local operator to the ordered ``sites`` of ``target``.

    States are mapped to op|psi>, density operators to op rho op^dagger.
    """
    layout = target.layout
    sites = layout.check_sites(sites)
    _check_local(op, sites, layout)
    dims = layout.local_dims
    if isinstance(target, PureState):
        out = _apply_rows(op.matrix, sites, dims, target.amplitudes.reshape(-1, 1))
        return PureState(layout, out.reshape(-1),
                         normalized=target.normalized and op.unitary_flag)
    half = _apply_rows(op.matrix, sites, dims, target.matrix)
    full = _apply_rows(op.matrix, sites, dims, half.conj().T).conj().T
    full = (full + full.conj().T) / 2
    return DensityOp(layout, full, normalized=target.normalized and op.unitary_flag,
                     is_state=target.is_state)


def lift_operator(op: LinOp, sites: Sequence[int], layout: SiteLayout) -> LinOp:
    """Embed a local operator acting on the ordered ``sites`` into the full register."""
    sites = layout.check_sites(sites)
    _check_local(op, sites, layout)
    full = _apply_rows(op.matrix, sites, layout.local_dims, np.eye(layout.total_dim))
    return LinOp(layout, full)


def permute_sites(state, order: Sequence[int]):
    """Reorder sites: new site i is old site ``order[i]``."""
    layout = state.layout
    order = layout.check_sites(order)
    if len(order) != layout.num_sites:
        raise SiteError("a permutation must list every site once")
    new_layout = SiteLayout(layout.dims_of(order))
    n = layout.num_sites
    if isinstance(state, PureState):
        amps = state.tensor().transpose(order).reshape(-1)
        return PureState(new_layout, amps, normalized=state.normalized)
    axes = order + tuple(n + s for s in order)
    mat = state.matrix.reshape(layout.local_dims * 2).transpose(axes)
    mat = mat.reshape(layout.total_dim, layout.total_dim)
    if isinstance(state, DensityOp):
        return DensityOp(new_layout, mat, normalized=state.normalized, is_state=state.is_state)
    return LinOp(new_layout, mat)


def purify(rho: DensityOp) -> PureState:
    """Purification sum_i sqrt(l_i) |v_i>|i> with one purifying site of full dimension."""
    values, vectors = np.linalg.eigh(rho.matrix)
    if values[0] < PSD_FLOOR:
        raise NotPositiveError(f"eigenvalue {values[0]!r} below floor {PSD_FLOOR}")
    if abs(values.sum() - 1.0) > NORM_TOL:
        raise NormalizationError(f"trace {values.sum()!r} differs from 1")
    values = np.clip(values[::-1], 0.0, None)
    vectors = vectors[:, ::-1]
    dim = rho.layout.total_dim
    amps = (vectors * np.sqrt(values)).reshape(-1)
    layout = rho.layout.concat(SiteLayout((dim,)))
    return PureState(layout, amps / np.linalg.norm(amps))


def expectation(state: PureState | DensityOp, op: LinOp, sites: Sequence[int] | None = None) -> complex:
    """<op> on ``state``; ``sites`` places a local operator, default is the full register."""
    if sites is not None:
        op = lift_operator(op, sites, state.layout)
    if isinstance(state, PureState):
        return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))
    return complex(np.trace(op.matrix @ state.matrix))


# ------------------------------------------------------------------
# Random objects for property checks
# ------------------------------------------------------------------

def random_pure_state(layout: SiteLayout, rng: np.random.Generator) -> PureState:
    dim = layout.total_dim
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(layout, v / np.linalg.norm(v))


def random_density_op(layout: SiteLayout, rng: np.random.Generator,
                      rank: int | None = None) -> DensityOp:
    dim = layout.total_dim
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityOp(layout, rho / np.trace(rho).real)
