"""Physical models that reproduce (or deliberately break) the reference correlations."""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from config.protocol import ADVERSARY_TAGS
from core.behavior import behavior_of
from core.errors import InputError, SourceIndependenceError
from core.gates import ProjectorSet, conjugation_controlled_set
from core.network import (
    PhysicalModel,
    Scenario,
    Variant,
    build_reference_model,
)
from core.states import phi_plus
from core.tensor import (
    DensityOp,
    LinOp,
    PureState,
    SiteLayout,
    apply_on_sites,
    conjugate,
    lift_operator,
    permute_sites,
    tensor_product,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdversaryKind:
    """Which realization to build.

    ``alpha`` is the weight of the unconjugated branch (flagged), ``seed``
    drives the Haar-random embeddings (isometry), ``visibility`` and the
    1-based ``pair`` describe the Werner-noise control (noisy).
    """

    tag: str
    alpha: float = 1.0
    seed: int = 0
    visibility: float = 1.0
    pair: int = 1

    def __post_init__(self):
        if self.tag not in ADVERSARY_TAGS:
            raise InputError(f"unknown adversary {self.tag!r}; expected one of {ADVERSARY_TAGS}")
        if not 0.0 <= self.alpha <= 1.0:
            raise InputError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if not 0.0 <= self.visibility <= 1.0:
            raise InputError(f"visibility must lie in [0, 1], got {self.visibility!r}")
        if self.pair < 1:
            raise InputError(f"pair index is 1-based, got {self.pair}")

    @classmethod
    def reference(cls) -> "AdversaryKind":
        return cls("reference")

    @classmethod
    def conjugate(cls) -> "AdversaryKind":
        return cls("conjugate")

    @classmethod
    def flagged(cls, alpha: float) -> "AdversaryKind":
        return cls("flagged", alpha=alpha)

    @classmethod
    def isometry(cls, seed: int) -> "AdversaryKind":
        return cls("isometry", seed=seed)

    @classmethod
    def noisy(cls, visibility: float, pair: int = 1) -> "AdversaryKind":
        return cls("noisy", visibility=visibility, pair=pair)

    @classmethod
    def parse(cls, text: str) -> "AdversaryKind":
        """'reference', 'conjugate', 'flagged:<alpha>', 'isometry:<seed>', 'noisy:<v>[:<pair>]'."""
        parts = text.strip().split(":")
        tag, args = parts[0].lower(), parts[1:]
        try:
            if tag in ("reference", "conjugate") and not args:
                return cls(tag)
            if tag == "flagged" and len(args) == 1:
                return cls.flagged(float(args[0]))
            if tag == "isometry" and len(args) == 1:
                return cls.isometry(int(args[0]))
            if tag == "noisy" and len(args) in (1, 2):
                return cls.noisy(float(args[0]), int(args[1]) if len(args) == 2 else 1)
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"cannot parse adversary {text!r}: {exc}")
        raise InputError(f"cannot parse adversary {text!r}")

    def describe(self) -> str:
        if self.tag == "flagged":
            return f"flagged:{self.alpha:g}"
        if self.tag == "isometry":
            return f"isometry:{self.seed}"
        if self.tag == "noisy":
            return f"noisy:{self.visibility:g}:{self.pair}"
        return self.tag


# ------------------------------------------------------------------
# Builders
# ------------------------------------------------------------------

def _conjugate_model(ref: PhysicalModel) -> PhysicalModel:
    measurements = tuple({x: ps.conjugated() for x, ps in table.items()} for table in ref.measurements)
    return PhysicalModel(ref.scenario, conjugate(ref.state), ref.party_sites, measurements,
                         ref.sources, ref.target, "conjugate", ref.site_names)


def _flagged_model(ref: PhysicalModel, alpha: float) -> PhysicalModel:
    """sqrt(alpha) Psi |0..0> + sqrt(1-alpha) Psi* |1..1>, one flag per party."""
    parties = ref.scenario.num_parties
    zeros = np.zeros(2 ** parties, dtype=complex)
    ones = np.zeros(2 ** parties, dtype=complex)
    zeros[0] = 1.0
    ones[-1] = 1.0
    psi = ref.state.amplitudes
    amps = np.sqrt(alpha) * np.kron(psi, zeros) + np.sqrt(1.0 - alpha) * np.kron(psi.conj(), ones)
    base = ref.layout.num_sites
    state = PureState(ref.layout.concat(SiteLayout.qubits(parties)), amps)
    party_sites = tuple(sites + (base + p,) for p, sites in enumerate(ref.party_sites))
    measurements = tuple({x: conjugation_controlled_set(ps) for x, ps in table.items()}
                         for table in ref.measurements)
    names = ref.site_names + tuple(f"flag_{name}" for name in ref.scenario.party_names)
    return PhysicalModel(ref.scenario, state, party_sites, measurements, None, ref.target,
                         f"flagged:{alpha:g}", names)


def _embedded(ps: ProjectorSet, w: np.ndarray, w_sites: tuple[int, ...]) -> ProjectorSet:
    """W (P (x) |0><0| + [first outcome] I (x) |1><1|) W^dagger with W on ``w_sites``.

    The extra qubit is the last site of the party register.
    """
    layout = ps.layout.concat(SiteLayout.qubits(1))
    dim = ps.layout.total_dim
    lifted = lift_operator(LinOp(SiteLayout(layout.dims_of(w_sites)), w), w_sites, layout).matrix
    zero = np.diag([1.0, 0.0])
    one = np.diag([0.0, 1.0])
    projectors = []
    for i, p in enumerate(ps.projectors):
        m = np.kron(p.matrix, zero)
        if i == 0:
            m = m + np.kron(np.eye(dim), one)
        projectors.append(LinOp(layout, lifted @ m @ lifted.conj().T))
    return ProjectorSet(tuple(projectors), ps.outcome_labels)


def _isometry_model(ref: PhysicalModel, seed: int) -> PhysicalModel:
    """Every party's register rotated by a Haar-random unitary into one extra qubit.

    Network variant: the unitary acts on all of the party's sites. Fully
    variant: it acts on one site per party (the Bell half for main parties,
    the first aux half for the aux party) and the extra qubit joins that
    site's source.
    """
    sc = ref.scenario
    rng = np.random.default_rng(seed)
    parties = sc.num_parties
    base = ref.layout.num_sites
    zeros = np.zeros(2 ** parties, dtype=complex)
    zeros[0] = 1.0
    state = PureState(ref.layout.concat(SiteLayout.qubits(parties)), np.kron(ref.state.amplitudes, zeros))
    party_sites, measurements = [], []
    sources = [list(group) for group in ref.sources] if ref.sources is not None else None
    for p, sites in enumerate(ref.party_sites):
        extra = base + p
        register = sites + (extra,)
        if sc.variant is Variant.NETWORK:
            local = tuple(range(len(register)))
        else:
            embedded_site = sites[-1] if sc.is_main(p) else sites[0]
            local = (register.index(embedded_site), len(register) - 1)
            for group in sources:
                if embedded_site in group:
                    group.append(extra)
        dim = int(np.prod(state.layout.dims_of(tuple(register[i] for i in local))))
        w = unitary_group.rvs(dim, random_state=rng)
        state = apply_on_sites(LinOp(state.layout.restrict([register[i] for i in local]), w),
                               [register[i] for i in local], state)
        party_sites.append(register)
        measurements.append({x: _embedded(ps, w, local) for x, ps in ref.measurements[p].items()})
    names = ref.site_names + tuple(f"extra_{name}" for name in sc.party_names)
    return PhysicalModel(sc, state, tuple(party_sites), tuple(measurements),
                         tuple(tuple(g) for g in sources) if sources is not None else None,
                         ref.target, f"isometry:{seed}", names)


def _noisy_model(ref: PhysicalModel, psi: PureState, visibility: float, pair: int) -> PhysicalModel:
    """Werner noise v phi+ + (1 - v) I/4 on the Bell pair of main party ``pair``."""
    n = ref.scenario.n
    if pair > n:
        raise InputError(f"pair {pair} out of range 1..{n}")
    bell = phi_plus().density().matrix
    werner = DensityOp(SiteLayout.qubits(2), visibility * bell + (1.0 - visibility) * np.eye(4) / 4)
    rho = psi.density()
    for j in range(1, n + 1):
        rho = tensor_product(rho, werner if j == pair else phi_plus().density())
    # pairs are laid out (Abar_1, B_1, Abar_2, B_2, ...) after the target
    order = list(range(n)) + [n + 2 * j for j in range(n)] + [n + 2 * j + 1 for j in range(n)]
    state = permute_sites(rho, order)
    return PhysicalModel(ref.scenario, state, ref.party_sites, ref.measurements, ref.sources,
                         ref.target, f"noisy:{visibility:g}:{pair}", ref.site_names)


def make_model(kind: AdversaryKind, psi: PureState, scenario: Scenario) -> PhysicalModel:
    """Build the realization ``kind`` of the reference experiment for target psi."""
    ref = build_reference_model(psi, scenario)
    if kind.tag == "reference":
        model = ref
    elif kind.tag == "conjugate":
        model = _conjugate_model(ref)
    elif kind.tag == "flagged":
        if scenario.variant is Variant.FULLY:
            raise SourceIndependenceError(
                "flagged superposition violates source independence: its flag register "
                "correlates every source"
            )
        model = _flagged_model(ref, kind.alpha)
    elif kind.tag == "isometry":
        model = _isometry_model(ref, kind.seed)
    else:
        model = _noisy_model(ref, psi, kind.visibility, kind.pair)
    logger.info("Built %s model for %s N=%d", model.label, scenario.variant.value, scenario.n)
    return model


def behavior_equivalence(model_a: PhysicalModel, model_b: PhysicalModel, input_tuples=None,
                         threads: int | None = None) -> float:
    """Max-abs deviation between the behaviors of two models of the same scenario."""
    if model_a.scenario != model_b.scenario:
        raise InputError("models belong to different scenarios")
    a = behavior_of(model_a, input_tuples, threads)
    b = behavior_of(model_b, input_tuples, threads)
    return a.max_difference(b)
