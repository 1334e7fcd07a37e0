"""Party structure of the two network scenarios and the physical models that realize them."""
import functools
import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from config.protocol import (
    AUX_SETTINGS,
    BELL_LABELS,
    BIT_OUTCOMES,
    BSM_INPUT,
    MAIN_INPUTS,
    MAIN_SETTINGS,
    PAIR_LABEL_SEPARATOR,
    PAIRINGS,
)
from config.settings import FLAG_TOL
from core.errors import (
    AlphabetError,
    DimensionMismatchError,
    InputError,
    MissingInputsError,
    SiteError,
    SourceIndependenceError,
)
from core.gates import (
    ProjectorSet,
    bell_basis,
    bsm_pairs,
    main_observable,
    parallel_bsm,
    product_pauli_measurement,
)
from core.states import phi_plus
from core.tensor import (
    DensityOp,
    LinOp,
    PureState,
    SiteLayout,
    permute_sites,
    reduced_matrix,
    tensor_product,
)

logger = logging.getLogger(__name__)


class Variant(str, Enum):
    NETWORK = "network"
    FULLY = "fully"

    @classmethod
    def parse(cls, text: "str | Variant") -> "Variant":
        if isinstance(text, cls):
            return text
        try:
            return cls(str(text).lower())
        except ValueError:
            raise InputError(f"unknown variant {text!r}; expected 'network' or 'fully'")


# ------------------------------------------------------------------
# Scenario
# ------------------------------------------------------------------

@functools.cache
def _aux_vectors(n: int) -> tuple[str, ...]:
    return tuple("".join(v) for v in itertools.product(AUX_SETTINGS, repeat=n))


@functools.cache
def _bit_strings(n: int) -> tuple[str, ...]:
    return tuple("".join(v) for v in itertools.product(BIT_OUTCOMES, repeat=n))


@functools.cache
def _pairing_labels(pairing: str, n: int) -> tuple[str, ...]:
    pairs = len(bsm_pairs(pairing, n))
    return tuple(PAIR_LABEL_SEPARATOR.join(c) for c in itertools.product(BELL_LABELS, repeat=pairs))


@dataclass(frozen=True)
class Scenario:
    """Parties, inputs and outcomes of an N-party network experiment.

    Network-assisted: main parties A1..AN and one auxiliary party per main
    party, B1..BN. Fully network-assisted: main parties A1..AN and a single
    auxiliary party B whose inputs are Pauli setting vectors plus the two
    parallel Bell measurements.
    """

    variant: Variant
    n: int

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if int(self.n) < 1:
            raise InputError(f"at least one main party is required, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def num_parties(self) -> int:
        return 2 * self.n if self.variant is Variant.NETWORK else self.n + 1

    @property
    def party_names(self) -> tuple[str, ...]:
        mains = tuple(f"A{j + 1}" for j in range(self.n))
        if self.variant is Variant.NETWORK:
            return mains + tuple(f"B{j + 1}" for j in range(self.n))
        return mains + ("B",)

    def is_main(self, party: int) -> bool:
        return party < self.n

    def aux_party(self, j: int) -> int:
        """Index of the auxiliary party that holds the other half of pair j."""
        return self.n + j if self.variant is Variant.NETWORK else self.n

    def inputs(self, party: int) -> tuple[str, ...]:
        if party < 0 or party >= self.num_parties:
            raise AlphabetError(f"party {party} out of range for {self.num_parties} parties")
        if self.is_main(party):
            return MAIN_INPUTS
        if self.variant is Variant.NETWORK:
            return AUX_SETTINGS
        if self.n < 2:
            return _aux_vectors(self.n)
        return _aux_vectors(self.n) + PAIRINGS

    def outcomes(self, party: int, x: str) -> tuple[str, ...]:
        if x not in self.inputs(party):
            raise AlphabetError(f"input {x!r} not available to party {self.party_names[party]}")
        if self.is_main(party):
            return BELL_LABELS if x == BSM_INPUT else BIT_OUTCOMES
        if self.variant is Variant.NETWORK:
            return BIT_OUTCOMES
        if x in PAIRINGS:
            return _pairing_labels(x, self.n)
        return _bit_strings(self.n)

    def input_tuples(self) -> list[tuple[str, ...]]:
        """All input tuples in canonical order (product of party alphabets in party order)."""
        return list(itertools.product(*(self.inputs(p) for p in range(self.num_parties))))

    @property
    def num_input_tuples(self) -> int:
        total = 1
        for p in range(self.num_parties):
            total *= len(self.inputs(p))
        return total

    def sort_key(self, inputs: tuple[str, ...]) -> tuple[int, ...]:
        """Position of ``inputs`` in the canonical order, as a tuple of alphabet indices."""
        if len(inputs) != self.num_parties:
            raise AlphabetError(f"expected {self.num_parties} inputs, got {len(inputs)}")
        key = []
        for p, x in enumerate(inputs):
            alphabet = self.inputs(p)
            if x not in alphabet:
                raise AlphabetError(f"input {x!r} not available to party {self.party_names[p]}")
            key.append(alphabet.index(x))
        return tuple(key)

    def to_dict(self) -> dict:
        return {"variant": self.variant.value, "n": self.n}

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(Variant.parse(d["variant"]), int(d["n"]))


# ------------------------------------------------------------------
# Physical models
# ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PhysicalModel:
    """A quantum realization of a scenario: global state plus local projective measurements.

    ``party_sites[p]`` lists the sites owned by party p in the order its
    projectors act on them. ``sources`` partitions the register into
    independently prepared states; it is mandatory in the fully
    network-assisted variant and checked for exact factorization.
    """

    scenario: Scenario
    state: PureState | DensityOp
    party_sites: tuple[tuple[int, ...], ...]
    measurements: tuple[dict[str, ProjectorSet], ...]
    sources: tuple[tuple[int, ...], ...] | None = None
    target: PureState | None = None
    label: str = "reference"
    site_names: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        sc = self.scenario
        layout = self.state.layout
        party_sites = tuple(layout.check_sites(s) for s in self.party_sites)
        if len(party_sites) != sc.num_parties:
            raise InputError(f"{len(party_sites)} site groups for {sc.num_parties} parties")
        owned = [s for sites in party_sites for s in sites]
        if len(set(owned)) != len(owned):
            raise SiteError("parties must own disjoint sites")
        if any(not sites for sites in party_sites):
            raise SiteError("every party must own at least one site")
        measurements = tuple(dict(m) for m in self.measurements)
        if len(measurements) != sc.num_parties:
            raise InputError(f"{len(measurements)} measurement tables for {sc.num_parties} parties")
        for p, (sites, table) in enumerate(zip(party_sites, measurements)):
            self._check_party(p, layout.dims_of(sites), table)
        object.__setattr__(self, "party_sites", party_sites)
        object.__setattr__(self, "measurements", measurements)
        if self.sources is not None:
            sources = tuple(layout.check_sites(s) for s in self.sources)
            flat = sorted(s for group in sources for s in group)
            if flat != list(range(layout.num_sites)):
                raise SiteError("sources must partition the register")
            object.__setattr__(self, "sources", sources)
            self._check_factorization()
        elif sc.variant is Variant.FULLY:
            raise SourceIndependenceError("fully network-assisted models must declare their sources")

    def _check_party(self, p: int, dims: tuple[int, ...], table: dict[str, ProjectorSet]):
        sc = self.scenario
        name = sc.party_names[p]
        expected = sc.inputs(p)
        missing = [x for x in expected if x not in table]
        if missing:
            raise MissingInputsError(f"party {name} has no measurement for inputs {missing}")
        extra = [x for x in table if x not in expected]
        if extra:
            raise AlphabetError(f"party {name} has measurements for unknown inputs {extra}")
        for x in expected:
            ps = table[x]
            if ps.layout.local_dims != dims:
                raise DimensionMismatchError(
                    f"party {name} input {x}: projectors on {ps.layout.local_dims}, sites have {dims}"
                )
            if ps.outcome_labels != sc.outcomes(p, x):
                raise AlphabetError(f"party {name} input {x}: outcome labels {ps.outcome_labels}")

    def _check_factorization(self):
        if len(self.sources) < 2:
            return
        if isinstance(self.state, PureState):
            for group in self.sources:
                rho = reduced_matrix(self.state, group)
                purity = float(np.real(np.trace(rho @ rho)))
                if abs(purity - 1.0) > FLAG_TOL:
                    raise SourceIndependenceError(
                        f"global state violates source independence (source {group} has purity {purity:.6f})"
                    )
            return
        order = tuple(s for group in self.sources for s in group)
        product = None
        for group in self.sources:
            local = reduced_matrix(self.state, group)
            product = local if product is None else np.kron(product, local)
        grouped = permute_sites(self.state, order).matrix
        gap = float(np.max(np.abs(grouped - product)))
        if gap > FLAG_TOL:
            raise SourceIndependenceError(f"global state violates source independence (gap {gap:.3e})")

    @property
    def layout(self) -> SiteLayout:
        return self.state.layout

    def measurement(self, party: int, x: str) -> ProjectorSet:
        try:
            return self.measurements[party][x]
        except KeyError:
            raise AlphabetError(f"party {self.scenario.party_names[party]} has no input {x!r}")

    def observable(self, party: int, x: str) -> LinOp:
        """Dichotomic observable P_0 - P_1 for a two-outcome input."""
        ps = self.measurement(party, x)
        if len(ps.outcome_labels) != 2:
            raise AlphabetError(f"input {x!r} is not dichotomic")
        return ps.observable()


# ------------------------------------------------------------------
# Reference experiment
# ------------------------------------------------------------------

def main_site(n: int, j: int) -> int:
    """Site of the target qubit A_j in the reference layout."""
    return j


def main_half(n: int, j: int) -> int:
    """Site of the Bell half held by main party j."""
    return n + j


def aux_half(n: int, j: int) -> int:
    """Site of the Bell half held on the auxiliary side of pair j."""
    return 2 * n + j


def network_state(psi: PureState) -> PureState:
    """psi on A_1..A_N followed by N copies of phi+ on (Abar_j, B_j)."""
    n = psi.layout.num_sites
    pairs = phi_plus()
    for _ in range(n - 1):
        pairs = tensor_product(pairs, phi_plus())
    # pairs are laid out (Abar_1, B_1, Abar_2, B_2, ...)
    order = [2 * j for j in range(n)] + [2 * j + 1 for j in range(n)]
    return tensor_product(psi, permute_sites(pairs, order))


def reference_sites(n: int) -> tuple[str, ...]:
    return (tuple(f"A{j + 1}" for j in range(n))
            + tuple(f"A{j + 1}~" for j in range(n))
            + tuple(f"B{j + 1}" for j in range(n)))


@functools.cache
def main_measurements() -> dict[str, ProjectorSet]:
    """Main-party measurements on (A_j, Abar_j): settings act on Abar_j, 'bsm' on both."""
    table = {}
    eye = np.eye(2)
    for x in MAIN_SETTINGS:
        half = main_observable(x)
        projectors = tuple(LinOp(SiteLayout.qubits(2), np.kron(eye, half.projector(b).matrix))
                           for b in BIT_OUTCOMES)
        table[x] = ProjectorSet(projectors, BIT_OUTCOMES)
    table[BSM_INPUT] = bell_basis()
    return table


@functools.cache
def network_aux_measurements() -> dict[str, ProjectorSet]:
    return {y: product_pauli_measurement(y) for y in AUX_SETTINGS}


@functools.cache
def fully_aux_measurements(n: int) -> dict[str, ProjectorSet]:
    table = {v: product_pauli_measurement(v) for v in _aux_vectors(n)}
    if n >= 2:
        for pairing in PAIRINGS:
            table[pairing] = parallel_bsm(pairing, n)
    return table


def reference_sources(n: int) -> tuple[tuple[int, ...], ...]:
    """The target source followed by one Bell-pair source per main party."""
    return (tuple(range(n)),) + tuple((n + j, 2 * n + j) for j in range(n))


def build_reference_model(psi: PureState, scenario: Scenario) -> PhysicalModel:
    """Reference realization: psi plus one phi+ per main party, ideal measurements."""
    n = scenario.n
    if psi.layout.num_sites != n:
        raise DimensionMismatchError(f"target has {psi.layout.num_sites} sites for N={n}")
    if not psi.layout.is_qubits:
        raise DimensionMismatchError(
            f"target sites must be qubits, got {psi.layout.local_dims}; encode qudits first"
        )
    state = network_state(psi)
    mains = [(main_site(n, j), main_half(n, j)) for j in range(n)]
    if scenario.variant is Variant.NETWORK:
        parties = mains + [(aux_half(n, j),) for j in range(n)]
        measurements = [main_measurements()] * n + [network_aux_measurements()] * n
        sources = None
    else:
        parties = mains + [tuple(aux_half(n, j) for j in range(n))]
        measurements = [main_measurements()] * n + [fully_aux_measurements(n)]
        sources = reference_sources(n)
    return PhysicalModel(
        scenario=scenario,
        state=state,
        party_sites=tuple(parties),
        measurements=tuple(measurements),
        sources=sources,
        target=psi,
        label="reference",
        site_names=reference_sites(n),
    )
