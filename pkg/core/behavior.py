"""Exact correlation tables P(outcomes | inputs) of a physical model.

A Behavior stores, for every input tuple it covers, a dense probability array
with one axis per party (outcome alphabet order). Generation walks the input
tuples as a prefix tree: the global state is held as a factor F with
rho = F^T conj(F) over the sites not yet measured, each party's projectors are
applied to F in turn, and F is QR-compressed whenever it has more rows than
the remaining register has dimensions.
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import InitVar, dataclass, field

import numpy as np
import pandas as pd

from config.protocol import (
    AUX_SETTINGS,
    BSM_INPUT,
    CHSH_BLOCKS,
    MAIN_SETTINGS,
    OUTCOME_KEY_SEPARATOR,
    PAIRINGS,
)
from config.settings import (
    ENSEMBLE_CUTOFF,
    NO_SIGNALING_TOL,
    NORMALIZATION_TOL,
    PROB_FLOOR,
    thread_count,
)
from core.errors import (
    AlphabetError,
    InputError,
    InvalidWeightsError,
    MissingInputsError,
    NegativeProbabilityError,
    NormalizationError,
)
from core.gates import bsm_pairs
from core.network import PhysicalModel, Scenario, Variant, build_reference_model
from core.tensor import PureState, apply_on_sites, permute_sites

logger = logging.getLogger(__name__)


def _clamp(p: np.ndarray) -> np.ndarray:
    low = float(p.min()) if p.size else 0.0
    if low < PROB_FLOOR:
        raise NegativeProbabilityError(f"probability {low!r} below floor {PROB_FLOOR}")
    return np.where(p < 0.0, 0.0, p)


# ------------------------------------------------------------------
# Behavior
# ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Behavior:
    """Correlation table over (a subset of) a scenario's input tuples."""

    scenario: Scenario
    table: dict[tuple[str, ...], np.ndarray]
    validate: InitVar[bool] = True
    _order: tuple[tuple[str, ...], ...] = field(init=False, repr=False)

    def __post_init__(self, validate: bool):
        sc = self.scenario
        rows = {}
        for inputs, probs in self.table.items():
            inputs = tuple(str(x) for x in inputs)
            sc.sort_key(inputs)
            shape = tuple(len(sc.outcomes(p, x)) for p, x in enumerate(inputs))
            arr = np.array(probs, dtype=float)
            if arr.shape != shape:
                raise AlphabetError(f"row {inputs}: probability shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)
            rows[inputs] = arr
        order = tuple(sorted(rows, key=sc.sort_key))
        object.__setattr__(self, "table", {k: rows[k] for k in order})
        object.__setattr__(self, "_order", order)
        if validate:
            self._validate()

    def _validate(self):
        for inputs, arr in self.table.items():
            low = float(arr.min())
            if low < PROB_FLOOR:
                raise NegativeProbabilityError(f"row {inputs}: probability {low!r} below floor")
        norm = self.normalization_residual()
        if norm > NORMALIZATION_TOL:
            raise NormalizationError(f"conditional distributions deviate from 1 by {norm:.3e}")
        signaling = self.no_signaling_residual()
        if signaling > NO_SIGNALING_TOL:
            raise InputError(f"behavior is signaling: marginal gap {signaling:.3e}")

    # --- access ---

    @property
    def input_tuples(self) -> tuple[tuple[str, ...], ...]:
        return self._order

    @property
    def is_complete(self) -> bool:
        return len(self.table) == self.scenario.num_input_tuples

    def __contains__(self, inputs) -> bool:
        return tuple(inputs) in self.table

    def probabilities(self, inputs) -> np.ndarray:
        try:
            return self.table[tuple(inputs)]
        except KeyError:
            raise MissingInputsError(f"behavior has no row for inputs {tuple(inputs)}")

    def outcome_labels(self, inputs) -> list[tuple[str, ...]]:
        inputs = tuple(inputs)
        alphabets = [self.scenario.outcomes(p, x) for p, x in enumerate(inputs)]
        return list(itertools.product(*alphabets))

    def outcome_table(self, inputs) -> dict[str, float]:
        """Label-keyed view of one row: 'a1,a2,...' -> probability."""
        arr = self.probabilities(inputs)
        return {OUTCOME_KEY_SEPARATOR.join(labels): float(p)
                for labels, p in zip(self.outcome_labels(inputs), arr.reshape(-1))}

    def probability(self, inputs, outcomes) -> float:
        inputs = tuple(inputs)
        idx = tuple(self.scenario.outcomes(p, x).index(a)
                    for p, (x, a) in enumerate(zip(inputs, outcomes)))
        return float(self.probabilities(inputs)[idx])

    def find_row(self, fixed: dict[int, str]) -> tuple[str, ...]:
        """An input tuple with the given inputs at the given parties.

        Parties not in ``fixed`` take their first input if that row exists;
        otherwise the first matching row in canonical order is returned.
        """
        sc = self.scenario
        candidate = tuple(fixed.get(p, sc.inputs(p)[0]) for p in range(sc.num_parties))
        if candidate in self.table:
            return candidate
        for inputs in self._order:
            if all(inputs[p] == x for p, x in fixed.items()):
                return inputs
        raise MissingInputsError(f"behavior has no row with inputs {fixed}")

    def expectation(self, fixed: dict[int, str], weights: dict[int, np.ndarray]) -> float:
        """sum over outcomes of P times the product of per-party outcome weights.

        Parties without weights are marginalized.
        """
        row = self.find_row(fixed)
        arr = self.probabilities(row)
        for p in sorted(weights, reverse=True):
            w = np.asarray(weights[p], dtype=float)
            if w.shape != (arr.shape[p],):
                raise InvalidWeightsError(f"party {p}: {w.shape[0]} weights for {arr.shape[p]} outcomes")
            arr = np.tensordot(arr, w, axes=([p], [0]))
        return float(arr.sum())

    def marginal(self, inputs, parties) -> np.ndarray:
        arr = self.probabilities(inputs)
        drop = tuple(p for p in range(arr.ndim) if p not in set(parties))
        return arr.sum(axis=drop)

    # --- invariants ---

    def normalization_residual(self) -> float:
        if not self.table:
            return 0.0
        return max(abs(float(arr.sum()) - 1.0) for arr in self.table.values())

    def no_signaling_residual(self) -> float:
        """Largest change of any marginal when a single other party changes input."""
        worst = 0.0
        for p in range(self.scenario.num_parties):
            groups: dict[tuple, np.ndarray] = {}
            for inputs, arr in self.table.items():
                rest = inputs[:p] + inputs[p + 1:]
                marg = arr.sum(axis=p)
                ref = groups.setdefault(rest, marg)
                if ref is not marg:
                    worst = max(worst, float(np.max(np.abs(ref - marg))))
        return worst

    def max_difference(self, other: "Behavior") -> float:
        if other.scenario != self.scenario:
            raise InputError("behaviors belong to different scenarios")
        if set(other.table) != set(self.table):
            raise MissingInputsError("behaviors cover different input tuples")
        return max((float(np.max(np.abs(a - other.table[k]))) for k, a in self.table.items()),
                   default=0.0)

    def restrict(self, inputs) -> "Behavior":
        return Behavior(self.scenario, {tuple(k): self.probabilities(k) for k in inputs},
                        validate=False)

    def to_frame(self) -> pd.DataFrame:
        """Long format: one column pair (input, outcome) per party plus the probability."""
        names = self.scenario.party_names
        records = []
        for inputs, arr in self.table.items():
            for labels, p in zip(self.outcome_labels(inputs), arr.reshape(-1)):
                rec = {}
                for name, x, a in zip(names, inputs, labels):
                    rec[f"{name}_in"] = x
                    rec[f"{name}_out"] = a
                rec["probability"] = float(p)
                records.append(rec)
        columns = [c for name in names for c in (f"{name}_in", f"{name}_out")] + ["probability"]
        return pd.DataFrame.from_records(records, columns=columns)


# ------------------------------------------------------------------
# Born rule
# ------------------------------------------------------------------

def born_probability(model: PhysicalModel, inputs, outcomes) -> float:
    """Tr(rho (x)_p Pi_p) by direct projection of the global state."""
    sc = model.scenario
    inputs, outcomes = tuple(inputs), tuple(outcomes)
    if len(inputs) != sc.num_parties or len(outcomes) != sc.num_parties:
        raise AlphabetError(f"expected {sc.num_parties} inputs and outcomes")
    state = model.state
    for p, (x, a) in enumerate(zip(inputs, outcomes)):
        if a not in sc.outcomes(p, x):
            raise AlphabetError(f"outcome {a!r} not available for input {x!r} of party {p}")
        state = apply_on_sites(model.measurement(p, x).projector(a), model.party_sites[p], state)
    if isinstance(state, PureState):
        value = state.norm ** 2
    else:
        value = state.trace
    return float(_clamp(np.array([value]))[0])


# ------------------------------------------------------------------
# Prefix-tree contraction
# ------------------------------------------------------------------

def _initial_factor(model: PhysicalModel) -> tuple[np.ndarray, list[int]]:
    """Factor of the global state with party sites moved to the front in party order."""
    owned = [s for sites in model.party_sites for s in sites]
    rest = [s for s in range(model.layout.num_sites) if s not in set(owned)]
    state = permute_sites(model.state, owned + rest)
    if isinstance(state, PureState):
        factor = state.amplitudes[None, :]
    else:
        values, vectors = np.linalg.eigh(state.matrix)
        keep = values > ENSEMBLE_CUTOFF
        factor = (vectors[:, keep] * np.sqrt(values[keep])).T
    dims = [int(np.prod(model.layout.dims_of(sites))) for sites in model.party_sites]
    return np.ascontiguousarray(factor), dims


def _project(factor: np.ndarray, stack: np.ndarray, d: int) -> np.ndarray:
    """Apply every projector of ``stack`` to the leading d-dimensional block of the factor.

    factor has shape (*batch, k, R); the result has shape (*batch, O, k', R/d)
    with k' = min(k*d, R/d).
    """
    *batch, k, r = factor.shape
    r2 = r // d
    outcomes = stack.shape[0]
    f3 = factor.reshape(*batch, 1, k, d, r2)
    ops = stack.reshape((1,) * len(batch) + (outcomes, 1, d, d))
    g = np.matmul(ops, f3).reshape(*batch, outcomes, k * d, r2)
    if k * d > r2:
        g = np.linalg.qr(g, mode="r")
    return g


def _leaf(factor: np.ndarray, stacks: list[np.ndarray], d: int) -> list[np.ndarray]:
    """Probabilities of the last party's inputs from one shared local reduced state."""
    *batch, k, r = factor.shape
    f3 = factor.reshape(*batch, k, d, r // d)
    rho = np.einsum("...kcr,...kdr->...cd", f3, f3.conj())
    return [_clamp(np.einsum("odc,...cd->...o", stack, rho).real) for stack in stacks]


def _grouped(rows: list[tuple[str, ...]], depth: int) -> list[tuple[str, list]]:
    groups: dict[str, list] = {}
    for row in rows:
        groups.setdefault(row[depth], []).append(row)
    return list(groups.items())


class _Walker:
    def __init__(self, model: PhysicalModel):
        self.model = model
        self.root, self.dims = _initial_factor(model)
        self.last = model.scenario.num_parties - 1

    def stack(self, party: int, x: str) -> np.ndarray:
        return self.model.measurement(party, x).stack

    def walk(self, factor: np.ndarray, depth: int, rows: list) -> dict:
        if depth == self.last:
            stacks = [self.stack(depth, row[depth]) for row in rows]
            return dict(zip(rows, _leaf(factor, stacks, self.dims[depth])))
        out = {}
        for x, group in _grouped(rows, depth):
            child = _project(factor, self.stack(depth, x), self.dims[depth])
            out.update(self.walk(child, depth + 1, group))
        return out

    def branch(self, item) -> dict:
        x, group = item
        child = _project(self.root, self.stack(0, x), self.dims[0])
        return self.walk(child, 1, group)


def behavior_of(model: PhysicalModel, input_tuples=None, threads: int | None = None) -> Behavior:
    """Exact behavior of ``model`` over all input tuples, or over the given subset.

    Top-level branches (first-party inputs) are evaluated on a thread pool;
    the table is assembled in canonical order, so the result does not
    depend on the number of threads.
    """
    sc = model.scenario
    rows = sc.input_tuples() if input_tuples is None else [tuple(r) for r in input_tuples]
    for row in rows:
        sc.sort_key(row)
    rows = sorted(set(rows), key=sc.sort_key)
    workers = thread_count(threads)
    logger.info("Generating behavior of %s model: %s N=%d, %d input tuples, %d threads",
                model.label, sc.variant.value, sc.n, len(rows), workers)
    walker = _Walker(model)
    branches = _grouped(rows, 0)
    table: dict = {}
    if workers == 1 or len(branches) == 1:
        for item in branches:
            table.update(walker.branch(item))
    else:
        with ThreadPoolExecutor(max_workers=min(workers, len(branches))) as pool:
            for part in pool.map(walker.branch, branches):
                table.update(part)
    behavior = Behavior(sc, table)
    logger.info("Behavior ready: %d rows (complete=%s)", len(behavior.table), behavior.is_complete)
    return behavior


def reference_behavior(psi: PureState, scenario: Scenario, input_tuples=None,
                       threads: int | None = None) -> Behavior:
    return behavior_of(build_reference_model(psi, scenario), input_tuples, threads)


# ------------------------------------------------------------------
# Rows read by the certifier
# ------------------------------------------------------------------

def certification_inputs(scenario: Scenario) -> list[tuple[str, ...]]:
    """Exactly the input tuples the certifier reads, in canonical order.

    CHSH rows put every other main party on its first input; tomography rows
    put every main party on the Bell measurement; alignment rows cover
    settings 0..3 on both members of every paired couple.
    """
    n = scenario.n
    first = MAIN_SETTINGS[0]
    rows = set()
    mains = [first] * n
    chsh_settings = sorted({x for block in CHSH_BLOCKS.values() for x in block[:2]})
    aux_inputs = scenario.inputs(n)
    if scenario.variant is Variant.NETWORK:
        for j in range(n):
            for x in chsh_settings:
                for y in AUX_SETTINGS:
                    m = list(mains)
                    m[j] = x
                    aux = [AUX_SETTINGS[0]] * n
                    aux[j] = y
                    rows.add(tuple(m + aux))
        for k in itertools.product(AUX_SETTINGS, repeat=n):
            rows.add(tuple([BSM_INPUT] * n) + k)
    else:
        vectors = [v for v in aux_inputs if v not in PAIRINGS]
        for j in range(n):
            for x in chsh_settings:
                m = list(mains)
                m[j] = x
                for v in vectors:
                    rows.add(tuple(m) + (v,))
        for v in vectors:
            rows.add(tuple([BSM_INPUT] * n) + (v,))
        if n >= 2:
            align_settings = MAIN_SETTINGS[:4]
            for pairing in PAIRINGS:
                for j, k in bsm_pairs(pairing, n):
                    for x, xp in itertools.product(align_settings, repeat=2):
                        m = list(mains)
                        m[j], m[k] = x, xp
                        rows.add(tuple(m) + (pairing,))
    return sorted(rows, key=scenario.sort_key)
