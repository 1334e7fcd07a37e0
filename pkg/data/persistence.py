"""File formats of the command line: state files, behavior files and JSON reports.

State and behavior files carry an explicit ``schema_version`` and write one
record per line with ``json.dumps``, whose float repr round-trips exactly,
so equal inputs give equal bytes.
"""
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from config.protocol import OUTCOME_KEY_SEPARATOR
from config.settings import NORM_TOL, SCHEMA_VERSION, STATE_FILE_NORM_TOL
from core.behavior import Behavior
from core.errors import InputError, NormalizationError, SchemaError
from core.network import Scenario
from core.tensor import PureState, SiteLayout

logger = logging.getLogger(__name__)


def _ensure_dir(path: Path):
    """Create the parent directory of ``path`` if it doesn't exist."""
    path.parent.mkdir(parents=True, exist_ok=True)


def _read_json(path) -> dict:
    """Read a JSON document; malformed or truncated files raise SchemaError."""
    filepath = Path(path)
    with open(filepath, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{filepath}: not valid JSON ({exc.msg} at line {exc.lineno})")
    if not isinstance(data, dict):
        raise SchemaError(f"{filepath}: top-level JSON value must be an object")
    return data


def _write_json(path, data):
    """Write a report-style JSON document."""
    filepath = Path(path)
    _ensure_dir(filepath)
    with open(filepath, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, default=str)
        f.write("\n")


def _write_lines(path, lines: list[str]):
    filepath = Path(path)
    _ensure_dir(filepath)
    with open(filepath, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines))
        f.write("\n")
    logger.info("Wrote %s", filepath)


def _check_version(data: dict, kind: str):
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{kind} file has schema_version {version!r}, expected {SCHEMA_VERSION}")


def _require(data: dict, key: str, kind: str):
    if key not in data:
        raise SchemaError(f"{kind} file is missing {key!r}")
    return data[key]


# ─── State files ──────────────────────────────────────────────────────────────

@dataclass
class StateFile:
    """Pure state on disk: local dimensions plus [re, im] amplitude pairs."""

    local_dims: tuple[int, ...]
    amplitudes: np.ndarray
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_state(cls, psi: PureState) -> "StateFile":
        return cls(psi.layout.local_dims, np.array(psi.amplitudes))

    @classmethod
    def from_dict(cls, data: dict) -> "StateFile":
        _check_version(data, "state")
        dims = _require(data, "local_dims", "state")
        amps = _require(data, "amplitudes", "state")
        if not isinstance(dims, list) or not all(isinstance(d, int) and not isinstance(d, bool) for d in dims):
            raise SchemaError("local_dims must be a list of integers")
        if not isinstance(amps, list):
            raise SchemaError("amplitudes must be a list of [re, im] pairs")
        values = []
        for i, pair in enumerate(amps):
            if (not isinstance(pair, list) or len(pair) != 2
                    or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)):
                raise SchemaError(f"amplitude {i} is not an [re, im] pair")
            values.append(complex(float(pair[0]), float(pair[1])))
        expected = math.prod(dims) if dims else 0
        if len(values) != expected:
            raise SchemaError(f"{len(values)} amplitudes for local dimensions {dims}")
        return cls(tuple(dims), np.array(values, dtype=complex), data["schema_version"])

    def to_state(self) -> PureState:
        """The stored state, re-normalized when its norm is slightly off."""
        layout = SiteLayout(self.local_dims)
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > STATE_FILE_NORM_TOL:
            raise NormalizationError(f"state file norm {norm!r} is not within {STATE_FILE_NORM_TOL} of 1")
        amps = self.amplitudes
        if abs(norm - 1.0) > NORM_TOL:
            logger.warning("State norm %.12f re-normalized on load", norm)
            amps = amps / norm
        return PureState(layout, amps)

    def lines(self) -> list[str]:
        out = ["{",
               f'  "schema_version": {self.schema_version},',
               f'  "local_dims": {json.dumps(list(self.local_dims))},',
               '  "amplitudes": [']
        pairs = [json.dumps([float(a.real), float(a.imag)], allow_nan=False) for a in self.amplitudes]
        out.extend(f"    {p}," for p in pairs[:-1])
        out.append(f"    {pairs[-1]}")
        out.extend(["  ]", "}"])
        return out


def save_state(path, psi: PureState):
    _write_lines(path, StateFile.from_state(psi).lines())


def load_state(path) -> PureState:
    return StateFile.from_dict(_read_json(path)).to_state()


# ─── Behavior files ───────────────────────────────────────────────────────────

@dataclass
class BehaviorFile:
    """Behavior on disk: scenario descriptor plus one {inputs, probabilities} record per row.

    ``probabilities`` maps comma-joined outcome labels to probabilities, in
    outcome-alphabet order.
    """

    scenario: Scenario
    rows: list[tuple[tuple[str, ...], dict[str, float]]] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_behavior(cls, behavior: Behavior) -> "BehaviorFile":
        rows = [(inputs, behavior.outcome_table(inputs)) for inputs in behavior.input_tuples]
        return cls(behavior.scenario, rows)

    @classmethod
    def from_dict(cls, data: dict) -> "BehaviorFile":
        _check_version(data, "behavior")
        descriptor = _require(data, "scenario", "behavior")
        try:
            scenario = Scenario.from_dict(descriptor)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad scenario descriptor {descriptor!r}: {exc}")
        records = _require(data, "rows", "behavior")
        if not isinstance(records, list):
            raise SchemaError("rows must be a list")
        rows = []
        for i, rec in enumerate(records):
            if not isinstance(rec, dict) or "inputs" not in rec or "probabilities" not in rec:
                raise SchemaError(f"row {i} needs 'inputs' and 'probabilities'")
            inputs, probs = rec["inputs"], rec["probabilities"]
            if not isinstance(inputs, list) or not isinstance(probs, dict):
                raise SchemaError(f"row {i}: inputs must be a list and probabilities an object")
            rows.append((tuple(str(x) for x in inputs), {str(k): v for k, v in probs.items()}))
        return cls(scenario, rows, data["schema_version"])

    def to_behavior(self, validate: bool = True) -> Behavior:
        sc = self.scenario
        table = {}
        for inputs, probs in self.rows:
            if inputs in table:
                raise SchemaError(f"duplicate row for inputs {inputs}")
            try:
                sc.sort_key(inputs)
                shape = tuple(len(sc.outcomes(p, x)) for p, x in enumerate(inputs))
                labels = itertools.product(*(sc.outcomes(p, x) for p, x in enumerate(inputs)))
            except InputError as exc:
                raise SchemaError(f"row {list(inputs)}: {exc}")
            keys = [OUTCOME_KEY_SEPARATOR.join(label) for label in labels]
            if set(keys) != set(probs):
                raise SchemaError(f"row {list(inputs)}: outcome keys do not match the outcome alphabets")
            values = [probs[k] for k in keys]
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
                raise SchemaError(f"row {list(inputs)}: probabilities must be numbers")
            table[inputs] = np.array(values, dtype=float).reshape(shape)
        return Behavior(sc, table, validate=validate)

    def lines(self) -> list[str]:
        out = ["{",
               f'  "schema_version": {self.schema_version},',
               f'  "scenario": {json.dumps(self.scenario.to_dict())},',
               '  "rows": [']
        records = [json.dumps({"inputs": list(inputs), "probabilities": probs}, allow_nan=False)
                   for inputs, probs in self.rows]
        out.extend(f"    {r}," for r in records[:-1])
        if records:
            out.append(f"    {records[-1]}")
        out.extend(["  ]", "}"])
        return out


def save_behavior(path, behavior: Behavior):
    _write_lines(path, BehaviorFile.from_behavior(behavior).lines())


def load_behavior(path, validate: bool = True) -> Behavior:
    return BehaviorFile.from_dict(_read_json(path)).to_behavior(validate)


# ─── Reports ──────────────────────────────────────────────────────────────────

def save_report(path, report: dict):
    """Write a certification / extraction / PT report as indented JSON."""
    _write_json(path, {"schema_version": SCHEMA_VERSION, **report})
    logger.info("Wrote report %s", path)


def load_report(path) -> dict:
    data = _read_json(path)
    _check_version(data, "report")
    return data
