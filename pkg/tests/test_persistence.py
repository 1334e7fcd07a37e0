"""Tests for state, behavior and report files."""
import json
import logging

import numpy as np
import pytest

from config.settings import SCHEMA_VERSION, thread_count
from core.behavior import certification_inputs, reference_behavior
from core.errors import NormalizationError, SchemaError
from core.network import Scenario, Variant
from core.states import complex_pair, ghz_state, max_entangled, w_state
from core.tensor import PureState, SiteLayout, random_pure_state
from data.persistence import (
    load_behavior,
    load_report,
    load_state,
    save_behavior,
    save_report,
    save_state,
)


def _state_doc(amplitudes, dims=(2,)):
    return {"schema_version": SCHEMA_VERSION, "local_dims": list(dims), "amplitudes": amplitudes}


def test_state_roundtrip_is_bit_exact(tmp_path, rng):
    psi = random_pure_state(SiteLayout((2, 3)), rng)
    path = tmp_path / "psi.json"
    save_state(path, psi)
    back = load_state(path)
    assert back.layout == psi.layout
    assert np.array_equal(back.amplitudes, psi.amplitudes)


def test_state_writes_are_byte_identical(tmp_path):
    save_state(tmp_path / "a.json", w_state(3))
    save_state(tmp_path / "b.json", w_state(3))
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_state_file_is_plain_json(tmp_path):
    save_state(tmp_path / "q.json", max_entangled(3))
    data = json.loads((tmp_path / "q.json").read_text())
    assert data["local_dims"] == [3, 3]
    assert len(data["amplitudes"]) == 9


def test_state_floats_use_shortest_repr(tmp_path):
    psi = PureState(SiteLayout.qubits(1), [0.6, 0.8j])
    path = tmp_path / "psi.json"
    save_state(path, psi)
    text = path.read_text()
    assert json.dumps([0.6, 0.0]) in text
    assert json.dumps([0.0, 0.8]) in text
    assert np.array_equal(load_state(path).amplitudes, psi.amplitudes)


def test_truncated_state_file(tmp_path):
    path = tmp_path / "psi.json"
    save_state(path, ghz_state(2))
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    with pytest.raises(SchemaError):
        load_state(path)


@pytest.mark.parametrize("doc", [
    [1, 2],
    {"local_dims": [2], "amplitudes": [[1, 0], [0, 0]]},
    {"schema_version": 99, "local_dims": [2], "amplitudes": [[1, 0], [0, 0]]},
    _state_doc([[1, 0]]),
    _state_doc([[1, 0], [0]]),
    _state_doc([[1, 0], [0, 0]], dims=("2",)),
])
def test_malformed_state_files(tmp_path, doc):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SchemaError):
        load_state(path)


def test_slightly_off_norm_is_renormalized(tmp_path, caplog):
    path = tmp_path / "psi.json"
    path.write_text(json.dumps(_state_doc([[1.0 + 1e-8, 0.0], [0.0, 0.0]])))
    with caplog.at_level(logging.WARNING):
        psi = load_state(path)
    assert psi.norm == pytest.approx(1.0, abs=1e-15)
    assert "re-normalized" in caplog.text


def test_unnormalized_state_is_rejected(tmp_path):
    path = tmp_path / "psi.json"
    path.write_text(json.dumps(_state_doc([[1.0, 0.0], [1.0, 0.0]])))
    with pytest.raises(NormalizationError):
        load_state(path)


def test_behavior_roundtrip_is_bit_exact(tmp_path):
    sc = Scenario(Variant.NETWORK, 2)
    b = reference_behavior(complex_pair(), sc, certification_inputs(sc))
    path = tmp_path / "b.json"
    save_behavior(path, b)
    back = load_behavior(path)
    assert back.scenario == sc
    assert back.input_tuples == b.input_tuples
    for inputs, arr in b.table.items():
        assert np.array_equal(back.table[inputs], arr)


def test_fully_behavior_roundtrip(tmp_path):
    sc = Scenario(Variant.FULLY, 2)
    b = reference_behavior(ghz_state(2), sc, certification_inputs(sc))
    save_behavior(tmp_path / "b.json", b)
    assert load_behavior(tmp_path / "b.json").max_difference(b) == 0.0


def test_behavior_writes_are_byte_identical(tmp_path):
    b = reference_behavior(ghz_state(1), Scenario(Variant.NETWORK, 1))
    save_behavior(tmp_path / "a.json", b)
    save_behavior(tmp_path / "b.json", b)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def _behavior_doc(rows):
    return {"schema_version": SCHEMA_VERSION, "scenario": {"variant": "network", "n": 1}, "rows": rows}


@pytest.mark.parametrize("rows", [
    "not a list",
    [{"inputs": ["0", "0"]}],
    [{"inputs": ["0", "9"], "probabilities": {"0,0": 1.0}}],
    [{"inputs": ["0", "0"], "probabilities": {"0,0": 0.5, "1,1": 0.5}}],
    [{"inputs": ["0", "0"], "probabilities": {"0,0": 0.5, "0,1": 0, "1,0": 0, "1,1": "half"}}],
    [{"inputs": ["0", "0"], "probabilities": {"0,0": 0.5, "0,1": 0, "1,0": 0, "1,1": 0.5}}] * 2,
])
def test_malformed_behavior_files(tmp_path, rows):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(_behavior_doc(rows)))
    with pytest.raises(SchemaError):
        load_behavior(path)


def test_bad_scenario_descriptor(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"schema_version": SCHEMA_VERSION, "scenario": {"variant": "ring"}, "rows": []}))
    with pytest.raises(SchemaError):
        load_behavior(path)


def test_behavior_file_validation_can_be_skipped(tmp_path):
    path = tmp_path / "loose.json"
    rows = [{"inputs": ["0", "0"], "probabilities": {"0,0": 0.7, "0,1": 0, "1,0": 0, "1,1": 0.5}}]
    path.write_text(json.dumps(_behavior_doc(rows)))
    with pytest.raises(NormalizationError):
        load_behavior(path)
    assert load_behavior(path, validate=False).probability(("0", "0"), ("0", "0")) == pytest.approx(0.7)


def test_report_roundtrip(tmp_path):
    path = tmp_path / "out" / "report.json"
    save_report(path, {"passed": True, "alpha": 0.3})
    data = load_report(path)
    assert data == {"schema_version": SCHEMA_VERSION, "passed": True, "alpha": 0.3}


def test_thread_count_environment(monkeypatch):
    monkeypatch.setenv("NETCERT_THREADS", "3")
    assert thread_count() == 3
    assert thread_count(5) == 5
    monkeypatch.setenv("NETCERT_THREADS", "many")
    assert thread_count() == 1
    monkeypatch.setenv("NETCERT_THREADS", "0")
    assert thread_count() == 1
