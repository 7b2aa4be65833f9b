from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from quditbell.config import LabConfig
from quditbell.errors import BehaviorFileError
from quditbell.hvt import behavior_from_local_model, random_local_model
from quditbell.models import A2B1
from quditbell.serialization import (
    behavior_to_dict,
    dump_csv,
    dump_json,
    load_behavior,
    parse_behavior,
    save_behavior,
)


def _behavior_text(**overrides) -> str:
    payload = {
        "d": 2,
        "joints": {
            "A1B1": [[0.5, 0.0], [0.0, 0.5]],
            "A1B2": [[0.25, 0.25], [0.25, 0.25]],
            "A2B1": [[0.25, 0.25], [0.25, 0.25]],
            "A2B2": [[0.5, 0.0], [0.0, 0.5]],
        },
    }
    payload.update(overrides)
    return json.dumps(payload, indent=2)


def test_parse_behavior_reads_tables() -> None:
    behavior = parse_behavior(_behavior_text())
    assert behavior.d == 2
    assert np.allclose(behavior.joint(A2B1).p, 0.25)


def test_save_and_load_behavior_is_byte_stable(tmp_path: Path, rng) -> None:
    behavior = behavior_from_local_model(random_local_model(3, 2, rng))
    path = tmp_path / "behavior.json"
    save_behavior(behavior, path)
    loaded = load_behavior(path)
    assert loaded.max_abs_difference(behavior) == 0.0
    again = tmp_path / "again.json"
    save_behavior(loaded, again)
    assert again.read_bytes() == path.read_bytes()


def test_dump_json_round_trips_exactly() -> None:
    text = dump_json({"b": [0.1, 1 / 3], "a": {"z": 1, "y": None}})
    assert text.endswith("\n")
    assert dump_json(json.loads(text)) == text


def test_dump_csv_uses_repr_for_floats() -> None:
    text = dump_csv(("d", "I"), [(2, 2.0 + 2**0.5), (3, 3.0)])
    lines = text.splitlines()
    assert lines[0] == "d,I"
    assert lines[1] == f"2,{2.0 + 2**0.5!r}"
    assert lines[2] == "3,3.0"


def test_malformed_json_reports_line_and_column() -> None:
    with pytest.raises(BehaviorFileError) as raised:
        parse_behavior('{\n  "d": 2,\n  "joints": [\n')
    assert raised.value.line is not None
    assert raised.value.column is not None
    assert "line=" in raised.value.diagnostic()


def test_missing_setting_names_field() -> None:
    payload = json.loads(_behavior_text())
    del payload["joints"]["A2B2"]
    with pytest.raises(BehaviorFileError) as raised:
        parse_behavior(json.dumps(payload))
    assert raised.value.field == "joints.A2B2"


def test_bad_row_length_names_field_and_line() -> None:
    text = _behavior_text(joints={
        "A1B1": [[0.5, 0.0], [0.0]],
        "A1B2": [[0.25, 0.25], [0.25, 0.25]],
        "A2B1": [[0.25, 0.25], [0.25, 0.25]],
        "A2B2": [[0.5, 0.0], [0.0, 0.5]],
    })
    with pytest.raises(BehaviorFileError) as raised:
        parse_behavior(text)
    assert raised.value.field == "joints.A1B1[1]"
    assert raised.value.line == 4


def test_unknown_setting_and_bad_d_are_rejected() -> None:
    with pytest.raises(BehaviorFileError) as raised:
        parse_behavior(_behavior_text(d=1))
    assert raised.value.field == "d"
    payload = json.loads(_behavior_text())
    payload["joints"]["A3B1"] = [[1.0, 0.0], [0.0, 0.0]]
    with pytest.raises(BehaviorFileError) as raised:
        parse_behavior(json.dumps(payload))
    assert raised.value.field == "joints.A3B1"


def test_unnormalized_table_is_rejected() -> None:
    payload = json.loads(_behavior_text())
    payload["joints"]["A1B1"] = [[0.5, 0.5], [0.5, 0.5]]
    with pytest.raises(BehaviorFileError) as raised:
        parse_behavior(json.dumps(payload))
    assert "sum" in str(raised.value)


def test_load_behavior_missing_file(tmp_path: Path) -> None:
    with pytest.raises(BehaviorFileError):
        load_behavior(tmp_path / "nope.json")


def test_behavior_to_dict_uses_setting_labels(rng) -> None:
    behavior = behavior_from_local_model(random_local_model(2, 1, rng))
    assert sorted(behavior_to_dict(behavior)["joints"]) == ["A1B1", "A1B2", "A2B1", "A2B2"]


def test_parse_behavior_uses_configured_normalization_tol(tmp_path: Path) -> None:
    text = _behavior_text(
        joints={
            "A1B1": [[0.5, 0.0], [0.0, 0.500001]],
            "A1B2": [[0.25, 0.25], [0.25, 0.25]],
            "A2B1": [[0.25, 0.25], [0.25, 0.25]],
            "A2B2": [[0.5, 0.0], [0.0, 0.5]],
        }
    )
    with pytest.raises(BehaviorFileError):
        parse_behavior(text)
    loose = LabConfig(normalization_tol=1e-5)
    assert parse_behavior(text, loose).d == 2
    path = tmp_path / "behavior.json"
    path.write_text(text, encoding="utf-8")
    assert load_behavior(path, loose).joint(A2B1).config is loose
