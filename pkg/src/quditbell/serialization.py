from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from quditbell.config import DEFAULT_CONFIG, LabConfig
from quditbell.errors import BehaviorFileError, InvalidDistributionError, InvalidInputError
from quditbell.models import SETTING_PAIRS, BehaviorTable, HvtDistribution, LocalModel


def dump_json(payload: Mapping[str, Any]) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def dump_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(value) for value in row])
    return buffer.getvalue()


def _csv_cell(value: Any) -> Any:
    if isinstance(value, float):
        return repr(value)
    return value


def write_output(text: str, path: Path | None) -> None:
    if path is None:
        print(text, end="")
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def behavior_to_dict(behavior: BehaviorTable) -> dict[str, Any]:
    return {
        "d": behavior.d,
        "joints": {s.label: behavior.joint(s).p.tolist() for s in SETTING_PAIRS},
    }


def save_behavior(behavior: BehaviorTable, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(behavior_to_dict(behavior)), encoding="utf-8")


def local_model_to_dict(model: LocalModel) -> dict[str, Any]:
    return {
        "weights": model.weights.tolist(),
        "labels": list(model.labels),
        "responses_a": model.responses_a.tolist(),
        "responses_b": model.responses_b.tolist(),
    }


def hvt_support_to_dict(c: HvtDistribution, floor: float = 0.0) -> dict[str, Any]:
    """Nonzero entries of C as a sparse list."""
    support = [
        {"jklm": [int(i) for i in index], "weight": float(c.c[index])}
        for index in zip(*np.nonzero(c.c > floor))
    ]
    return {"d": c.d, "support": support}


def _line_of(text: str, needle: str) -> int | None:
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def parse_behavior(text: str, config: LabConfig = DEFAULT_CONFIG) -> BehaviorTable:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BehaviorFileError(f"invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    if not isinstance(payload, dict):
        raise BehaviorFileError("behavior file must hold a JSON object", field="$", line=1)

    d = payload.get("d")
    if not isinstance(d, int) or isinstance(d, bool) or d < 2:
        raise BehaviorFileError("d must be an integer >= 2", field="d", line=_line_of(text, '"d"'))
    joints = payload.get("joints")
    if not isinstance(joints, dict):
        raise BehaviorFileError("joints must be an object", field="joints", line=_line_of(text, '"joints"'))

    unknown = sorted(set(joints) - {s.label for s in SETTING_PAIRS})
    if unknown:
        key = unknown[0]
        raise BehaviorFileError(f"unknown setting pair {key!r}", field=f"joints.{key}", line=_line_of(text, f'"{key}"'))

    tables: dict = {}
    for setting in SETTING_PAIRS:
        field_path = f"joints.{setting.label}"
        line = _line_of(text, f'"{setting.label}"')
        raw = joints.get(setting.label)
        if raw is None:
            raise BehaviorFileError(f"missing {setting.label}", field=field_path)
        if not isinstance(raw, list) or len(raw) != d:
            raise BehaviorFileError(f"{setting.label} must have {d} rows", field=field_path, line=line)
        for row_index, row in enumerate(raw):
            if not isinstance(row, list) or len(row) != d:
                raise BehaviorFileError(
                    f"{setting.label} row {row_index} must have {d} entries",
                    field=f"{field_path}[{row_index}]",
                    line=line,
                )
            for col_index, value in enumerate(row):
                if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                    raise BehaviorFileError(
                        f"{setting.label}[{row_index}][{col_index}] is not a finite number",
                        field=f"{field_path}[{row_index}][{col_index}]",
                        line=line,
                    )
        tables[setting] = raw

    try:
        return BehaviorTable.from_tables(d, tables, config)
    except (InvalidDistributionError, InvalidInputError) as exc:
        raise BehaviorFileError(str(exc), field="joints") from exc


def load_behavior(path: Path, config: LabConfig = DEFAULT_CONFIG) -> BehaviorTable:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise BehaviorFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_behavior(text, config)
