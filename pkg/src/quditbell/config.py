from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

from quditbell.enums import LpSolverName


def load_project_env() -> None:
    """Load .env files without overriding variables already set.

    Order: an explicit ``QB_ENV_FILE``, then cwd, then the repo root.
    """
    candidates: list[Path] = []
    explicit = os.getenv("QB_ENV_FILE", "").strip()
    if explicit:
        candidates.append(Path(explicit))
    candidates.append(Path.cwd() / ".env")
    candidates.append(Path(__file__).resolve().parents[2] / ".env")

    seen: set[Path] = set()
    for candidate in candidates:
        resolved = candidate.resolve()
        if resolved in seen:
            continue
        seen.add(resolved)
        if candidate.exists():
            load_dotenv(dotenv_path=candidate, override=False)


def _get_env(name: str) -> str | None:
    value = os.getenv(name)
    if value is None or not value.strip():
        return None
    return value.strip()


def _to_int(value: Any, default: int, minimum: int) -> int:
    try:
        parsed = int(value)
    except (TypeError, ValueError):
        parsed = default
    return max(minimum, parsed)


def _to_tolerance(value: Any, default: float) -> float:
    try:
        parsed = float(value)
    except (TypeError, ValueError):
        return default
    if not parsed > 0.0 or parsed >= 1.0:
        return default
    return parsed


def _to_solver(value: Any, default: LpSolverName) -> LpSolverName:
    try:
        return LpSolverName(str(value).strip().casefold())
    except ValueError:
        return default


_TOLERANCE_FIELDS = (
    "hermitian_tol",
    "trace_tol",
    "psd_tol",
    "projector_tol",
    "orthonormal_tol",
    "imaginary_tol",
    "zero_probability_tol",
    "probability_slack",
    "normalization_tol",
    "no_signaling_tol",
    "route_tol",
    "mean_tol",
    "lp_tol",
    "lp_weight_floor",
    "violation_margin",
)


@dataclass(frozen=True)
class LabConfig:
    hermitian_tol: float = 1e-10
    trace_tol: float = 1e-10
    psd_tol: float = 1e-9
    projector_tol: float = 1e-10
    orthonormal_tol: float = 1e-8
    imaginary_tol: float = 1e-10
    zero_probability_tol: float = 1e-12
    probability_slack: float = 1e-12
    normalization_tol: float = 1e-9
    no_signaling_tol: float = 1e-9
    route_tol: float = 1e-12
    mean_tol: float = 1e-9
    lp_tol: float = 1e-8
    lp_weight_floor: float = 1e-12
    violation_margin: float = 1e-3
    lp_max_iterations: int = 20000
    lp_solver: LpSolverName = LpSolverName.HIGHS
    max_workers: int = 4
    offset_grid_steps: int = 8
    enumeration_max_d: int = 8
    config_source: str = "defaults/env"

    @classmethod
    def from_env(cls) -> "LabConfig":
        defaults = cls()
        config = cls(
            lp_solver=_to_solver(_get_env("QB_LP_SOLVER"), defaults.lp_solver),
            lp_tol=_to_tolerance(_get_env("QB_LP_TOL"), defaults.lp_tol),
            lp_max_iterations=_to_int(
                _get_env("QB_LP_MAX_ITERATIONS"), defaults.lp_max_iterations, 100
            ),
            max_workers=_to_int(_get_env("QB_MAX_WORKERS"), defaults.max_workers, 1),
            offset_grid_steps=_to_int(
                _get_env("QB_OFFSET_GRID_STEPS"), defaults.offset_grid_steps, 2
            ),
        )
        config_path = os.getenv("QB_CONFIG_PATH", "quditbell.config.json")
        return config.merge_file(Path(config_path))

    def merge_file(self, path: Path) -> "LabConfig":
        if not path.exists():
            return self
        loaded = self._load_config_file(path)
        if not loaded:
            return self
        merged = dict(self.__dict__)
        for key in merged:
            if key in loaded:
                merged[key] = loaded[key]
        for name in _TOLERANCE_FIELDS:
            merged[name] = _to_tolerance(merged[name], getattr(self, name))
        merged["lp_max_iterations"] = _to_int(merged["lp_max_iterations"], self.lp_max_iterations, 100)
        merged["lp_solver"] = _to_solver(merged["lp_solver"], self.lp_solver)
        merged["max_workers"] = _to_int(merged["max_workers"], self.max_workers, 1)
        merged["offset_grid_steps"] = _to_int(merged["offset_grid_steps"], self.offset_grid_steps, 2)
        merged["enumeration_max_d"] = min(
            8, _to_int(merged["enumeration_max_d"], self.enumeration_max_d, 2)
        )
        merged["config_source"] = str(path)
        return LabConfig(**merged)

    def with_overrides(self, **overrides: Any) -> "LabConfig":
        known = {item.name for item in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise KeyError(f"unknown config fields: {sorted(unknown)}")
        merged = dict(self.__dict__)
        merged.update(overrides)
        return LabConfig(**merged)

    def tolerances(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in _TOLERANCE_FIELDS}

    def _load_config_file(self, path: Path) -> dict[str, Any]:
        suffix = path.suffix.lower()
        text = path.read_text(encoding="utf-8")
        if suffix == ".json":
            try:
                parsed = json.loads(text)
            except json.JSONDecodeError:
                return {}
            return parsed if isinstance(parsed, dict) else {}
        if suffix in {".yml", ".yaml"}:
            try:
                import yaml  # type: ignore
            except ImportError:
                return {}
            try:
                parsed = yaml.safe_load(text)
            except Exception:
                return {}
            return parsed if isinstance(parsed, dict) else {}
        return {}


DEFAULT_CONFIG = LabConfig()
