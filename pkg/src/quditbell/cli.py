import argparse
import logging
import sys
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Any, TypeVar

import numpy as np

from quditbell import __version__
from quditbell.cglmp import LocalBoundScan, i_quantum, scan_deterministic_strategies, violation_certificate
from quditbell.config import LabConfig, load_project_env
from quditbell.enums import LpSolverName, OutputFormat, ProcessKind
from quditbell.errors import (
    BehaviorFileError,
    ConfigValidationError,
    ConsistencyError,
    LpInconclusiveError,
    QuditBellError,
    SignalingError,
)
from quditbell.hvt import Feasible, behavior_from_local_model, c_reconstruction_test, random_local_model
from quditbell.measurement_sequences import MeasurementScenario, process_probability, quantum_behavior
from quditbell.models import A1B1, BehaviorTable, CglmpBreakdown
from quditbell.quantum_core import DensityOperator, identity
from quditbell.serialization import dump_csv, dump_json, hvt_support_to_dict, load_behavior, local_model_to_dict, write_output
from quditbell.states_library import (
    CglmpOffsets,
    basis_density,
    cglmp_bases,
    commuting_scenario,
    computational_x_scenario,
    maximally_entangled_density,
    product_density,
    random_density,
    random_scenario,
    resolve_offsets,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

COMMANDS = ("violation-scan", "process-compare", "lhv-oracle", "fine-test")
PROCESS_FIXTURES = ("cglmp", "commuting", "computational-x", "random")
FINE_FIXTURES = ("product", "cglmp", "random-local")
RANDOM_FIXTURES = frozenset({"random", "random-local"})
ORACLE_MAX_D = 4
TERM_COLUMNS = ("I", "P(A1=B1)", "P(B1=A2+1)", "P(A2=B2)", "P(B2=A1)")
OFFSET_COLUMNS = ("alpha1", "alpha2", "beta1", "beta2")


@dataclass(frozen=True)
class RunConfig:
    command: str
    d_min: int = 2
    d_max: int = 2
    process: ProcessKind = ProcessKind.NEVER_MEASURED
    seed: int | None = None
    samples: int = 1
    out: Path | None = None
    output_format: OutputFormat = OutputFormat.CSV
    tol: float | None = None
    input_path: Path | None = None
    fixture: str | None = None
    solver: LpSolverName | None = None
    max_d: int = 8

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigValidationError(f"unknown command {self.command!r}", field="command")
        if self.d_min < 2:
            raise ConfigValidationError(f"--d-min must be at least 2, got {self.d_min}", field="d_min")
        if self.d_max < self.d_min:
            raise ConfigValidationError(f"--d-max {self.d_max} is below --d-min {self.d_min}", field="d_max")
        limit = ORACLE_MAX_D if self.command == "lhv-oracle" else self.max_d
        if self.d_max > limit:
            raise ConfigValidationError(f"{self.command} supports d <= {limit}, got {self.d_max}", field="d_max")
        if self.tol is not None and not 0.0 < self.tol < 1.0:
            raise ConfigValidationError(f"--tol must lie in (0, 1), got {self.tol}", field="tol")
        if self.seed is not None and self.seed < 0:
            raise ConfigValidationError(f"--seed must be nonnegative, got {self.seed}", field="seed")
        if self.samples < 1:
            raise ConfigValidationError(f"--samples must be positive, got {self.samples}", field="samples")
        if self.fixture is not None:
            allowed = {"process-compare": PROCESS_FIXTURES, "fine-test": FINE_FIXTURES}.get(self.command, ())
            if self.fixture not in allowed:
                raise ConfigValidationError(
                    f"fixture {self.fixture!r} is not available for {self.command}", field="fixture"
                )
        if self.command == "fine-test" and (self.fixture is None) == (self.input_path is None):
            raise ConfigValidationError("fine-test needs exactly one of --input or --fixture", field="input")
        if self.effective_fixture in RANDOM_FIXTURES and self.seed is None:
            raise ConfigValidationError(f"fixture {self.fixture!r} is randomized; pass --seed", field="seed")

    @property
    def effective_fixture(self) -> str | None:
        if self.command == "process-compare":
            return self.fixture or "cglmp"
        return self.fixture

    @property
    def d_values(self) -> list[int]:
        return list(range(self.d_min, self.d_max + 1))

    def lab_config(self, base: LabConfig) -> LabConfig:
        overrides: dict[str, Any] = {}
        if self.tol is not None:
            overrides["lp_tol"] = self.tol
            overrides["no_signaling_tol"] = self.tol
        if self.solver is not None:
            overrides["lp_solver"] = self.solver
        return base.with_overrides(**overrides) if overrides else base

    @classmethod
    def from_args(cls, args: argparse.Namespace, max_d: int = 8) -> "RunConfig":
        d_min = args.d_min
        d_max = args.d_max if args.d_max is not None else d_min
        return cls(
            command=args.command,
            d_min=d_min,
            d_max=d_max,
            process=ProcessKind(args.process),
            seed=args.seed,
            samples=getattr(args, "samples", 1),
            out=Path(args.out) if args.out else None,
            output_format=OutputFormat(args.format),
            tol=args.tol,
            input_path=Path(args.input) if getattr(args, "input", None) else None,
            fixture=getattr(args, "fixture", None),
            solver=LpSolverName(args.solver) if getattr(args, "solver", None) else None,
            max_d=max_d,
        )


@dataclass
class CommandResult:
    command: str
    header: tuple[str, ...]
    rows: list[tuple[Any, ...]]
    meta: dict[str, Any]
    details: dict[str, Any] = field(default_factory=dict)
    ok: bool = True

    def render(self, output_format: OutputFormat) -> str:
        if output_format is OutputFormat.CSV:
            return dump_csv(self.header, self.rows)
        payload = {
            "command": self.command,
            "meta": self.meta,
            "rows": [dict(zip(self.header, row)) for row in self.rows],
        }
        payload.update(self.details)
        return dump_json(payload)


def _ordered_map(fn: Callable[[Any], T], items: Iterable[Any], config: LabConfig) -> list[T]:
    """Evaluate independent items concurrently; results keep input order."""
    with ThreadPoolExecutor(max_workers=config.max_workers) as pool:
        return list(pool.map(fn, items))


def _meta(run: RunConfig, config: LabConfig, offsets: dict[int, CglmpOffsets] | None = None) -> dict[str, Any]:
    meta: dict[str, Any] = {
        "version": __version__,
        "seed": run.seed,
        "process": str(run.process),
        "tolerances": config.tolerances(),
        "config_source": config.config_source,
    }
    if run.effective_fixture is not None:
        meta["fixture"] = run.effective_fixture
    if offsets:
        meta["offsets"] = {str(d): value.as_dict() for d, value in sorted(offsets.items())}
    return meta


def _breakdown_values(breakdown: CglmpBreakdown) -> tuple[float, ...]:
    values = breakdown.as_dict()
    return tuple(values[name] for name in TERM_COLUMNS)


def _rng(run: RunConfig, d: int, sample: int = 0) -> np.random.Generator:
    if run.seed is None:
        raise ConfigValidationError(f"fixture {run.effective_fixture!r} is randomized; pass --seed", field="seed")
    return np.random.default_rng([run.seed, d, sample])


def cmd_violation_scan(run: RunConfig, config: LabConfig) -> CommandResult:
    """I for the maximally entangled state in the CGLMP bases, per d."""

    def evaluate(d: int) -> tuple[CglmpOffsets, tuple[Any, ...]]:
        offsets = resolve_offsets(d, config)
        breakdown = i_quantum(maximally_entangled_density(d), cglmp_bases(d, offsets, config), run.process, config)
        row = (
            d,
            str(run.process),
            *_breakdown_values(breakdown),
            offsets.alpha1,
            offsets.alpha2,
            offsets.beta1,
            offsets.beta2,
            breakdown.total > 3.0,
        )
        return offsets, row

    results = _ordered_map(evaluate, run.d_values, config)
    return CommandResult(
        command=run.command,
        header=("d", "process", *TERM_COLUMNS, *OFFSET_COLUMNS, "exceeds_local_bound"),
        rows=[row for _, row in results],
        meta=_meta(run, config, {d: offsets for d, (offsets, _) in zip(run.d_values, results)}),
    )


def _process_fixture(fixture: str, d: int, run: RunConfig, config: LabConfig) -> tuple[DensityOperator, MeasurementScenario]:
    match fixture:
        case "cglmp":
            return maximally_entangled_density(d), cglmp_bases(d, config=config)
        case "commuting":
            return maximally_entangled_density(d), commuting_scenario(d)
        case "computational-x":
            return product_density(basis_density(2, 0), basis_density(2, 0)), computational_x_scenario()
        case "random":
            rng = _rng(run, d)
            return random_density((d, d), rng), random_scenario(d, rng, config)
    raise ConfigValidationError(f"unknown fixture {fixture!r}", field="fixture")


def cmd_process_compare(run: RunConfig, config: LabConfig) -> CommandResult:
    """I under each sequential measurement process for one state and scenario."""
    fixture = run.effective_fixture or "cglmp"
    d_values = [2] if fixture == "computational-x" else run.d_values

    def evaluate(d: int) -> list[tuple[Any, ...]]:
        rho, scenario = _process_fixture(fixture, d, run, config)
        rows: list[tuple[Any, ...]] = []
        totals: list[float] = []
        for kind in ProcessKind:
            breakdown = i_quantum(rho, scenario, kind, config)
            totals.append(breakdown.total)
            p00 = process_probability(rho, scenario, A1B1, (0, 0), kind, config)
            rows.append((fixture, d, str(kind), *_breakdown_values(breakdown), p00))
        spread = max(abs(a - b) for a, b in combinations(totals, 2))
        return [(*row, spread) for row in rows]

    per_d = _ordered_map(evaluate, d_values, config)
    offsets = {d: resolve_offsets(d, config) for d in d_values} if fixture == "cglmp" else None
    return CommandResult(
        command=run.command,
        header=("fixture", "d", "process", *TERM_COLUMNS, "P(0,0|A1B1)", "max_pairwise_delta_I"),
        rows=[row for rows in per_d for row in rows],
        meta=_meta(run, config, offsets),
    )


def _strategy_text(scan: LocalBoundScan) -> str:
    return ";".join("({},{},{},{})".format(*s.as_tuple()) for s in scan.maximizers)


def cmd_lhv_oracle(run: RunConfig, config: LabConfig) -> CommandResult:
    """Exhaustive maximum of I over deterministic local strategies."""
    scans = _ordered_map(lambda d: scan_deterministic_strategies(d, config), run.d_values, config)
    return CommandResult(
        command=run.command,
        header=("d", "max_I", "maximizer_count", "strategies_checked", "maximizers"),
        rows=[(s.d, s.maximum, len(s.maximizers), s.strategies_checked, _strategy_text(s)) for s in scans],
        meta=_meta(run, config),
        details={"maximizers": {str(s.d): [list(m.as_tuple()) for m in s.maximizers] for s in scans}},
    )


def _fine_cases(run: RunConfig, config: LabConfig) -> list[tuple[str, BehaviorTable]]:
    if run.input_path is not None:
        return [(str(run.input_path), load_behavior(run.input_path, config))]
    cases: list[tuple[str, BehaviorTable]] = []
    for d in run.d_values:
        match run.fixture:
            case "product":
                rho = product_density(basis_density(d, 0), identity(d) / d)
                cases.append((f"product d={d}", quantum_behavior(rho, cglmp_bases(d, config=config), run.process, config)))
            case "cglmp":
                rho = maximally_entangled_density(d)
                cases.append((f"cglmp d={d}", quantum_behavior(rho, cglmp_bases(d, config=config), run.process, config)))
            case "random-local":
                for sample in range(run.samples):
                    model = random_local_model(d, d + 1, _rng(run, d, sample))
                    cases.append((f"random-local d={d} #{sample}", behavior_from_local_model(model)))
    return cases


def cmd_fine_test(run: RunConfig, config: LabConfig) -> CommandResult:
    """Local-model LP and C-reconstruction LP on the same behaviors."""
    cases = _fine_cases(run, config)

    def evaluate(case: tuple[str, BehaviorTable]) -> tuple[tuple[Any, ...], dict[str, Any]]:
        name, behavior = case
        certificate = violation_certificate(behavior, config, run.solver)
        reconstruction = c_reconstruction_test(behavior, config, run.solver)
        fine = certificate.membership
        fine_value = fine.error if isinstance(fine, Feasible) else fine.margin
        c_value = reconstruction.error if isinstance(reconstruction, Feasible) else reconstruction.margin
        agree = fine.verdict == reconstruction.verdict
        row = (
            name,
            behavior.d,
            certificate.breakdown.total,
            str(fine.verdict),
            fine_value,
            str(reconstruction.verdict),
            c_value,
            agree,
            str(fine.solver),
        )
        detail: dict[str, Any] = {"case": name, "fine_verdict": str(fine.verdict), "agree": agree}
        if isinstance(fine, Feasible):
            detail["local_model"] = local_model_to_dict(fine.certificate)
        if isinstance(reconstruction, Feasible):
            detail["c_support"] = hvt_support_to_dict(reconstruction.certificate, config.lp_weight_floor)
        return row, detail

    results = _ordered_map(evaluate, cases, config)
    agree_all = all(row[7] for row, _ in results)
    return CommandResult(
        command=run.command,
        header=("case", "d", "I", "fine_verdict", "fine_error_or_margin", "c_verdict", "c_error_or_margin", "agree", "solver"),
        rows=[row for row, _ in results],
        meta=_meta(run, config),
        details={"certificates": [detail for _, detail in results]},
        ok=agree_all,
    )


COMMAND_HANDLERS: dict[str, Callable[[RunConfig, LabConfig], CommandResult]] = {
    "violation-scan": cmd_violation_scan,
    "process-compare": cmd_process_compare,
    "lhv-oracle": cmd_lhv_oracle,
    "fine-test": cmd_fine_test,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qb", description="Qudit Bell-test lab")
    subparsers = parser.add_subparsers(dest="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d-min", type=int, default=2)
    common.add_argument("--d-max", type=int, default=None)
    common.add_argument("--process", choices=[k.value for k in ProcessKind], default=ProcessKind.NEVER_MEASURED.value)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.CSV.value)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--verbose", action="store_true")

    subparsers.add_parser("violation-scan", parents=[common], help="I(d) for the entangled state in CGLMP bases")
    compare = subparsers.add_parser("process-compare", parents=[common], help="Compare the three measurement processes")
    compare.add_argument("--fixture", choices=PROCESS_FIXTURES, default=None)
    subparsers.add_parser("lhv-oracle", parents=[common], help="Exhaustive local bound over deterministic strategies")
    fine = subparsers.add_parser("fine-test", parents=[common], help="LP locality test of a behavior")
    fine.add_argument("--input", default=None)
    fine.add_argument("--fixture", choices=FINE_FIXTURES, default=None)
    fine.add_argument("--solver", choices=[s.value for s in LpSolverName], default=None)
    fine.add_argument("--samples", type=int, default=1)
    return parser


def run_command(args: argparse.Namespace, base_config: LabConfig | None = None) -> int:
    base = base_config or LabConfig.from_env()
    try:
        run = RunConfig.from_args(args, max_d=base.enumeration_max_d)
        config = run.lab_config(base)
        result = COMMAND_HANDLERS[run.command](run, config)
    except BehaviorFileError as error:
        print(f"❌ Invalid behavior file: {error.diagnostic()}")
        return 1
    except ConfigValidationError as error:
        print(f"❌ Invalid configuration ({error.field}): {error}")
        return 1
    except SignalingError as error:
        print(f"❌ {error}")
        print(f"   - {error.report.summary()}")
        return 1
    except (ConsistencyError, LpInconclusiveError) as error:
        print(f"❌ Internal consistency failure: {error}")
        return 2
    except QuditBellError as error:
        print(f"❌ {error}")
        return 1

    write_output(result.render(run.output_format), run.out)
    if run.out is not None:
        print(f"✅ Wrote {len(result.rows)} rows to {run.out}")
    if not result.ok:
        print("❌ Internal consistency failure: the two LP tests disagree")
        return 2
    return 0


def main(argv: Sequence[str] | None = None) -> None:
    load_project_env()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        sys.exit(1)
    if args.verbose:
        logging.basicConfig(level=logging.DEBUG, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run_command(args))
