from enum import StrEnum


class ProcessKind(StrEnum):
    UNRECORDED_FIRST = "unrecorded-first"
    UNRECORDED_SECOND = "unrecorded-second"
    NEVER_MEASURED = "never-measured"


class Verdict(StrEnum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"


class LpStatus(StrEnum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    FAILED = "failed"


class LpSolverName(StrEnum):
    HIGHS = "highs"
    SIMPLEX = "simplex"


class OutputFormat(StrEnum):
    CSV = "csv"
    JSON = "json"
