"""Verification checks: one per inequality or identity, with a shared runner."""

from .core import (
    APPROXIMATE_TOLERANCE, IDENTITY, IDENTITY_TOLERANCE, INEQUALITY, INEQUALITY_TOLERANCE,
    CheckResult, CheckSpec, default_tolerance, evaluate_status, failed_result, make_result,
)
from .library import growth_constant
from .pair import Pair
from .registry import CHECK_NAMES, REGISTRY, CheckEntry, admissibility, get_check, run_check
from .suite import WORKERS_ENV, run_suite, worker_count

__all__ = [
    "APPROXIMATE_TOLERANCE", "CHECK_NAMES", "CheckEntry", "CheckResult", "CheckSpec", "IDENTITY",
    "IDENTITY_TOLERANCE", "INEQUALITY", "INEQUALITY_TOLERANCE", "Pair", "REGISTRY", "WORKERS_ENV",
    "admissibility", "default_tolerance", "evaluate_status", "failed_result", "get_check", "growth_constant", "make_result",
    "run_check", "run_suite", "worker_count",
]
