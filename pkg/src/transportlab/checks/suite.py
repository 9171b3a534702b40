"""Running many checks, optionally in parallel."""

import os
from concurrent.futures import ThreadPoolExecutor

from .registry import get_check, run_check

WORKERS_ENV = "TRANSPORTLAB_WORKERS"


def worker_count():
    """Worker threads: ``$TRANSPORTLAB_WORKERS`` if set, else the available cores."""
    try:
        cores = len(os.sched_getaffinity(0))
    except AttributeError:
        cores = os.cpu_count() or 1
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return max(1, cores)


def run_suite(specs, pairs, workers=None):
    """Evaluate ``specs`` (a list of :class:`CheckSpec`) against ``pairs``.

    Parameters
    ----------
    specs : list of CheckSpec
    pairs : dict
        Pair id -> :class:`Pair`.
    workers : int, optional
        Defaults to :func:`worker_count`.

    Returns
    -------
    list of CheckResult
        In spec order.  A failing or erroring check does not affect the
        others.

    Raises
    ------
    RegistryError
        For an unknown check name, before anything runs.
    KeyError
        For a spec naming an undefined pair.
    """
    specs = list(specs)
    for spec in specs:
        get_check(spec.name)
        if spec.pair not in pairs:
            raise KeyError(f"check {spec.name} refers to undefined pair {spec.pair!r}")
    if not specs:
        return []

    def one(spec):
        return run_check(spec.name, pairs[spec.pair], spec.params, spec.tolerance, pairs=pairs)

    workers = workers or worker_count()
    if workers == 1:
        return [one(s) for s in specs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, specs))
