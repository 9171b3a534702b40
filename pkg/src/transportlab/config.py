"""Run configuration: parsing, validation and construction of pairs.

A configuration is a JSON object::

    {
      "schema": "transportlab/1",
      "quadrature": {"order": {"1": 400, "2": 200}, "sigmas": 12},
      "measures": {
        "g1": {"type": "gaussian", "mean": [0], "covariance": [[1]]},
        "p3": {"type": "perturbed", "amplitude": 0.3},
        "s1": {"type": "shift", "base": "g1", "h": [1]},
        "pp": {"type": "product", "factors": ["p3", "g1"]}
      },
      "pairs": {
        "a": {"mu": "p3", "nu": "g1", "map": "auto", "order": 300},
        "b": {"mu": "pp", "nu": "g2", "map": {"method": "knothe", "cdf_grid": 1024}}
      },
      "checks": [
        {"name": "MAIN", "pair": "a"},
        {"name": ["LP_DIR", "OPNORM"], "pair": ["a", "b"], "params": {"p": 1}, "tolerance": 1e-6}
      ],
      "output": {"json": "report.json", "csv": "report.csv"}
    }

A pair may set its own ``order`` (nodes per axis).  ``name`` and ``pair``
in a check may be lists; the entry expands to every combination, in order.
"""

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .checks import CheckSpec, Pair, get_check
from .errors import ConfigError, RegistryError, TransportLabError
from .measures import default_rule, make_gaussian, make_gaussian_shift_density, make_perturbed_gaussian, make_product, tilt
from .transport import METHODS, build_map

SCHEMA = "transportlab/1"
MEASURE_TYPES = ("gaussian", "perturbed", "product", "shift")
MAP_OPTIONS = ("method", "cdf_grid", "epsilon", "max_iter")
CHECK_PARAMS = ("K", "e", "p", "r", "t", "reference")


@dataclass
class RunConfig:
    measures: dict
    pairs: dict
    checks: list
    quadrature: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def digest(self):
        return config_digest(self.raw)


def config_digest(raw):
    """sha256 of the canonical JSON encoding."""
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def default_config_path():
    return resources.files("transportlab") / "data" / "default.json"


def load_config(path):
    """Read and validate a configuration file.

    Raises
    ------
    ConfigError
        Missing file, malformed JSON or a schema violation.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_config(raw)


def _require(obj, key, where, kind):
    if key not in obj:
        raise ConfigError(f"{where}.{key}", "missing")
    value = obj[key]
    if not isinstance(value, kind):
        raise ConfigError(f"{where}.{key}", f"expected {getattr(kind, '__name__', kind)}")
    return value


def _as_list(value):
    return value if isinstance(value, list) else [value]


def parse_config(raw):
    """Validate a decoded configuration and return a :class:`RunConfig`."""
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    schema = raw.get("schema")
    if schema != SCHEMA:
        raise ConfigError("schema", f"expected {SCHEMA!r}, got {schema!r}")
    unknown = set(raw) - {"schema", "quadrature", "measures", "pairs", "checks", "output", "description"}
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown top-level field")

    quad = raw.get("quadrature", {})
    if not isinstance(quad, dict):
        raise ConfigError("quadrature", "expected an object")
    orders = quad.get("order", {})
    if not isinstance(orders, dict):
        raise ConfigError("quadrature.order", "expected an object keyed by dimension")
    for d, n in orders.items():
        if d not in ("1", "2", "3") or not isinstance(n, int) or n < 2:
            raise ConfigError(f"quadrature.order.{d}", "expected dimension 1-3 mapped to an integer >= 2")
    sigmas = quad.get("sigmas", 12.0)
    if not isinstance(sigmas, (int, float)) or sigmas <= 0:
        raise ConfigError("quadrature.sigmas", "expected a positive number")

    measures = _require(raw, "measures", "config", dict)
    for mid, desc in measures.items():
        where = f"measures.{mid}"
        if not isinstance(desc, dict):
            raise ConfigError(where, "expected an object")
        mtype = _require(desc, "type", where, str)
        if mtype not in MEASURE_TYPES:
            raise ConfigError(f"{where}.type", f"unknown type {mtype!r}; expected one of {MEASURE_TYPES}")
        if mtype == "gaussian":
            _require(desc, "mean", where, list)
            _require(desc, "covariance", where, list)
        elif mtype == "perturbed":
            _require(desc, "amplitude", where, (int, float))
        elif mtype == "product":
            for f in _require(desc, "factors", where, list):
                if f not in measures:
                    raise ConfigError(f"{where}.factors", f"unknown measure {f!r}")
        else:
            base = _require(desc, "base", where, str)
            if base not in measures:
                raise ConfigError(f"{where}.base", f"unknown measure {base!r}")
            _require(desc, "h", where, list)

    pairs = _require(raw, "pairs", "config", dict)
    for pid, desc in pairs.items():
        where = f"pairs.{pid}"
        if not isinstance(desc, dict):
            raise ConfigError(where, "expected an object")
        for side in ("mu", "nu"):
            ref = _require(desc, side, where, str)
            if ref not in measures:
                raise ConfigError(f"{where}.{side}", f"unknown measure {ref!r}")
        order = desc.get("order")
        if order is not None and (not isinstance(order, int) or order < 2):
            raise ConfigError(f"{where}.order", "expected an integer >= 2")
        m = desc.get("map", "auto")
        m = {"method": m} if isinstance(m, str) else m
        if not isinstance(m, dict):
            raise ConfigError(f"{where}.map", "expected a method name or an object")
        extra = set(m) - set(MAP_OPTIONS)
        if extra:
            raise ConfigError(f"{where}.map.{sorted(extra)[0]}", "unknown map option")
        if m.get("method", "auto") not in METHODS:
            raise ConfigError(f"{where}.map.method", f"unknown method {m.get('method')!r}; expected one of {METHODS}")

    checks_raw = _require(raw, "checks", "config", list)
    if not checks_raw:
        raise ConfigError("checks", "at least one check is required")
    specs = []
    for i, entry in enumerate(checks_raw):
        where = f"checks[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(where, "expected an object")
        names = _as_list(entry.get("name"))
        pair_ids = _as_list(entry.get("pair"))
        params = entry.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError(f"{where}.params", "expected an object")
        bad = set(params) - set(CHECK_PARAMS)
        if bad:
            raise ConfigError(f"{where}.params.{sorted(bad)[0]}", "unknown check parameter")
        if "reference" in params and params["reference"] not in pairs:
            raise ConfigError(f"{where}.params.reference", f"unknown pair {params['reference']!r}")
        tol = entry.get("tolerance")
        if tol is not None and (not isinstance(tol, (int, float)) or tol < 0):
            raise ConfigError(f"{where}.tolerance", "expected a nonnegative number")
        for name in names:
            if not isinstance(name, str):
                raise ConfigError(f"{where}.name", "expected a check name")
            try:
                get_check(name)
            except RegistryError as exc:
                raise ConfigError(f"{where}.name", str(exc)) from None
            for pid in pair_ids:
                if pid not in pairs:
                    raise ConfigError(f"{where}.pair", f"unknown pair {pid!r}")
                specs.append(CheckSpec(name, pid, dict(params), tol))

    output = raw.get("output", {})
    if not isinstance(output, dict) or set(output) - {"json", "csv"}:
        raise ConfigError("output", "expected an object with optional 'json' and 'csv' paths")
    return RunConfig(measures=measures, pairs=pairs, checks=specs,
                     quadrature={"order": {int(k): v for k, v in orders.items()}, "sigmas": float(sigmas)},
                     output=output, raw=raw)


def build_measures(config):
    """Construct every configured measure; errors name the offending id."""
    built = {}

    def get(mid):
        if mid in built:
            return built[mid]
        desc = config.measures[mid]
        try:
            if desc["type"] == "gaussian":
                m = make_gaussian(desc["mean"], desc["covariance"], label=mid)
            elif desc["type"] == "perturbed":
                m = make_perturbed_gaussian(desc["amplitude"], desc.get("frequency", 1.0), label=mid)
            elif desc["type"] == "product":
                m = make_product([get(f) for f in desc["factors"]], label=mid)
            else:
                m = tilt(get(desc["base"]), make_gaussian_shift_density(desc["h"]), label=mid)
        except ConfigError:
            raise
        except (TransportLabError, ValueError, TypeError) as exc:
            raise ConfigError(f"measures.{mid}", str(exc)) from None
        built[mid] = m
        return m

    for mid in config.measures:
        get(mid)
    return built


def build_pairs(config, measures=None):
    """Build rules and maps for every pair.

    Returns
    -------
    pairs : dict
        Pair id -> :class:`Pair` for the pairs that could be built.
    errors : dict
        Pair id -> error message for the others (a failed map construction
        turns into failing results, not an abort).
    """
    measures = measures if measures is not None else build_measures(config)
    pairs, errors = {}, {}
    for pid, desc in config.pairs.items():
        mu, nu = measures[desc["mu"]], measures[desc["nu"]]
        if mu.dim != nu.dim:
            raise ConfigError(f"pairs.{pid}", "mu and nu have different dimensions")
        m = desc.get("map", "auto")
        opts = {"method": m} if isinstance(m, str) else dict(m)
        method = opts.pop("method", "auto")
        try:
            order = desc.get("order") or config.quadrature["order"].get(mu.dim)
            rule = default_rule(mu, nu, order=order,
                                sigmas=config.quadrature["sigmas"])
            transport = build_map(mu, nu, method, rule=rule, **opts)
            pairs[pid] = Pair(mu, nu, transport, rule, label=pid)
        except (TransportLabError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            errors[pid] = f"map construction failed: {type(exc).__name__}: {exc}"
    return pairs, errors
