"""Problem configuration files.

A problem instance is described by a single TOML document with a
``schema_version`` field.  Units are fixed by the schema: transition
rates are per second, the journey horizon is given in hours, and the
reward tables (nuisance, progress, risk) are accrual rates per hour
of driving; the loader converts everything to seconds, which is the
canonical unit throughout the library.  ``risk_mrm`` is charged once
per minimal-risk manoeuvre and needs no conversion.

Top-level keys (schema version 1):

    schema_version          int, must be 1
    n, m, q                 attentiveness levels / alerts / speed levels
    controller_action_rate  1/s
    timer_rate              1/s
    horizon_hours           journey duration, hours
    nuisance                list of 2^m reals, per hour; nuisance[0] = 0
    progress                list of q reals, per hour
    risk                    n x q table of reals, per hour
    mrm_enabled             bool, optional (default false)
    mrm_timeout_tau         seconds, optional (default 15)
    risk_mrm                per manoeuvre, optional (default 0)
    [[driver_rates]]        attentiveness transition rates, see below

Each ``[[driver_rates]]`` record carries ``from_level``, ``to_level``,
``rate`` (1/s) and optional ``alerts`` / ``speeds`` lists restricting
the alert bitmasks and speed levels the rate applies to (omitted =
all).  Records must not overlap; cells not covered by any record are
zero, meaning no transition.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .design_space import ProblemSpec
from .errors import ConfigError, InputError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA_VERSION = 1
SECONDS_PER_HOUR = 3600.0

_TOP_LEVEL_KEYS = {
    "schema_version",
    "n",
    "m",
    "q",
    "controller_action_rate",
    "timer_rate",
    "horizon_hours",
    "nuisance",
    "progress",
    "risk",
    "mrm_enabled",
    "mrm_timeout_tau",
    "risk_mrm",
    "driver_rates",
}
_RATE_RECORD_KEYS = {"from_level", "to_level", "rate", "alerts", "speeds"}


def _require(doc: dict, key: str, kind, where: str = ""):
    path = f"{where}{key}"
    if key not in doc:
        raise ConfigError(f"{path}: missing required key")
    value = doc[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and isinstance(value, bool):
        raise ConfigError(f"{path}: expected an integer, got a boolean")
    if not isinstance(value, kind):
        raise ConfigError(
            f"{path}: expected {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _real_list(doc: dict, key: str, length: int, where: str = "") -> list[float]:
    raw = _require(doc, key, list, where)
    path = f"{where}{key}"
    if len(raw) != length:
        raise ConfigError(f"{path}: expected {length} entries, got {len(raw)}")
    out = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{path}[{i}]: expected a real number, got {v!r}")
        out.append(float(v))
    return out


def _index_list(record: dict, key: str, upper: int, default: range, where: str):
    if key not in record:
        return list(default)
    raw = record[key]
    path = f"{where}.{key}"
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"{path}: expected a nonempty list of integers")
    out = []
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < upper:
            raise ConfigError(f"{path}: entry {v!r} out of range [0, {upper})")
        out.append(v)
    return out


def parse_problem_spec(data: bytes, source: str = "<config>") -> ProblemSpec:
    """Parse and validate configuration bytes into a ProblemSpec."""
    try:
        doc = tomllib.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{source}: not a valid config file: {exc}") from exc

    unknown = set(doc) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
    version = _require(doc, "schema_version", int)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version: expected {SCHEMA_VERSION}, got {version}"
        )

    n = _require(doc, "n", int)
    m = _require(doc, "m", int)
    q = _require(doc, "q", int)
    if n < 2:
        raise ConfigError(f"n: must be >= 2, got {n}")
    if m < 1:
        raise ConfigError(f"m: must be >= 1, got {m}")
    if q < 1:
        raise ConfigError(f"q: must be >= 1, got {q}")
    num_alerts = 1 << m

    nuisance = _real_list(doc, "nuisance", num_alerts)
    if nuisance[0] != 0.0:
        raise ConfigError("nuisance[0]: must be 0 (alerts all off cause no nuisance)")
    progress = _real_list(doc, "progress", q)
    risk_rows = _require(doc, "risk", list)
    if len(risk_rows) != n:
        raise ConfigError(f"risk: expected {n} rows, got {len(risk_rows)}")
    risk = [
        _real_list({f"[{level}]": row}, f"[{level}]", q, "risk")
        for level, row in enumerate(risk_rows)
    ]

    records = doc.get("driver_rates", [])
    if not isinstance(records, list):
        raise ConfigError("driver_rates: expected an array of tables")
    rates = np.zeros((n, n, num_alerts, q))
    covered = np.zeros((n, n, num_alerts, q), dtype=bool)
    for i, record in enumerate(records):
        where = f"driver_rates[{i}]"
        if not isinstance(record, dict):
            raise ConfigError(f"{where}: expected a table")
        unknown = set(record) - _RATE_RECORD_KEYS
        if unknown:
            raise ConfigError(f"{where}: unknown keys: {', '.join(sorted(unknown))}")
        src = _require(record, "from_level", int, where + ".")
        dst = _require(record, "to_level", int, where + ".")
        rate = _require(record, "rate", float, where + ".")
        if not 0 <= src < n:
            raise ConfigError(f"{where}.from_level: {src} out of range [0, {n})")
        if not 0 <= dst < n:
            raise ConfigError(f"{where}.to_level: {dst} out of range [0, {n})")
        if src == dst:
            raise ConfigError(f"{where}.to_level: must differ from from_level")
        if not rate >= 0:
            raise ConfigError(f"{where}.rate: must be nonnegative, got {rate}")
        alerts = _index_list(record, "alerts", num_alerts, range(num_alerts), where)
        speeds = _index_list(record, "speeds", q, range(q), where)
        for a in alerts:
            for v in speeds:
                if covered[src, dst, a, v]:
                    raise ConfigError(
                        f"{where}: duplicate rate for transition "
                        f"{src} -> {dst} at alerts={a}, speed={v}"
                    )
                covered[src, dst, a, v] = True
                rates[src, dst, a, v] = rate

    horizon_hours = _require(doc, "horizon_hours", float)
    if not horizon_hours > 0:
        raise ConfigError(f"horizon_hours: must be positive, got {horizon_hours}")

    per_hour = 1.0 / SECONDS_PER_HOUR
    try:
        return ProblemSpec(
            n=n,
            m=m,
            q=q,
            nuisance=np.array(nuisance) * per_hour,
            progress=np.array(progress) * per_hour,
            risk=np.array(risk) * per_hour,
            driver_rates=rates,
            controller_action_rate=_require(doc, "controller_action_rate", float),
            timer_rate=_require(doc, "timer_rate", float),
            horizon_T=horizon_hours * SECONDS_PER_HOUR,
            risk_mrm=_require(doc, "risk_mrm", float) if "risk_mrm" in doc else 0.0,
            mrm_timeout_tau=(
                _require(doc, "mrm_timeout_tau", float)
                if "mrm_timeout_tau" in doc
                else 15.0
            ),
            mrm_enabled=(
                _require(doc, "mrm_enabled", bool) if "mrm_enabled" in doc else False
            ),
        )
    except ConfigError:
        raise
    except InputError as exc:  # semantic violations found by ProblemSpec
        raise ConfigError(f"{source}: {exc}") from exc


def load_problem_spec(path: str | Path) -> ProblemSpec:
    """Read and parse a configuration file."""
    return parse_problem_spec(read_config_bytes(path), source=str(path))


def read_config_bytes(path: str | Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
