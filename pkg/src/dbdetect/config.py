"""Plain-text model and plan files, and CSV matrix I/O.

One structured-text format serves both model files and plan files: blank
lines and ``#`` comments are ignored, ``[section]`` headers open a section,
and ``key = value`` lines fill it (keys before any header land in the
default section).  The parser keeps the line number of every key so
validation errors can point at the offending line.  Matrices are CSV,
row-major, with a two-line header carrying n and d; floats are written with
17 significant digits so round-trips are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .experiments import SweepGrid, TrialPlan
from .models import (
    DiscreteJointModel,
    GaussianModel,
    JointModel,
    make_bernoulli,
)


@dataclass(frozen=True)
class ConfigValue:
    raw: str
    line: int


class ConfigSource:
    """Parsed key -> value map for one file, with line-precise errors."""

    def __init__(self, path: str, sections: dict):
        self.path = path
        self.sections = sections

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})

    def error(self, key: str, section: str, message: str) -> ValidationError:
        value = self.section(section).get(key)
        location = f"{self.path}:{value.line}" if value else self.path
        return ValidationError(f"{location}: {message}")

    def get(self, key: str, section: str = "", default=None):
        value = self.section(section).get(key)
        return value.raw if value is not None else default

    def require(self, key: str, section: str = "") -> str:
        value = self.section(section).get(key)
        if value is None:
            where = f"[{section}]" if section else "top level"
            raise ValidationError(
                f"{self.path}: missing required key {key!r} in {where}"
            )
        return value.raw

    def get_float(self, key: str, section: str = "", default=None):
        raw = self.get(key, section)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise self.error(key, section, f"{key} must be a number, got {raw!r}")

    def get_int(self, key: str, section: str = "", default=None):
        raw = self.get(key, section)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise self.error(key, section, f"{key} must be an integer, got {raw!r}")


def parse_config(path: str) -> ConfigSource:
    sections: dict = {"": {}}
    current = ""
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw_line in enumerate(handle, start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip()
                sections.setdefault(current, {})
                continue
            if "=" not in line:
                raise ValidationError(
                    f"{path}:{lineno}: expected 'key = value' or '[section]', "
                    f"got {line!r}"
                )
            key, _, value = line.partition("=")
            sections[current][key.strip()] = ConfigValue(value.strip(), lineno)
    return ConfigSource(path, sections)


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


def _model_from_section(source: ConfigSource, section: str) -> JointModel:
    kind = source.require("kind", section).lower()
    if kind == "gaussian":
        rho = source.get_float("rho", section)
        if rho is None:
            raise source.error("kind", section, "gaussian models require rho")
        try:
            return GaussianModel(rho=rho)
        except ValidationError as exc:
            raise source.error("rho", section, str(exc))
    if kind == "bernoulli":
        tau = source.get_float("tau", section)
        p = source.get_float("p", section)
        if tau is None or p is None:
            raise source.error("kind", section, "bernoulli models require tau and p")
        try:
            return make_bernoulli(tau, p)
        except ValidationError as exc:
            key = "tau" if "tau" in str(exc) else "p"
            raise source.error(key, section, str(exc))
    if kind == "discrete":
        m = source.get_int("alphabet_size", section)
        raw = source.get("joint", section)
        if m is None or raw is None:
            raise source.error(
                "kind", section, "discrete models require alphabet_size and joint"
            )
        try:
            entries = [float(tok) for tok in raw.split()]
        except ValueError:
            raise source.error(
                "joint", section, "joint must be whitespace-separated numbers"
            )
        if len(entries) != m * m:
            raise source.error(
                "joint",
                section,
                f"joint must list alphabet_size^2 = {m * m} entries row-major, "
                f"got {len(entries)}",
            )
        try:
            return DiscreteJointModel(
                joint=np.array(entries, dtype=np.float64).reshape(m, m)
            )
        except ValidationError as exc:
            raise source.error("joint", section, str(exc))
    raise source.error(
        "kind", section, f"kind must be gaussian, bernoulli, or discrete, got {kind!r}"
    )


def load_model(path: str) -> JointModel:
    """Read a model file; invariant failures are reported with the file and
    line of the violating key."""
    source = parse_config(path)
    section = "model" if source.section("model") else ""
    return _model_from_section(source, section)


# ---------------------------------------------------------------------------
# Plans
# ---------------------------------------------------------------------------


def _parse_values(raw: str, cast) -> tuple:
    try:
        return tuple(cast(tok) for tok in raw.split())
    except ValueError:
        raise ValidationError(f"could not parse list {raw!r}")


def load_plan(path: str, overrides: Optional[dict] = None) -> TrialPlan:
    """Read a plan file: a [model] section, a [run] section, and an optional
    [sweep] section with value lists.  ``overrides`` (from CLI flags) replace
    scalar run keys."""
    source = parse_config(path)
    model = _model_from_section(source, "model" if source.section("model") else "")
    run = "run" if source.section("run") else ""
    overrides = overrides or {}

    detectors_raw = overrides.get("detectors") or source.get("detectors", run)
    if detectors_raw is None:
        raise ValidationError(f"{path}: missing required key 'detectors' in [run]")
    if isinstance(detectors_raw, str):
        detectors = tuple(detectors_raw.replace(",", " ").split())
    else:
        detectors = tuple(detectors_raw)

    tau_count_raw = overrides.get("tau_count")
    if tau_count_raw is None:
        tau_count_raw = source.get("tau_count", run)
    tau_count: object = None
    if tau_count_raw is not None:
        if isinstance(tau_count_raw, str) and not _is_number(tau_count_raw):
            tau_count = tau_count_raw  # symbolic, e.g. "half-kl"
        else:
            tau_count = float(tau_count_raw)

    sweep_grid = None
    if source.section("sweep"):
        param_raw = source.get("rho", "sweep") or source.get("tau", "sweep")
        sweep_grid = SweepGrid(
            param_values=_parse_values(param_raw, float) if param_raw else None,
            n_values=(
                _parse_values(source.get("n", "sweep"), int)
                if source.get("n", "sweep")
                else None
            ),
            d_values=(
                _parse_values(source.get("d", "sweep"), int)
                if source.get("d", "sweep")
                else None
            ),
        )

    def pick(key, getter, default=None):
        if key in overrides and overrides[key] is not None:
            return overrides[key]
        return getter(key, run, default)

    n = pick("n", source.get_int)
    d = pick("d", source.get_int)
    if n is None or d is None:
        raise ValidationError(f"{path}: plan needs n and d in [run] (or --n/--d)")
    seed = pick("seed", source.get_int)
    if seed is None:
        raise ValidationError(f"{path}: plan needs a seed in [run] (or --seed)")
    return TrialPlan(
        model=model,
        n=int(n),
        d=int(d),
        trials=int(pick("trials", source.get_int, 2000)),
        seed=int(seed),
        detectors=detectors,
        tau_glrt=float(pick("tau_glrt", source.get_float, 0.0)),
        tau_sum=pick("tau_sum", source.get_float, None),
        tau_count=tau_count,
        pd_method=str(pick("pd_method", source.get, "auto")),
        pd_samples=int(pick("pd_samples", source.get_int, 1_000_000)),
        sweep=sweep_grid,
    )


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# CSV matrices
# ---------------------------------------------------------------------------


def write_matrix_csv(path: str, matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix)
    n, d = matrix.shape
    lines = ["n,d", f"{n},{d}"]
    for row in matrix:
        lines.append(",".join(format(float(v), ".17g") for v in row))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def read_matrix_csv(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.strip() for line in handle if line.strip()]
    if len(lines) < 2 or lines[0] != "n,d":
        raise ValidationError(f"{path}:1: expected the header line 'n,d'")
    try:
        n, d = (int(tok) for tok in lines[1].split(","))
    except ValueError:
        raise ValidationError(f"{path}:2: expected 'n,d' integer values")
    if len(lines) != 2 + n:
        raise ValidationError(
            f"{path}: expected {n} data rows after the header, got {len(lines) - 2}"
        )
    rows = []
    for offset, line in enumerate(lines[2:], start=3):
        values = line.split(",")
        if len(values) != d:
            raise ValidationError(
                f"{path}:{offset}: expected {d} comma-separated values"
            )
        rows.append([float(v) for v in values])
    return np.array(rows, dtype=np.float64)


def matrix_for_model(model: JointModel, matrix: np.ndarray) -> np.ndarray:
    """Cast a CSV matrix to the model's observation dtype (validated ints for
    discrete alphabets, floats otherwise)."""
    if isinstance(model, GaussianModel):
        return matrix
    as_int = matrix.astype(np.int64)
    if not np.array_equal(as_int, matrix):
        raise ValidationError("discrete observations must be integers")
    return as_int
