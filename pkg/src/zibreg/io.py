"""
CSV ingestion, run configuration and model artifacts.

Artifacts and reports are written as canonical JSON: keys in a fixed order,
floats printed with 17 significant digits (enough to round-trip every
double), written to a temporary file and renamed into place.
"""

import csv
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import __version__
from .exceptions import ValidationError
from .model import Parameters, mixture_probabilities, validate_dataset
from .optimizer import FitOptions
from .penalty import PenaltySpec
from .selection import DEFAULT_GRID, LambdaGrid, aic, bic, standard_errors, wald_intervals

SCHEMA_VERSION = 1
INTERCEPT = "(Intercept)"
MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none", "?"})


class CSVFormatError(ValidationError):
    pass


class ArtifactVersionError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


@dataclass
class RunConfig:
    """Everything a CLI run needs; loadable from a JSON file."""

    input: Optional[str] = None
    response: Optional[str] = None
    x_columns: list = field(default_factory=list)
    z_columns: list = field(default_factory=list)
    x_intercept: bool = True
    z_intercept: bool = True
    family: str = "lasso"
    lambda_beta: float = 0.0
    lambda_gamma: Optional[float] = None
    alpha: float = 0.5
    penalize_intercepts: bool = True
    scale_by_n: bool = False
    max_iterations: int = 10000
    objective_tolerance: float = 1e-9
    gradient_tolerance: float = 1e-6
    solver: str = "proximal"
    grid: list = field(default_factory=lambda: list(DEFAULT_GRID))
    criterion: str = "bic"
    cv_folds: int = 5
    level: float = 0.95
    seed: int = 0
    threads: int = 1
    output: Optional[str] = None
    format: str = "json"
    model: Optional[str] = None
    scenario: int = 1
    n: int = 500
    replicates: int = 200

    def penalty_spec(self):
        lg = self.lambda_beta if self.lambda_gamma is None else self.lambda_gamma
        return PenaltySpec(
            family=self.family,
            lambda_beta=float(self.lambda_beta),
            lambda_gamma=float(lg),
            alpha=float(self.alpha),
            penalize_intercepts=bool(self.penalize_intercepts),
            scale_by_n=bool(self.scale_by_n),
        )

    def fit_options(self):
        return FitOptions(
            max_iterations=int(self.max_iterations),
            objective_tolerance=float(self.objective_tolerance),
            gradient_tolerance=float(self.gradient_tolerance),
            solver=self.solver,
        )

    def lambda_grid(self):
        return LambdaGrid(tuple(self.grid))

    def x_names(self):
        return ([INTERCEPT] if self.x_intercept else []) + list(self.x_columns)

    def z_names(self):
        return ([INTERCEPT] if self.z_intercept else []) + list(self.z_columns)

    def validate(self):
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format!r}")
        if self.response is not None and (
            self.response in self.x_columns or self.response in self.z_columns
        ):
            raise ConfigError(f"response column {self.response!r} cannot also be a covariate")
        return self


def load_config(path, overrides=None):
    """Read a JSON config file and apply non-None ``overrides`` on top."""
    values = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    return RunConfig(**values).validate()


def _read_table(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise CSVFormatError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise CSVFormatError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if len(rows) == 1:
        raise CSVFormatError(f"{path}: no data rows after the header")
    return header, rows[1:]


def _column(header, body, name, path):
    if name not in header:
        raise CSVFormatError(f"{path}: missing column {name!r}")
    j = header.index(name)
    out = np.empty(len(body))
    for i, row in enumerate(body, start=1):
        cell = row[j].strip() if j < len(row) else ""
        if cell.lower() in MISSING_TOKENS:
            raise CSVFormatError(f"{path}: missing value at row {i}, column {name!r}")
        try:
            out[i - 1] = float(cell)
        except ValueError:
            raise CSVFormatError(f"{path}: non-numeric value {cell!r} at row {i}, column {name!r}") from None
    return out


def _design(header, body, names, intercept, path):
    cols = [_column(header, body, c, path) for c in names]
    if intercept:
        cols.insert(0, np.ones(len(body)))
    if not cols:
        raise CSVFormatError("a design matrix needs at least one column")
    return np.column_stack(cols)


def load_csv(path, config, require_response=True):
    """Build a validated :class:`Dataset` from a headed CSV file.

    Rows in error messages are numbered from 1, not counting the header.
    With ``require_response=False`` (prediction) y is filled with zeros.
    """
    header, body = _read_table(path)
    X = _design(header, body, config.x_columns, config.x_intercept, path)
    Z = _design(header, body, config.z_columns, config.z_intercept, path)
    if require_response:
        if not config.response:
            raise ConfigError("no response column configured")
        y = _column(header, body, config.response, path)
    else:
        y = np.zeros(len(body))
    return validate_dataset((y, X, Z))


@dataclass
class ModelArtifact:
    schema_version: int
    spec: dict
    x_columns: list
    z_columns: list
    x_intercept: bool
    z_intercept: bool
    coefficients: list
    level: float
    log_likelihood: float
    penalty: float
    bic: float
    aic: float
    n_obs: int
    converged: bool
    iterations: int
    residual: float
    message: str
    seed: int
    tool_version: str

    @property
    def parameters(self):
        beta = [c["estimate"] for c in self.coefficients if c["block"] == "beta"]
        gamma = [c["estimate"] for c in self.coefficients if c["block"] == "gamma"]
        return Parameters(np.array(beta), np.array(gamma))


def _opt(value):
    value = float(value)
    return value if math.isfinite(value) else None


def build_artifact(result, config):
    """Package a fit with its Wald inference and the columns it was fit on."""
    se = standard_errors(result)
    ci = wald_intervals(result, config.level, se=se)
    names = [("beta", n) for n in config.x_names()] + [("gamma", n) for n in config.z_names()]
    coefs = []
    for j, (block, name) in enumerate(names):
        coefs.append(
            {
                "block": block,
                "name": name,
                "estimate": float(result.theta[j]),
                "se": _opt(se[j]),
                "ci_lower": _opt(ci[j, 0]),
                "ci_upper": _opt(ci[j, 1]),
            }
        )
    return ModelArtifact(
        schema_version=SCHEMA_VERSION,
        spec=asdict(result.spec),
        x_columns=list(config.x_columns),
        z_columns=list(config.z_columns),
        x_intercept=bool(config.x_intercept),
        z_intercept=bool(config.z_intercept),
        coefficients=coefs,
        level=float(config.level),
        log_likelihood=float(result.log_likelihood_at_solution),
        penalty=float(result.penalty_at_solution),
        bic=float(bic(result)),
        aic=float(aic(result)),
        n_obs=int(result.n_obs),
        converged=bool(result.converged),
        iterations=int(result.iterations),
        residual=float(result.residual),
        message=result.message,
        seed=int(config.seed),
        tool_version=__version__,
    )


def dumps_canonical(obj, indent=2):
    """JSON text with insertion-ordered keys and 17-significant-digit floats."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if o is None or isinstance(o, (bool, str)):
            return json.dumps(o)
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            o = float(o)
            return format(o, ".17g") if math.isfinite(o) else "null"
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(str(k))}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, (list, tuple, np.ndarray)):
            if len(o) == 0:
                return "[]"
            items = [f"{pad}{enc(v, level + 1)}" for v in o]
            return "[\n" + ",\n".join(items) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(obj, 0) + "\n"


def write_text_atomic(path, text):
    """Write via a sibling temp file and rename; no partial file on failure."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_artifact(artifact, path):
    write_text_atomic(path, dumps_canonical(asdict(artifact)))


def load_artifact(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read model artifact {path}: {exc}") from exc
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ArtifactVersionError(
            f"unsupported artifact schema version {version!r} (this build reads {SCHEMA_VERSION})"
        )
    names = {f.name for f in fields(ModelArtifact)}
    if set(raw) != names:
        raise ValidationError(f"artifact fields do not match schema {SCHEMA_VERSION}")
    return ModelArtifact(**raw)


def predict(artifact, data):
    """Per-row event probability, inflation probability and marginal outcome probabilities."""
    theta = artifact.parameters
    probs = mixture_probabilities(theta, data.X, data.Z)
    return {"p": probs.p, "pi": probs.pi, "p_one": probs.p_one, "p_zero": probs.p_zero}


def rows_to_csv(columns, rows):
    """Small CSV writer with the same 17-digit float formatting."""
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, (float, np.floating)):
            return format(float(v), ".17g") if math.isfinite(v) else ""
        return str(v)

    lines = [",".join(columns)]
    lines += [",".join(cell(r.get(c)) for c in columns) for r in rows]
    return "\n".join(lines) + "\n"
