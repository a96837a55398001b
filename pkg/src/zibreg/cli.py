"""
Command-line interface: ``zibreg fit|select|simulate|predict``.

Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure
(including a fit that did not converge). Every option can also come from a
JSON ``--config`` file; flags given on the command line win.
"""

import argparse
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .exceptions import NumericalFailure, StudyError, ValidationError
from .io import (
    ConfigError,
    build_artifact,
    dumps_canonical,
    load_artifact,
    load_config,
    load_csv,
    predict,
    rows_to_csv,
    save_artifact,
    write_text_atomic,
)
from .optimizer import fit
from .selection import cross_validate, lambda_path
from .simulation import SCENARIOS, run_study

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _columns(text):
    return None if text is None else [c.strip() for c in text.split(",") if c.strip()]


def _add_common(p):
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--output", "-o", help="output path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"))


def _add_data(p, response=True):
    p.add_argument("--input", "-i", help="CSV file with a header row")
    if response:
        p.add_argument("--response", "-y")
    p.add_argument("--x", dest="x_columns", type=_columns, help="comma-separated event-model columns")
    p.add_argument("--z", dest="z_columns", type=_columns, help="comma-separated zero-inflation columns")
    p.add_argument("--x-intercept", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--z-intercept", action=argparse.BooleanOptionalAction, default=None)


def _add_penalty(p, lam=True):
    p.add_argument("--method", "--family", dest="family", choices=("lasso", "ridge", "elastic_net"))
    if lam:
        p.add_argument("--lambda", dest="lambda_beta", type=float)
        p.add_argument("--lambda-gamma", type=float)
    p.add_argument("--alpha", type=float, help="L1 share for elastic net")
    p.add_argument("--penalize-intercepts", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--scale-by-n", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--objective-tolerance", type=float)
    p.add_argument("--gradient-tolerance", type=float)
    p.add_argument("--solver", choices=("proximal", "newton"))


def build_parser():
    parser = _Parser(prog="zibreg", description="Penalized zero-inflated Bernoulli regression.")
    parser.add_argument("--version", action="version", version=f"zibreg {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("fit", help="fit one model and write a model artifact")
    _add_data(p)
    _add_penalty(p)
    p.add_argument("--level", type=float, help="Wald interval level")
    _add_common(p)

    p = sub.add_parser("select", help="fit a lambda path and choose lambda")
    _add_data(p)
    _add_penalty(p, lam=False)
    p.add_argument("--criterion", choices=("bic", "aic", "cv"))
    p.add_argument("--grid", type=lambda s: [float(v) for v in _columns(s)], help="comma-separated lambdas")
    p.add_argument("--folds", dest="cv_folds", type=int)
    p.add_argument("--level", type=float)
    _add_common(p)

    p = sub.add_parser("simulate", help="Monte Carlo study on a built-in scenario")
    p.add_argument("--scenario", type=int, choices=sorted(SCENARIOS))
    p.add_argument("--n", type=int)
    p.add_argument("--N", dest="replicates", type=int)
    _add_penalty(p)
    p.add_argument("--level", type=float)
    _add_common(p)

    p = sub.add_parser("predict", help="per-row probabilities from a model artifact")
    p.add_argument("--model", "-m", help="artifact written by `zibreg fit`")
    p.add_argument("--input", "-i", help="CSV with the artifact's covariate columns")
    _add_common(p)
    return parser


_NOT_CONFIG = {"command", "config"}


def _config(args):
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    return load_config(args.config, overrides)


def _emit(text, path):
    if path:
        write_text_atomic(path, text)
    else:
        sys.stdout.write(text)


def _require(config, *names):
    missing = [n for n in names if not getattr(config, n)]
    if missing:
        raise ConfigError("missing required setting(s): " + ", ".join(missing))


def cmd_fit(config):
    _require(config, "input", "response")
    data = load_csv(config.input, config)
    result = fit(data, config.penalty_spec(), config.fit_options())
    artifact = build_artifact(result, config)
    if config.output:
        save_artifact(artifact, config.output)
    else:
        sys.stdout.write(dumps_canonical(asdict(artifact)))
    if not result.converged:
        raise NumericalFailure(f"fit did not converge: {result.message}")


def cmd_select(config):
    _require(config, "input", "response")
    data = load_csv(config.input, config)
    template = config.penalty_spec()
    grid, options = config.lambda_grid(), config.fit_options()
    if config.criterion == "cv":
        path = cross_validate(data, template, grid, k=config.cv_folds, seed=config.seed, options=options)
    else:
        path = lambda_path(data, template, grid, options, criterion=config.criterion)
    table = path.table()
    if config.format == "csv":
        cols = list(table[0])
        _emit(rows_to_csv(cols, table), config.output)
        return
    report = {
        "criterion": path.criterion,
        "selected_lambda": path.selected_lambda,
        "selected_index": path.selected_index,
        "path": table,
        "model": asdict(build_artifact(path.selected_result, config)),
    }
    _emit(dumps_canonical(report), config.output)


def cmd_simulate(config):
    scenario = SCENARIOS.get(config.scenario)
    if scenario is None:
        raise ConfigError(f"unknown scenario {config.scenario!r}")
    report = run_study(
        scenario,
        config.n,
        config.replicates,
        config.penalty_spec(),
        config.fit_options(),
        seed=config.seed,
        threads=config.threads,
        level=config.level,
    )
    _emit(report.to_csv() if config.format == "csv" else report.to_json(), config.output)


def cmd_predict(config):
    _require(config, "model", "input")
    artifact = load_artifact(config.model)
    config.x_columns, config.z_columns = artifact.x_columns, artifact.z_columns
    config.x_intercept, config.z_intercept = artifact.x_intercept, artifact.z_intercept
    data = load_csv(config.input, config, require_response=False)
    out = predict(artifact, data)
    cols = ["row", "p", "pi", "p_one", "p_zero"]
    rows = [{"row": i + 1, **{k: float(out[k][i]) for k in cols[1:]}} for i in range(data.n)]
    if config.format == "csv":
        _emit(rows_to_csv(cols, rows), config.output)
    else:
        _emit(dumps_canonical({"n": data.n, "mean_p_one": float(np.mean(out["p_one"])), "rows": rows}), config.output)


COMMANDS = {"fit": cmd_fit, "select": cmd_select, "simulate": cmd_simulate, "predict": cmd_predict}


def run_cli(argv=None):
    """Run one CLI invocation and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc) + "\n")
        return EXIT_INVALID
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        COMMANDS[args.command](_config(args))
    except ValidationError as exc:
        sys.stderr.write(f"zibreg: error: {exc}\n")
        return EXIT_INVALID
    except (NumericalFailure, StudyError) as exc:
        sys.stderr.write(f"zibreg: numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    return EXIT_OK


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
