"""Command-line entry point: ``matchforge <command> --config <file> [--out <file>]``.

Config files are flat ``key=value`` lines; ``#`` starts a comment and vectors
are comma-separated.  Exit codes: 0 success, 1 usage or config error,
2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass, field

import numpy as np

from .core import MatchedPairs, Sample
from .encoders import ALIASES, BUILDERS, build_encoder
from .errors import (
    BadCell,
    ConfigError,
    DataIOError,
    MatchForgeError,
    MissingRequired,
    ParseError,
    SchemaError,
    UnknownKey,
    UnknownScenario,
)
from .matcher import apply_caliper, greedy_match
from .runner import DEFAULT_METHODS, ConfoundingResult, SweepResult, run_confounding_experiment, run_pruning_sweep
from .scenarios import ATT_REGIONS, ScenarioSpec, builtin_scenario, gen_king_nielson
from .seeding import derive_seed
from .theory import BiasCheckReport, TheoremCheckReport, run_theorem_checks

log = logging.getLogger(__name__)

COMMANDS = ("match", "sweep", "confounding", "theorem-check", "scenario-dump")

SWEEP_HEADER = ("method", "pairs_pruned", "units_pruned", "mean_estimate", "spec_variance", "mse", "runs")
MATCH_HEADER = ("treated_index", "control_index", "distance")
THEOREM_HEADER = ("check", "formula", "monte_carlo", "mc_se", "replications", "pass")
CONFOUNDING_HEADER = ("arm", "lo", "hi", "used", "dropped")

TREATMENT, OUTCOME = "treatment", "outcome"

_INT_KEYS = {"runs", "seed", "n", "replications", "p", "n_control", "n_treated"}
_FLOAT_KEYS = {"caliper", "level", "beta0", "gamma0", "sigma"}
_VECTOR_KEYS = {"eta", "beta", "gamma"}
_INLINE_KEYS = {"p", "eta", "beta", "gamma", "beta0", "gamma0", "sigma", "n_control", "n_treated", "att_region"}
KNOWN_KEYS = (
    {"command", "scenario", "methods", "method", "prune_grid", "input_path", "output_path"}
    | _INT_KEYS
    | _FLOAT_KEYS
    | _VECTOR_KEYS
    | _INLINE_KEYS
)

# keys each command cannot run without
_REQUIRED = {
    "match": ("seed", "input_path"),
    "sweep": ("seed", "scenario"),
    "confounding": ("seed",),
    "theorem-check": ("seed",),
    "scenario-dump": ("seed", "scenario"),
}


@dataclass(frozen=True, eq=False)
class RunConfig:
    command: str
    seed: int | None = None
    scenario: ScenarioSpec | None = None
    methods: tuple = DEFAULT_METHODS
    method: str = "mahalanobis"
    runs: int | None = None
    prune_grid: tuple = (0,)
    n: int = 200
    replications: int = 100_000
    level: float = 0.95
    caliper: float | None = None
    input_path: str | None = None
    output_path: str | None = None
    raw: dict = field(default_factory=dict)


def _split_lines(text):
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {line!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("empty key", line=lineno)
        yield lineno, key, value


def _convert(key, value, lineno):
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _VECTOR_KEYS:
            return np.array([float(v) for v in value.split(",")])
        if key == "prune_grid":
            return tuple(int(v) for v in value.split(","))
        if key == "methods":
            return tuple(v.strip() for v in value.split(","))
    except ValueError:
        raise ParseError(f"bad value {value!r} for {key}", line=lineno, key=key) from None
    return value


def _check_method(name, key, lineno):
    if ALIASES.get(name, name) not in BUILDERS:
        raise ConfigError(f"unknown encoder {name!r}", line=lineno, key=key)
    return ALIASES.get(name, name)


def _scenario(values, lines):
    inline = {k: values[k] for k in _INLINE_KEYS if k in values}
    if "scenario" in values:
        ref = values["scenario"]
        if ref != "inline":
            if inline:
                key = min(inline, key=lines.get)
                raise ConfigError(f"{key} only applies to scenario=inline", line=lines[key], key=key)
            try:
                number = int(ref)
            except ValueError:
                raise UnknownScenario(f"scenario {ref!r} is neither 1-9 nor inline", lines["scenario"], "scenario") from None
            try:
                return builtin_scenario(number)
            except KeyError:
                raise UnknownScenario(f"no builtin scenario {number}; choose 1-9", lines["scenario"], "scenario") from None
    elif not inline:
        return None
    for key in ("p", "eta", "beta", "gamma0"):
        if key not in inline:
            raise MissingRequired(f"inline scenario needs {key}", key=key)
    p = inline["p"]
    for key in ("eta", "beta", "gamma"):
        if key in inline and inline[key].size != p:
            raise ConfigError(f"{key} has {inline[key].size} entries but p={p}", line=lines[key], key=key)
    if inline.get("att_region", "common_support") not in ATT_REGIONS:
        raise ConfigError(f"att_region must be one of {ATT_REGIONS}", line=lines["att_region"], key="att_region")
    try:
        return ScenarioSpec(name="inline", **inline)
    except ValueError as exc:
        raise ConfigError(f"invalid inline scenario: {exc}", key="scenario") from None


def parse_config(text: str, command: str | None = None) -> RunConfig:
    """Parse a flat key=value config into a RunConfig.

    ``command`` (from the command line) fills in or must agree with the
    ``command`` key.
    """
    values, lines = {}, {}
    for lineno, key, value in _split_lines(text):
        if key not in KNOWN_KEYS:
            raise UnknownKey(f"unknown key {key!r}", line=lineno, key=key)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", line=lineno, key=key)
        values[key] = _convert(key, value, lineno)
        lines[key] = lineno

    scenario = _scenario(values, lines)

    if command is not None and "command" in values and values["command"] != command:
        raise ConfigError(
            f"config says command={values['command']} but {command} was requested", lines["command"], "command"
        )
    cmd = command or values.get("command")
    if cmd is None:
        raise MissingRequired("command is required", key="command")
    if cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}",
                          lines.get("command"), "command")
    for key in _REQUIRED[cmd]:
        if key == "scenario" and scenario is not None:
            continue
        if key not in values:
            raise MissingRequired(f"{cmd} requires {key}", key=key)

    methods = tuple(_check_method(m, "methods", lines.get("methods")) for m in values.get("methods", DEFAULT_METHODS))
    method = _check_method(values.get("method", "mahalanobis"), "method", lines.get("method"))
    grid = values.get("prune_grid", (0,))
    if any(k < 0 for k in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("prune_grid must be non-negative and strictly increasing", lines.get("prune_grid"), "prune_grid")
    for key, low in (("runs", 1), ("n", 10), ("replications", 2)):
        if key in values and values[key] < low:
            raise ConfigError(f"{key} must be at least {low}", lines[key], key)
    if "level" in values and not 0 < values["level"] < 1:
        raise ConfigError("level must lie in (0, 1)", lines["level"], "level")
    if "caliper" in values and values["caliper"] < 0:
        raise ConfigError("caliper must be non-negative", lines["caliper"], "caliper")

    return RunConfig(
        command=cmd,
        seed=values.get("seed"),
        scenario=scenario,
        methods=methods,
        method=method,
        runs=values.get("runs"),
        prune_grid=grid,
        n=values.get("n", 200),
        replications=values.get("replications", 100_000),
        level=values.get("level", 0.95),
        caliper=values.get("caliper"),
        input_path=values.get("input_path"),
        output_path=values.get("output_path"),
        raw=values,
    )


def ingest_csv(path) -> Sample:
    """Read a sample from CSV: ``treatment`` and ``outcome`` columns, every other column a covariate.

    ``BadCell.row`` is the 1-based line number in the file (the header is line 1).
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows or not any(c.strip() for c in rows[0]):
        raise SchemaError(f"{path}: missing header row")
    header = [c.strip() for c in rows[0]]
    for col in (TREATMENT, OUTCOME):
        if col not in header:
            raise SchemaError(f"{path}: missing required column {col!r}")
    if len(set(header)) != len(header):
        raise SchemaError(f"{path}: duplicate column names")

    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise SchemaError(f"{path}: line {lineno} has {len(row)} cells, header has {len(header)}")
        vals = []
        for name, cell in zip(header, row):
            try:
                v = float(cell)
            except ValueError:
                raise BadCell(lineno, name, cell) from None
            if not np.isfinite(v):
                raise BadCell(lineno, name, cell)
            vals.append(v)
        data.append(vals)
    if not data:
        raise SchemaError(f"{path}: no data rows")

    M = np.array(data)
    cov_cols = [j for j, c in enumerate(header) if c not in (TREATMENT, OUTCOME)]
    if not cov_cols:
        raise SchemaError(f"{path}: no covariate columns")
    return Sample(
        M[:, cov_cols],
        M[:, header.index(TREATMENT)],
        M[:, header.index(OUTCOME)],
        tuple(header[j] for j in cov_cols),
    )


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def _rows(result):
    if isinstance(result, SweepResult):
        return SWEEP_HEADER, [
            (r.method, r.pairs_pruned, r.units_pruned, r.mean_estimate, r.spec_variance, r.mse, r.runs)
            for r in result.rows
        ]
    if isinstance(result, MatchedPairs):
        return MATCH_HEADER, [(int(i), int(j), float(d)) for i, j, d in result]
    if isinstance(result, ConfoundingResult):
        du, dm = result.dropped
        return CONFOUNDING_HEADER, [
            ("unmatched", *result.unmatched, result.unmatched_used, du),
            ("matched", *result.matched, result.matched_used, dm),
        ]
    if isinstance(result, Sample):
        header = (*result.column_names, TREATMENT, OUTCOME)
        rows = [(*x, int(t), y) for x, t, y in zip(result.covariates, result.treatment, result.outcome)]
        return header, rows
    if isinstance(result, (list, tuple)):
        return THEOREM_HEADER, [_theorem_row(name, rep) for name, rep in result]
    raise TypeError(f"cannot emit {type(result).__name__}")


def _theorem_row(name, rep):
    if isinstance(rep, TheoremCheckReport):
        return name, rep.formula_value, rep.monte_carlo_value, rep.mc_standard_error, rep.replications, rep.passed
    if isinstance(rep, BiasCheckReport):
        # formula / monte_carlo carry the predicted and estimated bias norms
        return (name, float(np.linalg.norm(rep.predicted_bias)), float(np.linalg.norm(rep.estimated_bias)),
                float(np.linalg.norm(rep.standard_errors)), rep.n, rep.passed)
    raise TypeError(f"unknown report type {type(rep).__name__}")


def format_results(result) -> str:
    header, rows = _rows(result)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def emit_results(result, path) -> None:
    """Write ``result`` as CSV (UTF-8, LF line endings); ``path=None`` writes to stdout."""
    text = format_results(result)
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


def execute(cfg: RunConfig):
    """Run the configured command and return the result object to emit."""
    if cfg.command == "sweep":
        return run_pruning_sweep(cfg.scenario, cfg.methods, cfg.runs or 100, cfg.prune_grid, cfg.seed)
    if cfg.command == "match":
        sample = ingest_csv(cfg.input_path)
        encoder = build_encoder(cfg.method, sample)
        pairs = greedy_match(sample, encoder, derive_seed(cfg.seed))
        return pairs if cfg.caliper is None else apply_caliper(pairs, cfg.caliper)
    if cfg.command == "confounding":
        return run_confounding_experiment(cfg.n, cfg.runs or 1000, cfg.seed, cfg.level)
    if cfg.command == "theorem-check":
        return run_theorem_checks(cfg.replications, cfg.seed, bias_n=cfg.replications)
    if cfg.command == "scenario-dump":
        sample, _ = gen_king_nielson(cfg.scenario, derive_seed(cfg.seed))
        return sample
    raise ConfigError(f"unknown command {cfg.command!r}")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parser():
    ap = _Parser(prog="matchforge", description="Balancing-score matching experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="flat key=value config file")
    ap.add_argument("--out", help="output CSV (default: output_path from the config, else stdout)")
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _parser().parse_args(argv)
    except _UsageError as exc:
        print(f"matchforge: usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        cfg = parse_config(text, args.command)
    except OSError as exc:
        print(f"matchforge: cannot read config {args.config}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"matchforge: {args.config}: {exc}", file=sys.stderr)
        return 1

    try:
        emit_results(execute(cfg), args.out or cfg.output_path)
    except (MatchForgeError, OSError) as exc:
        print(f"matchforge: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0
