"""Command-line front end.

Every analysis is a subcommand writing one JSON (or flattened CSV)
report, either to stdout or to --out.  A TOML config file can supply any
flag; explicit flags win.  Exit codes: 0 success, 1 validation or
precondition failure, 2 numerical failure.  Errors go to stderr as a
one-line JSON object.

`emit-repro` writes a directory of config files, data files and a
manifest that together re-run the package's acceptance checks through
this interface; `run` executes one such config.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .density import (
    Density,
    location_score,
    make_builtin,
    normalization_gap,
    power_density,
    sample,
    scale_score,
    score_deriv,
    score_zero_mean_check,
)
from .errors import (
    InvalidParameter,
    NumericalError,
    SpecFileError,
    ValidationError,
)
from .mle_char import (
    cauchy_additivity_check,
    fit_power_relation,
    solve_location_mle,
    solve_scale_mle,
    verify_characterization,
    witness_opposite_pair,
    witness_pair_grid,
    witness_zero_mean_triple,
)
from .skewsym import (
    SkewSymmetricModel,
    construct_singular_scale_pair,
    scale_score_argument,
    scores_at_symmetry,
    scores_fd_crosscheck,
    singularity_report,
    skew_density,
)
from .specfiles import (
    load_toml,
    parse_skewing_name,
    read_density_spec,
    read_model_spec,
    read_sample_csv,
)
from .stein import (
    OPERATOR_KINDS,
    admissible_bank,
    empirical_discrepancy,
    expected_operator,
)
from .varbounds import SmoothFunction, bound_report

__all__ = [
    "Option",
    "CommandEntry",
    "COMMAND_TABLE",
    "RunConfig",
    "main",
    "emit_reproduction_suite",
    "run_reproduction_suite",
    "evaluate_checks",
]


@dataclass(frozen=True)
class Option:
    """One CLI flag, also addressable as a config-file key."""

    name: str
    kind: str  # str | float | int | bool
    default: Any = None
    help: str = ""
    required: bool = False


@dataclass(frozen=True)
class CommandEntry:
    """A subcommand: its options, handler and the operations it reaches.

    ``operations`` lists dotted module.function names this command
    exercises; the test suite checks the union covers the public API.
    """

    options: Tuple[Option, ...]
    handler: Callable[["RunConfig"], Dict[str, Any]]
    operations: Tuple[str, ...]
    help: str


@dataclass(frozen=True)
class RunConfig:
    command: str
    options: Dict[str, Any]
    base_dir: str = ""


_COMMON = (
    Option("out", "str", None, "write the report to this path instead of stdout"),
    Option("format", "str", "json", "output format: json or csv"),
    Option("config", "str", None, "TOML file supplying any of the flags"),
)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ValidationError(message)


def _resolve_path(cfg: RunConfig, path: Optional[str]) -> Optional[str]:
    if path is None or os.path.isabs(path) or not cfg.base_dir:
        return path
    return os.path.join(cfg.base_dir, path)


def _resolve_density(cfg: RunConfig, text: str) -> Density:
    """A density flag is a spec-file path if one exists, else a family name."""
    joined = _resolve_path(cfg, text)
    for cand in (joined, text):
        if cand is not None and os.path.isfile(cand):
            return read_density_spec(cand)
    return make_builtin(text)


def _require(cfg: RunConfig, name: str) -> Any:
    val = cfg.options.get(name)
    if val is None:
        raise InvalidParameter(f"--{name.replace('_', '-')} is required for {cfg.command}")
    return val


def _handle_score(cfg: RunConfig) -> Dict[str, Any]:
    at = float(_require(cfg, "at"))
    model_path = cfg.options.get("model")
    density_text = cfg.options.get("density")
    if (model_path is None) == (density_text is None):
        raise InvalidParameter("score needs exactly one of --density or --model")
    if model_path is not None:
        if cfg.options.get("power") is not None:
            raise InvalidParameter("--power applies to --density, not --model")
        m = read_model_spec(_resolve_path(cfg, model_path))
        s_mu, s_sigma, s_delta = scores_at_symmetry(m)
        return {
            "model": m.describe(),
            "at": at,
            "density": float(skew_density(m, at)),
            "s_mu": float(s_mu(at)),
            "s_sigma": float(s_sigma(at)),
            "s_delta": float(s_delta(at)),
        }
    d = _resolve_density(cfg, density_text)
    power = cfg.options.get("power")
    if power is not None:
        d = power_density(d, float(power))
    loc = location_score(d, at)
    sc = scale_score(d, at)
    return {
        "density": d.name,
        "at": at,
        "phi": float(loc.phi),
        "psi": float(sc.psi),
        "phi_prime": float(score_deriv(d, at)),
        "normalization_gap": float(normalization_gap(d)),
    }


def _handle_stein_check(cfg: RunConfig) -> Dict[str, Any]:
    d = _resolve_density(cfg, _require(cfg, "density"))
    kind = cfg.options["kind"]
    if kind not in OPERATOR_KINDS:
        raise InvalidParameter(f"kind must be one of {OPERATOR_KINDS}, got {kind!r}")
    tol = float(cfg.options["tol"])
    if tol <= 0.0:
        raise InvalidParameter(f"tol must be positive, got {tol}")
    bank = admissible_bank(d, tol=tol)
    per = [
        {"label": tf.label, "value": float(expected_operator(d, tf, kind))}
        for tf in bank
    ]
    return {
        "density": d.name,
        "kind": kind,
        "admissible": [tf.label for tf in bank],
        "per_function": per,
        "max_abs": max((abs(row["value"]) for row in per), default=0.0),
        "score_mean_gap": float(score_zero_mean_check(d)),
    }


def _handle_stein_gof(cfg: RunConfig) -> Dict[str, Any]:
    d = _resolve_density(cfg, _require(cfg, "density"))
    xs = read_sample_csv(_resolve_path(cfg, _require(cfg, "sample")))
    kind = cfg.options["kind"]
    rep = empirical_discrepancy(d, xs, kind=kind)
    return {
        "target": rep.target,
        "kind": rep.kind,
        "n": rep.n,
        "excluded": rep.excluded,
        "per_function": [{"label": lbl, "value": float(v)} for lbl, v in rep.per_function],
        "max_abs": float(rep.max_abs),
    }


def _handle_varbound(cfg: RunConfig) -> Dict[str, Any]:
    d = _resolve_density(cfg, _require(cfg, "density"))
    sf = SmoothFunction.from_expression(str(cfg.options["g"]))
    rep = bound_report(d, sf)
    bounds: Dict[str, Any] = {}
    for name in ("chernoff", "cacoullos", "sharp"):
        val = getattr(rep, name)
        bounds[name] = float(val) if val is not None else rep.inapplicable.get(name)
    ratios = {k: float(rep.ratios[k]) for k in ("chernoff", "cacoullos", "sharp") if k in rep.ratios}
    return {
        "density": rep.density,
        "g": rep.g_label,
        "variance": float(rep.variance),
        "mean": float(rep.mean),
        "bounds": bounds,
        "ratios": ratios,
    }


def _info_payload(rep) -> Dict[str, Any]:
    info = rep.info
    return {
        "matrix": [float(v) for v in info.matrix.reshape(-1)],
        "eigenvalues": [float(v) for v in info.eigenvalues],
        "rank": int(info.rank_at_tol),
        "singular": bool(rep.singular),
        "collinearity": (
            [float(info.collinearity[0]), float(info.collinearity[1])]
            if info.collinearity is not None
            else None
        ),
    }


def _handle_fisher(cfg: RunConfig) -> Dict[str, Any]:
    m = read_model_spec(_resolve_path(cfg, _require(cfg, "model")))
    rank_tol = float(cfg.options["rank_tol"])
    rep = singularity_report(m, rank_tol)
    payload: Dict[str, Any] = {"model": rep.model}
    payload.update(_info_payload(rep))
    if cfg.options.get("fd_check"):
        payload["fd_crosscheck"] = float(scores_fd_crosscheck(m))
    return payload


def _handle_singular_pair(cfg: RunConfig) -> Dict[str, Any]:
    p = _resolve_density(cfg, _require(cfg, "density"))
    c1 = float(_require(cfg, "c1"))
    c2 = float(_require(cfg, "c2"))
    q = construct_singular_scale_pair(p, c1, c2)
    cdf = parse_skewing_name(str(cfg.options["skewing_cdf"]))
    m = SkewSymmetricModel(base=q, skewing_cdf=cdf, arg=scale_score_argument(p))
    rep = singularity_report(m, float(cfg.options["rank_tol"]))
    payload: Dict[str, Any] = {
        "pair": q.name,
        "c1": c1,
        "c2": c2,
        "skewing_cdf": cdf.name,
    }
    payload.update(_info_payload(rep))
    return payload


def _handle_mle_verify(cfg: RunConfig) -> Dict[str, Any]:
    d = _resolve_density(cfg, _require(cfg, "density"))
    kind = str(_require(cfg, "kind"))
    sample_path = cfg.options.get("sample")
    if sample_path is not None:
        xs = read_sample_csv(_resolve_path(cfg, sample_path))
        if kind == "location":
            sol = solve_location_mle(d, xs)
        elif kind == "scale":
            sol = solve_scale_mle(d, xs)
        else:
            raise InvalidParameter(f"kind must be 'location' or 'scale', got {kind!r}")
        return {
            "density": d.name,
            "kind": kind,
            "estimate": float(sol.estimate),
            "residual": float(sol.residual),
            "iterations": int(sol.iterations),
            "nonuniqueness_interval": (
                [float(sol.nonuniqueness_interval[0]), float(sol.nonuniqueness_interval[1])]
                if sol.nonuniqueness_interval is not None
                else None
            ),
        }
    reference = str(cfg.options["reference"])
    rep = verify_characterization(
        d,
        kind,
        reference,
        n_trials=int(cfg.options["trials"]),
        sample_size=int(cfg.options["size"]),
        seed=int(cfg.options["seed"]),
    )
    return {
        "density": d.name,
        "kind": kind,
        "reference": reference,
        "n_trials": rep.n_trials,
        "sample_size": rep.sample_size,
        "seed": rep.seed,
        "max_abs_gap": float(rep.max_abs_gap),
        "failures": rep.failures,
    }


def _handle_cauchy_check(cfg: RunConfig) -> Dict[str, Any]:
    d = _resolve_density(cfg, _require(cfg, "density"))
    raw = str(cfg.options["values"])
    try:
        values = [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise InvalidParameter(f"--values must be comma-separated numbers, got {raw!r}") from exc
    if not values:
        raise InvalidParameter("--values must contain at least one number")

    def score(x: float) -> float:
        return location_score(d, x).phi

    pairs = witness_pair_grid(values)
    payload: Dict[str, Any] = {
        "density": d.name,
        "values": values,
        "max_defect": float(cauchy_additivity_check(score, pairs)),
    }
    if cfg.options.get("witnesses"):
        triple_worst = 0.0
        for a, b in pairs:
            triple = witness_zero_mean_triple(a, b)
            triple_worst = max(triple_worst, abs(math.fsum(score(x) for x in triple)))
        odd_worst = 0.0
        for a in values:
            pair_sample = witness_opposite_pair(a, 3)
            odd_worst = max(odd_worst, abs(math.fsum(score(x) for x in pair_sample)))
        payload["triple_residual_max"] = triple_worst
        payload["oddness_max"] = odd_worst
    base_text = cfg.options.get("power_base")
    if base_text is not None:
        p = _resolve_density(cfg, base_text)
        c, res = fit_power_relation(d, p)
        payload["power_fit"] = {"base": p.name, "c": float(c), "max_residual": float(res)}
    return payload


def _handle_emit_repro(cfg: RunConfig) -> Dict[str, Any]:
    root = cfg.options.get("out") or "repro"
    files = emit_reproduction_suite(root)
    return {"root": root, "cases": _REPRO_CASE_COUNT, "files": files}


def _handle_run(cfg: RunConfig) -> Dict[str, Any]:
    raise InvalidParameter("run is dispatched in main()")  # pragma: no cover


COMMAND_TABLE: Dict[str, CommandEntry] = {
    "score": CommandEntry(
        options=(
            Option("density", "str", None, "built-in family name or density spec file"),
            Option("model", "str", None, "model spec file (scores at the symmetric point)"),
            Option("at", "float", None, "evaluation point", required=True),
            Option("power", "float", None, "replace the density by its normalized c-th power"),
        ),
        handler=_handle_score,
        operations=(
            "density.make_builtin",
            "density.density_from_expression",
            "density.location_score",
            "density.scale_score",
            "density.score_deriv",
            "density.normalization_gap",
            "density.power_density",
            "density.pdf",
            "density.integrate_density",
            "skewsym.skew_density",
            "skewsym.scores_at_symmetry",
            "specfiles.read_density_spec",
            "specfiles.read_model_spec",
            "specfiles.density_from_table",
            "specfiles.model_from_table",
            "specfiles.load_toml",
            "expressions.compile_expression",
            "numerics.central_diff",
        ),
        help="score functions of a density (or of a model at delta = 0) at a point",
    ),
    "stein-check": CommandEntry(
        options=(
            Option("density", "str", None, "target density", required=True),
            Option("kind", "str", "location", "operator kind: location, exp_unit, exp_scale"),
            Option("tol", "float", 1e-8, "boundary-condition tolerance"),
        ),
        handler=_handle_stein_check,
        operations=(
            "stein.admissible_bank",
            "stein.boundary_condition_check",
            "stein.expected_operator",
            "stein.apply_operator",
            "density.score_zero_mean_check",
            "numerics.integrate",
        ),
        help="zero-mean check of the operator bank under the target",
    ),
    "stein-gof": CommandEntry(
        options=(
            Option("density", "str", None, "target density", required=True),
            Option("sample", "str", None, "CSV sample file", required=True),
            Option("kind", "str", "location", "operator kind"),
        ),
        handler=_handle_stein_gof,
        operations=(
            "stein.empirical_discrepancy",
            "specfiles.read_sample_csv",
        ),
        help="empirical operator means of a sample against a target",
    ),
    "varbound": CommandEntry(
        options=(
            Option("density", "str", None, "target density", required=True),
            Option("g", "str", "x", "expression for the statistic g(x)"),
        ),
        handler=_handle_varbound,
        operations=(
            "varbounds.bound_report",
            "varbounds.variance_of",
            "varbounds.chernoff_bound",
            "varbounds.cacoullos_bound",
            "varbounds.sharp_bound",
            "density.central_region",
        ),
        help="variance of g(X) next to every applicable upper bound",
    ),
    "fisher": CommandEntry(
        options=(
            Option("model", "str", None, "model spec file", required=True),
            Option("rank_tol", "float", 1e-6, "relative eigenvalue cutoff for the rank"),
            Option("fd_check", "bool", False, "cross-check scores by finite differences"),
        ),
        handler=_handle_fisher,
        operations=(
            "skewsym.fisher_info_at_symmetry",
            "skewsym.singularity_report",
            "skewsym.scores_fd_crosscheck",
            "skewsym.make_skewing_cdf",
            "skewsym.identity_argument",
            "skewsym.location_score_argument",
            "skewsym.scale_score_argument",
            "skewsym.skew_t_argument",
            "skewsym.custom_argument",
            "specfiles.parse_skewing_name",
            "density.evaluation_grid",
            "numerics.eig_sym3",
        ),
        help="information matrix of (mu, sigma, delta) at the symmetric point",
    ),
    "singular-pair": CommandEntry(
        options=(
            Option("density", "str", None, "symmetric reference density p", required=True),
            Option("c1", "float", None, "coefficient of psi_p", required=True),
            Option("c2", "float", None, "constant offset", required=True),
            Option("skewing_cdf", "str", "normal", "skewing cdf for the check model"),
            Option("rank_tol", "float", 1e-6, "relative eigenvalue cutoff"),
        ),
        handler=_handle_singular_pair,
        operations=(
            "skewsym.construct_singular_scale_pair",
            "skewsym.singularity_report",
        ),
        help="build the base density with psi_q = c1 psi_p + c2 and show its singular model",
    ),
    "mle-verify": CommandEntry(
        options=(
            Option("density", "str", None, "density whose family is estimated", required=True),
            Option("kind", "str", None, "location or scale", required=True),
            Option("reference", "str", "mean", "reference estimator: mean, median, rms"),
            Option("trials", "int", 100, "Monte Carlo trials"),
            Option("size", "int", 5, "sample size per trial"),
            Option("seed", "int", 0, "base seed; trial t uses seed + t"),
            Option("sample", "str", None, "solve this one CSV sample instead of Monte Carlo"),
        ),
        handler=_handle_mle_verify,
        operations=(
            "mle_char.solve_location_mle",
            "mle_char.solve_scale_mle",
            "mle_char.verify_characterization",
            "density.sample",
            "density.quantile",
            "density.cdf",
            "numerics.find_root",
        ),
        help="score-equation roots vs closed-form estimators",
    ),
    "cauchy-check": CommandEntry(
        options=(
            Option("density", "str", None, "density whose score is tested", required=True),
            Option("values", "str", "-2,-1,1,2", "comma-separated pair-grid values"),
            Option("witnesses", "bool", False, "also evaluate the witness-sample residuals"),
            Option("power_base", "str", None, "fit the score as a multiple of this density's"),
        ),
        handler=_handle_cauchy_check,
        operations=(
            "mle_char.cauchy_additivity_check",
            "mle_char.witness_pair_grid",
            "mle_char.witness_zero_mean_triple",
            "mle_char.witness_opposite_pair",
            "mle_char.fit_power_relation",
        ),
        help="additivity defect of the score, the linear-score functional equation",
    ),
}


# ---------------------------------------------------------------------------
# parsing and dispatch


def _add_command_options(parser: argparse.ArgumentParser, options: Sequence[Option]) -> None:
    for opt in options:
        flag = "--" + opt.name.replace("_", "-")
        if opt.kind == "bool":
            parser.add_argument(
                flag, dest=opt.name, action="store_true", default=argparse.SUPPRESS, help=opt.help
            )
        else:
            typ = {"str": str, "float": float, "int": int}[opt.kind]
            parser.add_argument(
                flag, dest=opt.name, type=typ, default=argparse.SUPPRESS, help=opt.help
            )


def _build_parser() -> _Parser:
    parser = _Parser(prog="scorekit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, entry in COMMAND_TABLE.items():
        p = sub.add_parser(name, help=entry.help)
        _add_command_options(p, _COMMON + entry.options)
    p = sub.add_parser("run", help="execute one config file (its 'command' key picks the analysis)")
    _add_command_options(p, (Option("config", "str", None, "config file", required=True),))
    p = sub.add_parser("emit-repro", help="write the reproduction suite to a directory")
    _add_command_options(p, (Option("out", "str", "repro", "target directory"),))
    return parser


def _coerce_config_value(opt: Option, val: Any, where: str) -> Any:
    ok = {
        "str": lambda v: isinstance(v, str),
        "float": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
        "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "bool": lambda v: isinstance(v, bool),
    }[opt.kind]
    if not ok(val):
        raise SpecFileError(f"{where}: key {opt.name!r} must be a {opt.kind}")
    return float(val) if opt.kind == "float" else val


def _merge_config(command: str, provided: Dict[str, Any]) -> RunConfig:
    entry = COMMAND_TABLE[command]
    options = _COMMON + entry.options
    by_name = {opt.name: opt for opt in options}
    merged = {opt.name: opt.default for opt in options}
    base_dir = ""
    config_path = provided.get("config")
    if config_path is not None:
        table = load_toml(config_path)
        base_dir = os.path.dirname(os.path.abspath(config_path))
        cfg_command = table.pop("command", command)
        if cfg_command != command:
            raise SpecFileError(
                f"{config_path}: config is for command {cfg_command!r}, invoked as {command!r}"
            )
        unknown = set(table) - set(by_name)
        if unknown:
            raise SpecFileError(f"{config_path}: unknown keys {sorted(unknown)}")
        for key, val in table.items():
            merged[key] = _coerce_config_value(by_name[key], val, config_path)
    merged.update(provided)
    for opt in options:
        if opt.required and merged.get(opt.name) is None:
            raise InvalidParameter(
                f"--{opt.name.replace('_', '-')} is required for {command}"
            )
    return RunConfig(command=command, options=merged, base_dir=base_dir)


def _parse(argv: Optional[Sequence[str]]) -> RunConfig:
    ns = _build_parser().parse_args(argv)
    provided = dict(vars(ns))
    command = provided.pop("command")
    if command == "emit-repro":
        return RunConfig(command="emit-repro", options={"out": provided.get("out", "repro")})
    if command == "run":
        config_path = provided.get("config")
        if config_path is None:
            raise InvalidParameter("run needs --config")
        table = load_toml(config_path)
        run_command = table.get("command")
        if run_command not in COMMAND_TABLE:
            raise SpecFileError(
                f"{config_path}: 'command' must name an analysis command, got {run_command!r}"
            )
        return _merge_config(run_command, {"config": config_path})
    return _merge_config(command, provided)


# ---------------------------------------------------------------------------
# rendering


def _flatten(obj: Any, prefix: str, rows: List[Tuple[str, str]]) -> None:
    if isinstance(obj, Mapping):
        for key, val in obj.items():
            _flatten(val, f"{prefix}.{key}" if prefix else str(key), rows)
    elif isinstance(obj, (list, tuple)):
        for idx, val in enumerate(obj):
            _flatten(val, f"{prefix}.{idx}", rows)
    else:
        if obj is None:
            text = ""
        elif isinstance(obj, bool):
            text = "true" if obj else "false"
        elif isinstance(obj, float):
            text = repr(obj)
        else:
            text = str(obj)
        rows.append((prefix, text))


def _render(payload: Dict[str, Any], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2) + "\n"
    if fmt == "csv":
        rows: List[Tuple[str, str]] = []
        _flatten(payload, "", rows)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["key", "value"])
        writer.writerows(rows)
        return buf.getvalue()
    raise InvalidParameter(f"format must be json or csv, got {fmt!r}")


def _write_output(text: str, out_path: Optional[str], base_dir: str) -> None:
    if out_path is None:
        sys.stdout.write(text)
        return
    if not os.path.isabs(out_path) and base_dir:
        out_path = os.path.join(base_dir, out_path)
    parent = os.path.dirname(out_path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _emit_error(exc: Exception) -> None:
    line = json.dumps({"error": type(exc).__name__, "message": str(exc)})
    print(line, file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = _parse(argv)
        if cfg.command == "emit-repro":
            payload = _handle_emit_repro(cfg)
            sys.stdout.write(_render(payload, "json"))
            return 0
        payload = COMMAND_TABLE[cfg.command].handler(cfg)
        text = _render(payload, str(cfg.options.get("format", "json")))
        _write_output(text, cfg.options.get("out"), cfg.base_dir)
        return 0
    except ValidationError as exc:
        _emit_error(exc)
        return 1
    except NumericalError as exc:
        _emit_error(exc)
        return 2


# ---------------------------------------------------------------------------
# reproduction suite


def _repro_cases() -> List[Dict[str, Any]]:
    """Config + expectation for each acceptance check, CLI edition."""

    def case(name: str, criterion: int, config: Dict[str, Any], checks: List[Dict[str, Any]],
             note: str = "") -> Dict[str, Any]:
        entry = {
            "name": name,
            "criterion": criterion,
            "config": f"{name}.toml",
            "output": f"out/{name}.json",
            "checks": checks,
        }
        if note:
            entry["note"] = note
        entry["_config_table"] = config
        return entry

    return [
        case(
            "01-score-normal", 1,
            {"command": "score", "density": "normal", "at": 2.0},
            [
                {"path": "phi", "equals": -2.0, "tol": 1e-12},
                {"path": "psi", "equals": -3.0, "tol": 1e-12},
            ],
        ),
        case(
            "02-score-exponential", 1,
            {"command": "score", "density": "exponential", "at": 0.25},
            [{"path": "psi", "equals": 0.75, "tol": 1e-12}],
        ),
        case(
            "03-stein-normal", 2,
            {"command": "stein-check", "density": "normal"},
            [{"path": "max_abs", "max": 1e-7}],
        ),
        case(
            "04-stein-exp-unit", 2,
            {"command": "stein-check", "density": "exponential", "kind": "exp_unit"},
            [{"path": "max_abs", "max": 1e-7}],
        ),
        case(
            "05-stein-exp-scale", 2,
            {"command": "stein-check", "density": "exponential", "kind": "exp_scale"},
            [{"path": "max_abs", "max": 1e-7}],
        ),
        case(
            "06-gof-normal", 3,
            {"command": "stein-gof", "density": "normal", "sample": "data/normal-seed42.csv"},
            [{"path": "max_abs", "max": 0.05}],
        ),
        case(
            "07-gof-laplace", 3,
            {"command": "stein-gof", "density": "normal", "sample": "data/laplace-seed42.csv"},
            [{"path": "per_function.0.value", "abs_range": [0.9, 1.1]}],
            note="f(x) = x statistic; a unit-variance mismatch shows up as -1",
        ),
        case(
            "08-varbound-normal", 4,
            {"command": "varbound", "density": "normal", "g": "x"},
            [
                {"path": "variance", "equals": 1.0, "tol": 1e-8},
                {"path": "ratios.chernoff", "equals": 1.0, "tol": 1e-8},
                {"path": "bounds.cacoullos", "equals": 1.0, "tol": 5e-8},
            ],
        ),
        case(
            "09-varbound-exponential", 4,
            {"command": "varbound", "density": "exponential", "g": "x"},
            [
                {"path": "variance", "equals": 1.0, "tol": 1e-6},
                {"path": "bounds.cacoullos", "equals": 2.0, "tol": 1e-6},
                {"path": "bounds.sharp", "is_string": True},
            ],
            note="the double-integral bound is finite but loose here; the sharp bound refuses",
        ),
        case(
            "10-varbound-logistic-equality", 5,
            {"command": "varbound", "density": "logistic", "g": "2/(1 + exp(x)) - 1"},
            [{"path": "ratios.sharp", "range": [0.99999, 1.00001]}],
            note="g equals the logistic location score, the equality case",
        ),
        case(
            "11-fisher-skew-normal", 6,
            {"command": "fisher", "model": "models/skew-normal.toml"},
            [
                {"path": "rank", "equals": 2},
                {"path": "singular", "equals": True},
                {"path": "eigenvalues.0", "max": 2e-8},
            ],
        ),
        case(
            "12-fisher-skew-t5", 6,
            {"command": "fisher", "model": "models/skew-t5.toml"},
            [
                {"path": "rank", "equals": 3},
                {"path": "eigenvalues.0", "min": 0.002},
            ],
        ),
        case(
            "13-fisher-skewp-normalF", 6,
            {"command": "fisher", "model": "models/skewp-laplace-normalF.toml"},
            [{"path": "rank", "equals": 2}],
        ),
        case(
            "14-fisher-skewp-logisticF", 6,
            {"command": "fisher", "model": "models/skewp-laplace-logisticF.toml"},
            [{"path": "rank", "equals": 2}],
        ),
        case(
            "15-fisher-skewp-studentF", 6,
            {"command": "fisher", "model": "models/skewp-laplace-studentF.toml"},
            [{"path": "rank", "equals": 2}],
        ),
        case(
            "16-singular-pair", 7,
            {"command": "singular-pair", "density": "normal", "c1": 1.0, "c2": 2.0},
            [
                {"path": "rank", "equals": 2},
                {"path": "collinearity.0", "equals": 1.0, "tol": 0.01},
                {"path": "collinearity.1", "equals": 2.0, "tol": 0.01},
            ],
        ),
        case(
            "17-fisher-scass-negative", 7,
            {"command": "fisher", "model": "models/scass-negative.toml"},
            [{"path": "rank", "equals": 3}],
        ),
        case(
            "18-mle-normal-location", 8,
            {
                "command": "mle-verify", "density": "normal", "kind": "location",
                "reference": "mean", "trials": 100, "size": 5, "seed": 42,
            },
            [
                {"path": "max_abs_gap", "max": 1e-9},
                {"path": "failures", "equals": 0},
            ],
        ),
        case(
            "19-mle-exponential-scale", 8,
            {
                "command": "mle-verify", "density": "exponential", "kind": "scale",
                "reference": "mean", "trials": 100, "size": 5, "seed": 42,
            },
            [{"path": "max_abs_gap", "max": 1e-9}],
        ),
        case(
            "20-mle-normal-scale-rms", 8,
            {
                "command": "mle-verify", "density": "normal", "kind": "scale",
                "reference": "rms", "trials": 100, "size": 5, "seed": 42,
            },
            [{"path": "max_abs_gap", "max": 1e-9}],
        ),
        case(
            "21-mle-logistic-witness", 8,
            {
                "command": "mle-verify", "density": "logistic", "kind": "location",
                "sample": "data/logistic-witness.csv",
            },
            [{"path": "estimate", "equals": 0.839356210330654, "tol": 1e-9}],
            note="sample mean is 1; the root is 0.16 away, the negative control",
        ),
        case(
            "22-cauchy-normal", 8,
            {"command": "cauchy-check", "density": "normal", "witnesses": True},
            [
                {"path": "max_defect", "max": 1e-9},
                {"path": "triple_residual_max", "max": 1e-9},
            ],
        ),
        case(
            "23-cauchy-laplace-witness", 8,
            {"command": "cauchy-check", "density": "laplace", "values": "1"},
            [{"path": "max_defect", "equals": 1.0, "tol": 1e-12}],
        ),
        case(
            "24-power-recovery", 9,
            {
                "command": "cauchy-check", "density": "models/power4.toml",
                "power_base": "normal",
            },
            [{"path": "power_fit.c", "equals": 4.0, "tol": 4e-6}],
            note="density file holds the normalized fourth power of the normal",
        ),
    ]


_REPRO_CASE_COUNT = len(_repro_cases())

_REPRO_MODELS = {
    "skew-normal.toml": (
        '# identity skewing of the normal: the classical rank-2 singularity\n'
        'skewing_cdf = "normal"\n\n[base]\nfamily = "normal"\n\n[argument]\nkind = "identity"\n'
    ),
    "skew-t5.toml": (
        '# full-rank control: the skew-t argument separates the scores\n'
        'skewing_cdf = "student(6)"\n\n[base]\nfamily = "normal"\n\n'
        '[argument]\nkind = "skew_t"\nnu = 5.0\n'
    ),
    "skewp-laplace-normalF.toml": (
        'skewing_cdf = "normal"\n\n[base]\nfamily = "laplace"\n\n'
        '[argument]\nkind = "location_score"\n[argument.p]\nfamily = "laplace"\n'
    ),
    "skewp-laplace-logisticF.toml": (
        'skewing_cdf = "logistic"\n\n[base]\nfamily = "laplace"\n\n'
        '[argument]\nkind = "location_score"\n[argument.p]\nfamily = "laplace"\n'
    ),
    "skewp-laplace-studentF.toml": (
        'skewing_cdf = "student(6)"\n\n[base]\nfamily = "laplace"\n\n'
        '[argument]\nkind = "location_score"\n[argument.p]\nfamily = "laplace"\n'
    ),
    "scass-negative.toml": (
        '# scale-score argument from a different family: no collinearity, rank 3\n'
        'skewing_cdf = "normal"\n\n[base]\nfamily = "logistic"\n\n'
        '[argument]\nkind = "scale_score"\n[argument.p]\nfamily = "normal"\n'
    ),
    "power4.toml": (
        '# log-density of the normalized fourth power of the standard normal\n'
        'name = "normal_power4"\nlog_pdf = "-2 * x^2"\nsupport = [-inf, inf]\nsymmetric = true\n'
    ),
}


def _toml_value(val: Any) -> str:
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, (int, float)):
        return repr(val)
    return '"' + str(val).replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_reproduction_suite(root: str) -> List[str]:
    """Write config files, inputs and a manifest reproducing the
    acceptance checks through the CLI.  Returns the files written,
    relative to root."""
    cases = _repro_cases()
    written: List[str] = []

    def put(rel: str, text: str) -> None:
        path = os.path.join(root, rel)
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(rel)

    for rel, text in _REPRO_MODELS.items():
        put(os.path.join("models", rel), text)

    for family, fname in (("normal", "normal-seed42.csv"), ("laplace", "laplace-seed42.csv")):
        d = make_builtin(family)
        xs = sample(d, 10000, seed=42)
        put(os.path.join("data", fname), "x\n" + "".join(f"{float(v)!r}\n" for v in xs))
    put(os.path.join("data", "logistic-witness.csv"), "x\n0.0\n0.0\n3.0\n")

    manifest_cases = []
    for entry in cases:
        table = dict(entry.pop("_config_table"))
        table["out"] = entry["output"]
        table["format"] = "json"
        lines = [f"{key} = {_toml_value(val)}" for key, val in table.items()]
        put(entry["config"], "\n".join(lines) + "\n")
        manifest_cases.append(entry)

    manifest = {
        "suite": "scorekit acceptance reproduction",
        "determinism": "running every config twice must produce byte-identical outputs",
        "cases": manifest_cases,
    }
    put("manifest.json", json.dumps(manifest, indent=2) + "\n")
    return written


def _lookup(payload: Any, path: str) -> Any:
    cur = payload
    for part in path.split("."):
        if isinstance(cur, Mapping):
            if part not in cur:
                raise KeyError(path)
            cur = cur[part]
        elif isinstance(cur, (list, tuple)):
            cur = cur[int(part)]
        else:
            raise KeyError(path)
    return cur


def evaluate_checks(payload: Dict[str, Any], checks: Sequence[Mapping[str, Any]]) -> List[str]:
    """Failure messages for manifest checks against a report payload."""
    failures: List[str] = []
    for chk in checks:
        path = chk["path"]
        try:
            val = _lookup(payload, path)
        except (KeyError, IndexError, ValueError):
            failures.append(f"{path}: missing from payload")
            continue
        if "is_string" in chk:
            if not isinstance(val, str):
                failures.append(f"{path}: expected a reason string, got {val!r}")
        elif "equals" in chk:
            want = chk["equals"]
            tol = chk.get("tol", 0)
            if isinstance(want, bool) or not isinstance(want, (int, float)):
                if val != want:
                    failures.append(f"{path}: {val!r} != {want!r}")
            elif not isinstance(val, (int, float)) or abs(val - want) > tol:
                failures.append(f"{path}: {val!r} not within {tol} of {want}")
        elif "abs_range" in chk:
            lo, hi = chk["abs_range"]
            if not isinstance(val, (int, float)) or not lo <= abs(val) <= hi:
                failures.append(f"{path}: |{val!r}| outside [{lo}, {hi}]")
        elif "range" in chk:
            lo, hi = chk["range"]
            if not isinstance(val, (int, float)) or not lo <= val <= hi:
                failures.append(f"{path}: {val!r} outside [{lo}, {hi}]")
        elif "max" in chk:
            if not isinstance(val, (int, float)) or not val <= chk["max"]:
                failures.append(f"{path}: {val!r} exceeds {chk['max']}")
        elif "min" in chk:
            if not isinstance(val, (int, float)) or not val >= chk["min"]:
                failures.append(f"{path}: {val!r} below {chk['min']}")
        else:
            failures.append(f"{path}: unknown check {sorted(chk)!r}")
    return failures


def run_reproduction_suite(root: str) -> List[Dict[str, Any]]:
    """Execute every manifest case; returns per-case exit code, output
    bytes and check failures."""
    with open(os.path.join(root, "manifest.json"), "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    results: List[Dict[str, Any]] = []
    for entry in manifest["cases"]:
        code = main(["run", "--config", os.path.join(root, entry["config"])])
        out_path = os.path.join(root, entry["output"])
        data = b""
        failures: List[str] = [f"exit code {code}"] if code != 0 else []
        if os.path.isfile(out_path):
            with open(out_path, "rb") as fh:
                data = fh.read()
            if code == 0:
                failures = evaluate_checks(json.loads(data.decode("utf-8")), entry["checks"])
        elif code == 0:
            failures = ["no output written"]
        results.append(
            {
                "name": entry["name"],
                "criterion": entry["criterion"],
                "exit_code": code,
                "output_bytes": data,
                "failures": failures,
            }
        )
    return results
