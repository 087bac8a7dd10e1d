"""File formats: density specs, model specs and sample files.

Density and model specifications are TOML key-value files.  A density is
either a built-in family with parameters or a log-pdf expression with an
explicit support; a model file wires a symmetric base density, a skewing
cdf and a skewing argument together.  Samples are CSV, one value per
line, with an optional ``x`` header.
"""

from __future__ import annotations

import math
import re
from typing import List, Mapping, Tuple

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .density import Density, SupportInterval, density_from_expression, make_builtin
from .errors import SpecFileError
from .expressions import compile_expression
from .skewsym import (
    SkewingArgument,
    SkewingCdf,
    SkewSymmetricModel,
    custom_argument,
    identity_argument,
    location_score_argument,
    make_skewing_cdf,
    scale_score_argument,
    skew_t_argument,
)

__all__ = [
    "load_toml",
    "density_from_table",
    "read_density_spec",
    "parse_skewing_name",
    "model_from_table",
    "read_model_spec",
    "read_sample_csv",
]


def load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise SpecFileError(f"{path}: no such file") from exc
    except tomllib.TOMLDecodeError as exc:
        raise SpecFileError(f"{path}: {exc}") from exc


_DENSITY_KEYS = {"family", "params", "log_pdf", "support", "name", "symmetric"}


def density_from_table(table: Mapping, where: str) -> Density:
    """Build a density from a parsed key-value table."""
    unknown = set(table) - _DENSITY_KEYS
    if unknown:
        raise SpecFileError(f"{where}: unknown keys {sorted(unknown)}")
    params = table.get("params", {})
    if not isinstance(params, Mapping):
        raise SpecFileError(f"{where}: 'params' must be a table")
    for key, val in params.items():
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise SpecFileError(f"{where}: parameter {key!r} must be a number")

    if "family" in table:
        if "log_pdf" in table:
            raise SpecFileError(f"{where}: give either 'family' or 'log_pdf', not both")
        try:
            return make_builtin(str(table["family"]), **dict(params))
        except SpecFileError:
            raise
        except Exception as exc:
            raise SpecFileError(f"{where}: {exc}") from exc

    if "log_pdf" not in table:
        raise SpecFileError(f"{where}: a density needs 'family' or 'log_pdf'")
    if "support" not in table:
        raise SpecFileError(f"{where}: an expression density needs 'support'")
    support = table["support"]
    if (
        not isinstance(support, (list, tuple))
        or len(support) != 2
        or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in support)
    ):
        raise SpecFileError(
            f"{where}: 'support' must be a two-element array of numbers "
            "(TOML floats inf and -inf are allowed)"
        )
    name = str(table.get("name", "user"))
    symmetric = table.get("symmetric", False)
    if not isinstance(symmetric, bool):
        raise SpecFileError(f"{where}: 'symmetric' must be a boolean")
    try:
        return density_from_expression(
            name,
            str(table["log_pdf"]),
            SupportInterval(float(support[0]), float(support[1])),
            params=dict(params),
            symmetric=symmetric,
        )
    except SpecFileError:
        raise
    except Exception as exc:
        raise SpecFileError(f"{where}: {exc}") from exc


def read_density_spec(path: str) -> Density:
    return density_from_table(load_toml(path), path)


_STUDENT_NAME = re.compile(r"^student\(\s*([0-9.eE+-]+)\s*\)$")


def parse_skewing_name(name: str) -> SkewingCdf:
    """Accepts normal, logistic, student(nu)."""
    text = name.strip().lower()
    m = _STUDENT_NAME.match(text)
    if m:
        try:
            nu = float(m.group(1))
        except ValueError as exc:
            raise SpecFileError(f"bad skewing cdf name {name!r}") from exc
        return make_skewing_cdf("student", nu=nu)
    return make_skewing_cdf(text)


def _argument_from_table(table: Mapping, where: str) -> SkewingArgument:
    kind = table.get("kind")
    if kind is None:
        raise SpecFileError(f"{where}: argument needs a 'kind'")
    kind = str(kind)
    if kind == "identity":
        return identity_argument()
    if kind in ("location_score", "scale_score"):
        if "p" not in table:
            raise SpecFileError(f"{where}: a {kind} argument needs a 'p' density table")
        p = density_from_table(table["p"], f"{where}.p")
        return location_score_argument(p) if kind == "location_score" else scale_score_argument(p)
    if kind == "skew_t":
        nu = table.get("nu")
        if not isinstance(nu, (int, float)) or isinstance(nu, bool):
            raise SpecFileError(f"{where}: skew_t argument needs a numeric 'nu'")
        return skew_t_argument(float(nu))
    if kind == "custom":
        w_text = table.get("w")
        parity = table.get("parity")
        if not isinstance(w_text, str) or parity not in ("odd", "even"):
            raise SpecFileError(
                f"{where}: a custom argument needs a 'w' expression in z "
                "and a 'parity' of odd or even"
            )
        pts = table.get("exception_points", [])
        if not isinstance(pts, list) or any(
            not isinstance(v, (int, float)) or isinstance(v, bool) for v in pts
        ):
            raise SpecFileError(f"{where}: 'exception_points' must be an array of numbers")
        try:
            w = compile_expression(w_text, variable="z")
            return custom_argument(w, parity, tuple(float(v) for v in pts))
        except SpecFileError:
            raise
        except Exception as exc:
            raise SpecFileError(f"{where}: {exc}") from exc
    raise SpecFileError(
        f"{where}: unknown argument kind {kind!r}; "
        "choose identity, location_score, scale_score, skew_t or custom"
    )


_MODEL_KEYS = {"base", "skewing_cdf", "argument", "mu", "sigma", "delta"}


def model_from_table(table: Mapping, where: str) -> SkewSymmetricModel:
    unknown = set(table) - _MODEL_KEYS
    if unknown:
        raise SpecFileError(f"{where}: unknown keys {sorted(unknown)}")
    if "base" not in table or not isinstance(table["base"], Mapping):
        raise SpecFileError(f"{where}: a model needs a 'base' density table")
    if "argument" not in table or not isinstance(table["argument"], Mapping):
        raise SpecFileError(f"{where}: a model needs an 'argument' table")
    base = density_from_table(table["base"], f"{where}.base")
    cdf = parse_skewing_name(str(table.get("skewing_cdf", "normal")))
    arg = _argument_from_table(table["argument"], f"{where}.argument")
    numbers = {}
    for key, default in (("mu", 0.0), ("sigma", 1.0), ("delta", 0.0)):
        val = table.get(key, default)
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise SpecFileError(f"{where}: {key!r} must be a number")
        numbers[key] = float(val)
    try:
        return SkewSymmetricModel(base=base, skewing_cdf=cdf, arg=arg, **numbers)
    except SpecFileError:
        raise
    except Exception as exc:
        raise SpecFileError(f"{where}: {exc}") from exc


def read_model_spec(path: str) -> SkewSymmetricModel:
    return model_from_table(load_toml(path), path)


def read_sample_csv(path: str) -> List[float]:
    """One numeric value per line; a single leading 'x' header is allowed."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except FileNotFoundError as exc:
        raise SpecFileError(f"{path}: no such file") from exc
    values: List[float] = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        if lineno == 1 and text.lower() == "x":
            continue
        try:
            val = float(text)
        except ValueError as exc:
            raise SpecFileError(f"{path}:{lineno}: not a number: {text!r}") from exc
        if not math.isfinite(val):
            raise SpecFileError(f"{path}:{lineno}: sample values must be finite")
        values.append(val)
    if not values:
        raise SpecFileError(f"{path}: no sample values")
    return values
