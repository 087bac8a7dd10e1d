"""Tiny arithmetic expression language for user-supplied log-densities.

Grammar: binary ``+ - * / ^`` (``**`` is accepted as a synonym for ``^``),
unary minus, the functions ``exp``, ``log``, ``abs``, ``sqrt``, the free
variable ``x``, the constants ``pi`` and ``e``, and any named parameters
supplied at compile time.  Everything else is rejected at parse time.
"""

from __future__ import annotations

import ast
import math
from typing import Callable, Mapping

from .errors import SpecFileError

__all__ = ["compile_expression"]

_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_ALLOWED_UNARY = (ast.USub, ast.UAdd)
_FUNCTIONS = frozenset({"exp", "log", "abs", "sqrt"})
_CONSTANTS = {"pi": math.pi, "e": math.e}


def _safe_exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def _safe_log(v: float) -> float:
    if v > 0.0:
        return math.log(v)
    if v == 0.0:
        return -math.inf
    raise ValueError(f"log of negative value {v!r} in density expression")


def _safe_sqrt(v: float) -> float:
    if v < 0.0:
        raise ValueError(f"sqrt of negative value {v!r} in density expression")
    return math.sqrt(v)


def _validate(node: ast.AST, names: frozenset) -> None:
    if isinstance(node, ast.Expression):
        _validate(node.body, names)
    elif isinstance(node, ast.BinOp):
        if not isinstance(node.op, _ALLOWED_BINOPS):
            raise SpecFileError(f"operator {type(node.op).__name__} not allowed")
        _validate(node.left, names)
        _validate(node.right, names)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, _ALLOWED_UNARY):
            raise SpecFileError(f"unary operator {type(node.op).__name__} not allowed")
        _validate(node.operand, names)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise SpecFileError("only exp, log, abs and sqrt calls are allowed")
        if len(node.args) != 1 or node.keywords:
            raise SpecFileError(f"{node.func.id} takes exactly one positional argument")
        _validate(node.args[0], names)
    elif isinstance(node, ast.Name):
        if node.id not in names:
            raise SpecFileError(f"unknown name {node.id!r} in expression")
    elif isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float)):
            raise SpecFileError(f"literal {node.value!r} not allowed")
    else:
        raise SpecFileError(f"syntax element {type(node).__name__} not allowed")


def compile_expression(
    text: str,
    params: Mapping[str, float] | None = None,
    variable: str = "x",
) -> Callable[[float], float]:
    """Compile an expression string into a scalar function of ``variable``."""
    params = dict(params or {})
    clash = set(params) & (set(_CONSTANTS) | _FUNCTIONS | {variable})
    if clash:
        raise SpecFileError(f"parameter names {sorted(clash)} shadow reserved names")
    source = text.replace("^", "**")
    try:
        tree = ast.parse(source, mode="eval")
    except SyntaxError as exc:
        raise SpecFileError(f"cannot parse expression {text!r}: {exc.msg}") from None
    names = frozenset({variable} | set(_CONSTANTS) | _FUNCTIONS | set(params))
    _validate(tree, names)
    code = compile(tree, "<density expression>", "eval")
    env = {
        "__builtins__": {},
        "exp": _safe_exp,
        "log": _safe_log,
        "abs": abs,
        "sqrt": _safe_sqrt,
        **_CONSTANTS,
        **params,
    }

    def fn(x: float) -> float:
        return float(eval(code, env, {variable: x}))  # noqa: S307 - AST is whitelisted above

    return fn
