"""Tiny arithmetic grammar for analytic inputs in config files.

Supported: numbers, ``x``, ``y``, ``pi``, ``+ - * /``, ``^`` (power, ``**`` also
accepted), unary minus, parentheses and the functions ``sin cos exp ln min max``.
Expressions are parsed with :mod:`ast` and only whitelisted nodes are allowed.
"""

from __future__ import annotations

import ast
import functools

import numpy as np

from .errors import ValidationError

_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "ln": np.log,
    "min": np.minimum,
    "max": np.maximum,
}
_NAMES = {"x", "y", "pi"}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


class ExpressionError(ValidationError):
    pass


@functools.lru_cache(maxsize=256)
def parse(text: str) -> ast.Expression:
    src = str(text).replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse expression {text!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if isinstance(node, (ast.Expression, ast.Load, ast.operator, ast.unaryop)):
            if isinstance(node, ast.operator) and type(node) not in _BINOPS:
                raise ExpressionError(f"operator {type(node).__name__} not allowed in {text!r}")
            if isinstance(node, ast.unaryop) and not isinstance(node, (ast.USub, ast.UAdd)):
                raise ExpressionError(f"operator {type(node).__name__} not allowed in {text!r}")
            continue
        if isinstance(node, (ast.BinOp, ast.UnaryOp)):
            continue
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            continue
        if isinstance(node, ast.Name) and (node.id in _NAMES or node.id in _FUNCS):
            continue
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and not node.keywords:
            continue
        raise ExpressionError(f"unsupported syntax in expression {text!r}")
    return tree


def _eval(node, x, y):
    if isinstance(node, ast.Expression):
        return _eval(node.body, x, y)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        if node.id == "x":
            return x
        if node.id == "y":
            return y
        if node.id == "pi":
            return np.pi
        raise ExpressionError(f"function {node.id!r} used as a value")
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, x, y)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, x, y), _eval(node.right, x, y))
    if isinstance(node, ast.Call):
        fn = node.func.id
        args = [_eval(a, x, y) for a in node.args]
        if fn in ("min", "max"):
            if len(args) < 2:
                raise ExpressionError(f"{fn} needs at least two arguments")
            return functools.reduce(_FUNCS[fn], args)
        if len(args) != 1:
            raise ExpressionError(f"{fn} takes exactly one argument")
        return _FUNCS[fn](args[0])
    raise ExpressionError("unsupported node")  # unreachable after parse()


def evaluate(text, x, y) -> np.ndarray:
    """Evaluate an expression (or a plain number) on coordinate arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        out = np.full(np.broadcast(x, y).shape, float(text))
    else:
        with np.errstate(all="ignore"):
            out = np.broadcast_to(_eval(parse(str(text)), x, y), np.broadcast(x, y).shape)
        out = np.array(out, dtype=float)
    if not np.all(np.isfinite(out)):
        raise ExpressionError(f"expression {text!r} is not finite on the grid")
    return out


def function(text):
    """Return ``f(x, y)`` for an expression, validating it up front."""
    if not isinstance(text, (int, float)) or isinstance(text, bool):
        parse(str(text))
    return lambda x, y: evaluate(text, x, y)
