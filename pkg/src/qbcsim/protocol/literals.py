"""Safe evaluation of numeric literals such as ``[[1, 0], [0, exp(i*pi/4)]]``."""

from __future__ import annotations

import ast
import cmath
import math
import operator

import numpy as np

_NAMES = {"pi": math.pi, "e": math.e, "i": 1j, "j": 1j}
_FUNCS = {
    "sqrt": cmath.sqrt,
    "exp": cmath.exp,
    "cos": cmath.cos,
    "sin": cmath.sin,
    "conj": lambda z: complex(z).conjugate(),
}
_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


class LiteralError(ValueError):
    pass


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.List):
        return [_eval(x) for x in node.elts]
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval(node.operand))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and not node.keywords:
        return _FUNCS[node.func.id](*(_eval(a) for a in node.args))
    raise LiteralError(f"unsupported expression {ast.dump(node)[:60]}")


def evaluate(text: str):
    """Evaluate a number or nested list of numbers; returns a complex scalar or ndarray."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise LiteralError(f"malformed literal: {exc.msg}") from None
    try:
        value = _eval(tree)
    except ZeroDivisionError:
        raise LiteralError("division by zero in literal") from None
    if isinstance(value, list):
        try:
            return np.array(value, dtype=complex)
        except ValueError:
            raise LiteralError("ragged matrix literal") from None
    return complex(value)
