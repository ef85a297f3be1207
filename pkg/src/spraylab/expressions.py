"""Safe closed-form scalar expressions of the base coordinates.

Volume densities, conformal exponents, and volume-change functions are
entered as strings like ``"exp(x1) * (1 + 0.2*x2^2)"``.  They are parsed
once into a small AST-backed evaluator that accepts either floats or
jets for ``x1..xn``, so the same definition serves plain evaluation and
differentiation under the integral.
"""

from __future__ import annotations

import ast
import math

import numpy as np

from . import jets
from .errors import ConfigError

_FUNCTIONS = {
    "exp": (np.exp, jets.exp),
    "log": (np.log, jets.log),
    "sqrt": (np.sqrt, jets.sqrt),
    "sin": (np.sin, jets.sin),
    "cos": (np.cos, jets.cos),
}

_CONSTANTS = {"pi": math.pi, "e": math.e}

_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
}


class ScalarField:
    """Closed-form function of x, callable on floats or jets."""

    def __init__(self, expr: str, nvars: int):
        self.expr = expr
        self.nvars = nvars
        try:
            tree = ast.parse(expr.replace("^", "**"), mode="eval")
        except SyntaxError as err:
            raise ConfigError(f"cannot parse expression {expr!r}: {err.msg}") from None
        self._tree = tree.body
        self._validate(self._tree)

    def __call__(self, xs):
        xs = list(xs)
        if len(xs) != self.nvars:
            raise ValueError(f"expected {self.nvars} coordinates, got {len(xs)}")
        return self._eval(self._tree, xs)

    def __repr__(self):
        return f"ScalarField({self.expr!r}, nvars={self.nvars})"

    def _validate(self, node):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)):
                raise ConfigError(f"non-numeric literal {node.value!r}")
        elif isinstance(node, ast.Name):
            if node.id not in _CONSTANTS and self._slot(node.id) is None:
                raise ConfigError(
                    f"unknown name {node.id!r}; use x1..x{self.nvars}, pi, e"
                )
        elif isinstance(node, ast.BinOp):
            if not isinstance(node.op, (*_BINOPS, ast.Pow)):
                raise ConfigError("unsupported operator")
            self._validate(node.left)
            self._validate(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
            self._validate(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
                raise ConfigError("only exp, log, sqrt, sin, cos calls are allowed")
            if len(node.args) != 1 or node.keywords:
                raise ConfigError(f"{node.func.id} takes exactly one argument")
            self._validate(node.args[0])
        else:
            raise ConfigError(f"unsupported syntax in expression: {ast.dump(node)}")

    def _slot(self, name: str):
        if name.startswith("x") and name[1:].isdigit():
            i = int(name[1:]) - 1
            if 0 <= i < self.nvars:
                return i
        return None

    def _eval(self, node, xs):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in _CONSTANTS:
                return _CONSTANTS[node.id]
            return xs[self._slot(node.id)]
        if isinstance(node, ast.BinOp):
            left = self._eval(node.left, xs)
            right = self._eval(node.right, xs)
            if isinstance(node.op, ast.Pow):
                return self._pow(left, right)
            return _BINOPS[type(node.op)](left, right)
        if isinstance(node, ast.UnaryOp):
            operand = self._eval(node.operand, xs)
            return -operand if isinstance(node.op, ast.USub) else operand
        if isinstance(node, ast.Call):
            arg = self._eval(node.args[0], xs)
            plain, jetted = _FUNCTIONS[node.func.id]
            return jetted(arg) if isinstance(arg, jets.Jet) else plain(arg)
        raise AssertionError("unreachable: expression was validated")

    @staticmethod
    def _pow(base, exponent):
        if isinstance(exponent, jets.Jet):
            raise ConfigError("exponents must be constants")
        if isinstance(base, jets.Jet):
            return base ** (int(exponent) if float(exponent).is_integer() else exponent)
        return base**exponent


def parse_scalar(expr: str, nvars: int) -> ScalarField:
    return ScalarField(expr, nvars)


def as_field(spec, nvars: int) -> ScalarField | None:
    """Accept a ScalarField, an expression string, or None."""
    if spec is None or isinstance(spec, ScalarField):
        return spec
    if isinstance(spec, str):
        return ScalarField(spec, nvars)
    raise ConfigError(f"expected an expression string, got {type(spec).__name__}")
