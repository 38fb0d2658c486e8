"""Small arithmetic-expression language for coefficients and custom nonlinearities.

Grammar (whitespace ignored)::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := ("+" | "-") factor | atom (("**" | "^") factor)?
    atom   := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"

NAME is one of the variables the caller allows (``x``, ``y``, ``t`` for
coefficients; ``x1``..``xd`` for nonlinearities) or the constants ``pi``, ``e``
and ``L``. FUNC is one of sin, cos, tan, exp, log, sqrt, tanh, sinh, cosh, abs, sign.
Expressions are parsed with sympy, so exact derivatives are available.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

FUNCTIONS = {
    "sin": sp.sin, "cos": sp.cos, "tan": sp.tan, "exp": sp.exp, "log": sp.log,
    "sqrt": sp.sqrt, "tanh": sp.tanh, "sinh": sp.sinh, "cosh": sp.cosh, "abs": sp.Abs,
    "sign": sp.sign,
}
_TOKEN = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_ALLOWED_CHARS = re.compile(r"^[0-9A-Za-z_+\-*/^().\s]*$")


class ExpressionError(ValueError):
    pass


@dataclass(frozen=True)
class Expression:
    source: str
    variables: tuple[str, ...]
    constants: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self._bind(_parse(self.source, self.variables, self.constants))

    def _bind(self, expr: sp.Expr) -> None:
        syms = [sp.Symbol(v, real=True) for v in self.variables]
        object.__setattr__(self, "_expr", expr)
        object.__setattr__(self, "_fn", sp.lambdify(syms, expr, modules="numpy"))

    @property
    def sympy(self) -> sp.Expr:
        return self._expr

    def __call__(self, *args):
        out = self._fn(*args)
        shape = np.broadcast(*[np.asarray(a) for a in args]).shape if args else ()
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def diff(self, var: str) -> "Expression":
        d = sp.diff(self._expr, sp.Symbol(var, real=True))
        # derivatives may leave the grammar (e.g. sign), so bypass the parser
        out = object.__new__(Expression)
        object.__setattr__(out, "source", sp.sstr(d))
        object.__setattr__(out, "variables", self.variables)
        object.__setattr__(out, "constants", dict(self.constants))
        out._bind(d)
        return out

    def is_constant(self) -> bool:
        return not self._expr.free_symbols


def _parse(source: str, variables, constants) -> sp.Expr:
    if not isinstance(source, str) or not source.strip():
        raise ExpressionError("expression must be a nonempty string")
    if not _ALLOWED_CHARS.match(source) or "__" in source:
        raise ExpressionError(f"illegal characters in expression {source!r}")
    names = {v: sp.Symbol(v, real=True) for v in variables}
    names.update({"pi": sp.pi, "e": sp.E})
    for k, v in constants.items():
        names[k] = sp.Float(v)
    for tok in _TOKEN.findall(source):
        if tok not in names and tok not in FUNCTIONS:
            raise ExpressionError(f"unknown name {tok!r} in {source!r}; allowed: "
                                  f"{sorted(names) + sorted(FUNCTIONS)}")
    local = dict(names)
    local.update(FUNCTIONS)
    try:
        expr = parse_expr(source, local_dict=local, global_dict={"Integer": sp.Integer,
                          "Float": sp.Float, "Rational": sp.Rational, "Symbol": sp.Symbol},
                          transformations=standard_transformations + (convert_xor,),
                          evaluate=True)
    except Exception as exc:  # sympy raises a zoo of types for malformed input
        raise ExpressionError(f"cannot parse {source!r}: {exc}") from exc
    if not isinstance(expr, sp.Expr):
        raise ExpressionError(f"{source!r} is not an arithmetic expression")
    return expr
