"""A small, safe expression language for coefficient, datum and flux fields.

Grammar and evaluation rules (these are what "bit-exact" means here):

* Source text is parsed with :func:`ast.parse` in ``eval`` mode, so tokenization,
  operator precedence and associativity are exactly Python's.  ``**`` is
  right-associative and binds tighter than unary minus (``-x**2 == -(x**2)``).
* ``^`` is rewritten to ``**`` before parsing (the grammar has no string
  literals, so this is purely textual); it therefore has the precedence and
  right associativity of ``**``: ``x^2*y == (x**2)*y``, ``2^3^2 == 512``.
* Numeric literals are Python ``int``/``float`` literals, converted once to
  IEEE-754 float64 (correctly rounded by the Python parser).  Complex literals
  are rejected.
* Names: the variables ``x``, ``y`` (fields) and ``t`` (flux argument), and the
  constants ``pi`` and ``e`` (``numpy.pi``, ``numpy.e``).
* Functions: ``sin``, ``cos``, ``exp``, ``abs`` (one argument) and ``min``,
  ``max`` (two or more arguments, folded left to right).
* Operators: unary ``+``/``-``; binary ``+ - * / **``.
* Evaluation is elementwise in float64 with numpy ufuncs, in AST order:
  ``+ - * /`` map to ``np.add``, ``np.subtract``, ``np.multiply``,
  ``np.divide``; ``**`` to ``np.power``; ``min``/``max`` to
  ``np.minimum``/``np.maximum``.  No algebraic simplification is performed.

Anything else (attribute access, subscripts, comparisons, keyword arguments,
unknown names) raises :class:`~noncoercive.errors.ConfigParseError`.
"""

from __future__ import annotations

import ast
from functools import reduce

import numpy as np
import sympy

from .errors import ConfigParseError, ManufacturedUnsupported

VARIABLES = ("x", "y", "t")
CONSTANTS = {"pi": np.pi, "e": np.e}
UNARY_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}
VARIADIC_FUNCTIONS = {"min": np.minimum, "max": np.maximum}
NONSMOOTH_FUNCTIONS = frozenset({"abs", "min", "max"})

_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}

_SYMPY_FUNCS = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "exp": sympy.exp,
    "abs": sympy.Abs,
    "min": sympy.Min,
    "max": sympy.Max,
}


def _check(node, source, allowed_vars):
    """Validate the AST against the grammar; return the set of function names used."""
    used = set()

    def fail(msg, n):
        raise ConfigParseError(
            f"{msg} in expression {source!r} (column {getattr(n, 'col_offset', 0) + 1})"
        )

    def visit(n):
        if isinstance(n, ast.Expression):
            visit(n.body)
        elif isinstance(n, ast.Constant):
            if isinstance(n.value, bool) or not isinstance(n.value, (int, float)):
                fail(f"unsupported literal {n.value!r}", n)
        elif isinstance(n, ast.Name):
            if n.id in CONSTANTS:
                return
            if n.id not in allowed_vars:
                fail(f"unknown name {n.id!r}", n)
        elif isinstance(n, ast.UnaryOp):
            if not isinstance(n.op, (ast.UAdd, ast.USub)):
                fail("unsupported unary operator", n)
            visit(n.operand)
        elif isinstance(n, ast.BinOp):
            if type(n.op) not in _BINOPS:
                fail("unsupported binary operator", n)
            visit(n.left)
            visit(n.right)
        elif isinstance(n, ast.Call):
            if not isinstance(n.func, ast.Name):
                fail("only plain function calls are allowed", n)
            name = n.func.id
            if n.keywords:
                fail("keyword arguments are not allowed", n)
            if name in UNARY_FUNCTIONS:
                if len(n.args) != 1:
                    fail(f"{name}() takes exactly one argument", n)
            elif name in VARIADIC_FUNCTIONS:
                if len(n.args) < 2:
                    fail(f"{name}() takes at least two arguments", n)
            else:
                fail(f"unknown function {name!r}", n)
            used.add(name)
            for arg in n.args:
                visit(arg)
        else:
            fail(f"unsupported syntax {type(n).__name__}", n)

    visit(node)
    return used


class Expression:
    """A parsed expression that evaluates elementwise on numpy arrays.

    >>> Expression("x*(1-x)")(x=np.array([0.5]))
    array([0.25])
    """

    def __init__(self, source, variables=VARIABLES):
        if not isinstance(source, str):
            if isinstance(source, (int, float)) and not isinstance(source, bool):
                source = repr(float(source))
            else:
                raise ConfigParseError(f"expression must be a string, got {type(source).__name__}")
        self.source = source
        self.variables = tuple(variables)
        try:
            tree = ast.parse(source.strip().replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ConfigParseError(f"syntax error in expression {source!r}: {exc.msg}") from None
        self.functions = frozenset(_check(tree, source, self.variables))
        self._tree = tree

    def __repr__(self):
        return f"Expression({self.source!r})"

    @property
    def differentiable(self):
        return not (self.functions & NONSMOOTH_FUNCTIONS)

    def __call__(self, **values):
        arrays = {k: np.asarray(v, dtype=float) for k, v in values.items()}
        shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ()

        def ev(n):
            if isinstance(n, ast.Expression):
                return ev(n.body)
            if isinstance(n, ast.Constant):
                return np.float64(n.value)
            if isinstance(n, ast.Name):
                if n.id in CONSTANTS:
                    return np.float64(CONSTANTS[n.id])
                try:
                    return arrays[n.id]
                except KeyError:
                    raise ConfigParseError(
                        f"variable {n.id!r} not supplied when evaluating {self.source!r}"
                    ) from None
            if isinstance(n, ast.UnaryOp):
                v = ev(n.operand)
                return np.negative(v) if isinstance(n.op, ast.USub) else v
            if isinstance(n, ast.BinOp):
                return _BINOPS[type(n.op)](ev(n.left), ev(n.right))
            name = n.func.id
            args = [ev(a) for a in n.args]
            if name in UNARY_FUNCTIONS:
                return UNARY_FUNCTIONS[name](args[0])
            return reduce(VARIADIC_FUNCTIONS[name], args)

        with np.errstate(all="ignore"):
            out = ev(self._tree)
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def to_sympy(self, symbols=None):
        """Convert to a sympy expression over real symbols ``x``, ``y``, ``t``."""
        symbols = symbols or {v: sympy.Symbol(v, real=True) for v in VARIABLES}

        def cv(n):
            if isinstance(n, ast.Expression):
                return cv(n.body)
            if isinstance(n, ast.Constant):
                v = n.value
                return sympy.Integer(v) if isinstance(v, int) else sympy.Float(v)
            if isinstance(n, ast.Name):
                if n.id == "pi":
                    return sympy.pi
                if n.id == "e":
                    return sympy.E
                return symbols[n.id]
            if isinstance(n, ast.UnaryOp):
                v = cv(n.operand)
                return -v if isinstance(n.op, ast.USub) else v
            if isinstance(n, ast.BinOp):
                a, b = cv(n.left), cv(n.right)
                op = type(n.op)
                if op is ast.Add:
                    return a + b
                if op is ast.Sub:
                    return a - b
                if op is ast.Mult:
                    return a * b
                if op is ast.Div:
                    return a / b
                return a**b
            return _SYMPY_FUNCS[n.func.id](*[cv(a) for a in n.args])

        return cv(self._tree)

    def require_differentiable(self, what="expression"):
        bad = sorted(self.functions & NONSMOOTH_FUNCTIONS)
        if bad:
            raise ManufacturedUnsupported(
                f"{what} {self.source!r} uses non-differentiable function(s): {', '.join(bad)}"
            )


def field(source):
    """Parse a spatial field expression in ``x`` and ``y``."""
    return Expression(source, variables=("x", "y"))


def flux_component(source):
    """Parse one flux component, a function of ``t``."""
    return Expression(source, variables=("t",))
