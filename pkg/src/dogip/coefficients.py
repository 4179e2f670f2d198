"""Material coefficients: scalar weights ``m(x)`` and matrix fields ``M(x)``.

Polynomial coefficients come from a small expression language: numbers, the
variables ``x``, ``y``, ``z``, ``+``, ``-``, ``*``, ``^`` (or ``**``) with
non-negative integer exponents, and parentheses. The polynomial degree is
inferred, which fixes the quadrature degree needed for exact assembly.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CoefficientError

_VARS = {"x": 0, "y": 1, "z": 2}


class Polynomial:
    """Sparse polynomial in up to three variables, ``{exponents: coefficient}``."""

    def __init__(self, terms=None):
        self.terms = {e: c for e, c in (terms or {}).items() if c != 0}

    @classmethod
    def constant(cls, c):
        return cls({(0, 0, 0): float(c)})

    @classmethod
    def variable(cls, i):
        e = [0, 0, 0]
        e[i] = 1
        return cls({tuple(e): 1.0})

    def __add__(self, other):
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return Polynomial(out)

    def __neg__(self):
        return Polynomial({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return Polynomial(out)

    def __pow__(self, n):
        out = Polynomial.constant(1.0)
        for _ in range(n):
            out = out * self
        return out

    @property
    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    @property
    def nvars(self):
        used = [i for e in self.terms for i, a in enumerate(e) if a]
        return max(used, default=-1) + 1

    def __call__(self, points):
        points = np.atleast_2d(points)
        out = np.zeros(len(points))
        for e, c in self.terms.items():
            term = np.full(len(points), c)
            for i, a in enumerate(e):
                if a:
                    term = term * points[:, i] ** a
            out += term
        return out


def parse_polynomial(text):
    """Parse ``text`` such as ``"1 + x*y^2"`` into a :class:`Polynomial`."""
    try:
        tree = ast.parse(str(text).replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise CoefficientError(f"cannot parse coefficient {text!r}") from exc
    return _walk(tree.body, text)


def _walk(node, text):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return Polynomial.constant(node.value)
    if isinstance(node, ast.Name) and node.id in _VARS:
        return Polynomial.variable(_VARS[node.id])
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _walk(node.operand, text)
        return -inner if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            exp = node.right
            if not (isinstance(exp, ast.Constant) and isinstance(exp.value, int) and exp.value >= 0):
                raise CoefficientError(f"exponents must be non-negative integers in {text!r}")
            return _walk(node.left, text) ** exp.value
        ops = {ast.Add: Polynomial.__add__, ast.Sub: Polynomial.__sub__, ast.Mult: Polynomial.__mul__}
        for op_type, fn in ops.items():
            if isinstance(node.op, op_type):
                return fn(_walk(node.left, text), _walk(node.right, text))
    raise CoefficientError(f"unsupported construct in coefficient {text!r}")


@dataclass(frozen=True)
class CoefficientField:
    """A scalar (``kind="scalar"``) or ``d x d`` matrix (``kind="matrix"``) field.

    ``evaluator`` maps an ``(n, d)`` point array to ``(n,)`` or ``(n, d, d)``.
    ``iso`` holds ``m`` when the matrix field is known to equal ``m(x) I``.
    """

    kind: str
    evaluator: Callable
    degree: int = 0
    d: int | None = None
    label: str = ""
    iso: "CoefficientField | None" = field(default=None, repr=False)

    def __call__(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.asarray(self.evaluator(points), dtype=float)
        if self.kind == "scalar":
            return np.broadcast_to(vals, (len(points),))
        return np.broadcast_to(vals, (len(points), self.d, self.d))

    @property
    def isotropic(self):
        return self.iso is not None


def scalar_field(spec, d=None):
    """Scalar coefficient from a number, an expression string or a :class:`Polynomial`."""
    if isinstance(spec, CoefficientField):
        return spec
    poly = spec if isinstance(spec, Polynomial) else (
        Polynomial.constant(spec) if isinstance(spec, (int, float)) else parse_polynomial(spec))
    if d is not None and poly.nvars > d:
        raise CoefficientError(f"coefficient {spec!r} uses variables beyond dimension {d}")
    return CoefficientField(kind="scalar", evaluator=poly, degree=poly.degree, d=d, label=str(spec))


def constant_matrix(M, label=None):
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    if M.shape != (d, d):
        raise CoefficientError("matrix coefficient must be square")
    if not np.allclose(M, M.T, rtol=0, atol=1e-14):
        raise CoefficientError("matrix coefficient must be symmetric")
    if np.linalg.eigvalsh(M).min() <= 0:
        raise CoefficientError("matrix coefficient must be positive definite")
    iso = None
    if np.array_equal(M, M[0, 0] * np.eye(d)):
        iso = scalar_field(float(M[0, 0]), d)
    return CoefficientField(kind="matrix", evaluator=lambda p: M, degree=0, d=d,
                            label=label or "const", iso=iso)


def identity_matrix(d):
    return constant_matrix(np.eye(d), label="identity")


def diagonal_matrix(values):
    return constant_matrix(np.diag(np.asarray(values, dtype=float)), label="diag")


def isotropic_matrix(m, d):
    """``M(x) = m(x) I``."""
    m = scalar_field(m, d)
    eye = np.eye(d)
    return CoefficientField(kind="matrix", evaluator=lambda p: m(p)[:, None, None] * eye,
                            degree=m.degree, d=d, label=f"iso:{m.label}", iso=m)


def matrix_field(spec, d):
    """Parse ``identity``, ``diag:a,b[,c]`` or ``iso:EXPR``."""
    if isinstance(spec, CoefficientField):
        return spec
    text = str(spec).strip()
    if text == "identity":
        return identity_matrix(d)
    if text.startswith("diag:"):
        try:
            vals = [float(v) for v in text[5:].split(",")]
        except ValueError as exc:
            raise CoefficientError(f"bad diagonal {text!r}") from exc
        if len(vals) != d:
            raise CoefficientError(f"diag needs {d} entries, got {len(vals)}")
        return diagonal_matrix(vals)
    if text.startswith("iso:"):
        return isotropic_matrix(text[4:], d)
    raise CoefficientError(f"unknown matrix coefficient {spec!r}")


def check_spd(values, atol=0.0):
    """Raise unless every ``(d, d)`` sample in ``values`` is symmetric positive definite."""
    values = np.asarray(values)
    if not np.allclose(values, np.swapaxes(values, -1, -2), rtol=0, atol=1e-12):
        raise CoefficientError("matrix coefficient is not symmetric")
    if np.linalg.eigvalsh(values).min() <= atol:
        raise CoefficientError("matrix coefficient is not positive definite")
