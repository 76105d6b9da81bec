"""Truncated multivariate Taylor arithmetic ("jets") up to total order 4.

A :class:`Jet` stores normalized Taylor coefficients over all monomials of
degree <= m in graded order, with an optional trailing tensor shape so a
whole matrix field (say g_ij) is carried as one object. Raw partials are
recovered as ``alpha! * c_alpha``; the public table is keyed by sorted
multi-indices of variable positions, which makes mixed partials
order-independent by construction.

All derivatives used anywhere in the package come from here.
"""
from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Mapping, Sequence

import numpy as np

from . import linalg
from .errors import DomainViolation, NumericalError, OrderOverflow
from .expr import Binary, Const, Expr, Pow, Unary, Var, to_text

MAX_ORDER = 4


class _Basis:
    """Monomial enumeration and product / derivative tables for ``nvars`` variables."""

    def __init__(self, nvars: int, max_order: int = MAX_ORDER):
        self.nvars = nvars
        self.max_order = max_order
        monos = []
        self.sizes = []
        for d in range(max_order + 1):
            monos.extend(combinations_with_replacement(range(nvars), d))
            self.sizes.append(len(monos))
        self.monos = monos
        self.index = {m: i for i, m in enumerate(monos)}
        expo = np.zeros((len(monos), nvars), dtype=np.int64)
        for i, m in enumerate(monos):
            for v in m:
                expo[i, v] += 1
        self.degree = np.array([len(m) for m in monos])
        self.factorial = np.array(
            [np.prod([math.factorial(int(e)) for e in row]) for row in expo], dtype=float)

        # products: all (i, j) with deg_i + deg_j <= max_order, grouped by result k
        pi, pj, pk = [], [], []
        for i, mi in enumerate(monos):
            lim = self.sizes[max_order - len(mi)]
            for j in range(lim):
                pi.append(i)
                pj.append(j)
                pk.append(self.index[tuple(sorted(mi + monos[j]))])
        order = np.argsort(pk, kind="stable")
        self.pi = np.asarray(pi)[order]
        self.pj = np.asarray(pj)[order]
        pk = np.asarray(pk)[order]
        self.starts = np.searchsorted(pk, np.arange(len(monos)))
        self.npairs = [int(np.searchsorted(pk, s)) for s in self.sizes]

        # d/dv maps a monomial b (deg <= max_order-1) to coefficient of b + e_v
        low = self.sizes[max_order - 1]
        self.dsrc = np.zeros((nvars, low), dtype=np.int64)
        self.dfac = np.zeros((nvars, low))
        for v in range(nvars):
            for b in range(low):
                self.dsrc[v, b] = self.index[tuple(sorted(monos[b] + (v,)))]
                self.dfac[v, b] = expo[b, v] + 1


    def hessian_tables(self):
        if not hasattr(self, "_htab"):
            nv = self.nvars
            hidx = np.zeros((nv, nv), dtype=np.int64)
            for i in range(nv):
                for j in range(nv):
                    hidx[i, j] = self.index[tuple(sorted((i, j)))]
            self._htab = (hidx, np.where(np.eye(nv, dtype=bool), 2.0, 1.0))
        return self._htab


@lru_cache(maxsize=None)
def basis(nvars: int) -> _Basis:
    return _Basis(nvars)


def _pad(c, nd):
    """Insert singleton axes after the coefficient axis so tensor shapes align on the right."""
    extra = nd - (c.ndim - 1)
    if extra <= 0:
        return c
    return c.reshape(c.shape[:1] + (1,) * extra + c.shape[1:])


class Jet:
    """Truncated Taylor expansion of a (possibly tensor-valued) function at a point."""

    __slots__ = ("basis", "order", "c", "point")
    __array_priority__ = 100  # make ndarray * Jet defer to Jet.__rmul__

    def __init__(self, b: _Basis, order: int, c: np.ndarray, point=None):
        self.basis = b
        self.order = order
        self.c = c
        self.point = point

    # -- construction ------------------------------------------------------
    @classmethod
    def variable(cls, b: _Basis, order: int, point, idx: int) -> "Jet":
        c = np.zeros(b.sizes[order])
        c[0] = point[idx]
        if order >= 1:
            c[1 + idx] = 1.0
        return cls(b, order, c, point)

    @classmethod
    def constant(cls, b: _Basis, order: int, value, point=None) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((b.sizes[order],) + value.shape)
        c[0] = value
        return cls(b, order, c, point)

    def _new(self, c, order=None):
        return Jet(self.basis, self.order if order is None else order, c, self.point)

    # -- basic protocol ----------------------------------------------------
    @property
    def shape(self):
        return self.c.shape[1:]

    @property
    def value(self):
        v = self.c[0]
        return float(v) if v.ndim == 0 else v.copy()

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return self._new(self.c[: self.basis.sizes[order]], order)

    def _align(self, other: "Jet"):
        m = min(self.order, other.order)
        size = self.basis.sizes[m]
        return m, self.c[:size], other.c[:size]

    def __getitem__(self, key):
        if not isinstance(key, tuple):
            key = (key,)
        return self._new(self.c[(slice(None),) + key])

    def __len__(self):
        return self.shape[0]

    def __iter__(self):
        for i in range(self.shape[0]):
            yield self[i]

    @property
    def T(self):
        return self._new(np.swapaxes(self.c, -1, -2))

    # -- arithmetic --------------------------------------------------------
    def _const_c(self, other):
        val = np.asarray(other, dtype=float)
        nd = max(self.c.ndim - 1, val.ndim)
        c = _pad(self.c, nd)
        return c, val, nd

    def __add__(self, other):
        if isinstance(other, Jet):
            m, a, b = self._align(other)
            nd = max(a.ndim, b.ndim) - 1
            return self._new(_pad(a, nd) + _pad(b, nd), m)
        if isinstance(other, (float, int)):
            c = self.c.copy()
            c[0] += other
            return self._new(c)
        c, val, _ = self._const_c(other)
        c = c + np.zeros_like(val)
        c[0] = c[0] + val
        return self._new(c)

    __radd__ = __add__

    def __neg__(self):
        return self._new(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            m, a, b = self._align(other)
            bs = self.basis
            npair = bs.npairs[m]
            nd = max(a.ndim, b.ndim) - 1
            if nd == 0:
                prod = a[bs.pi[:npair]] * b[bs.pj[:npair]]
            else:
                prod = _pad(a[bs.pi[:npair]], nd) * _pad(b[bs.pj[:npair]], nd)
            return Jet(bs, m, np.add.reduceat(prod, bs.starts[: bs.sizes[m]], axis=0), self.point)
        if isinstance(other, (float, int)):
            return Jet(self.basis, self.order, self.c * other, self.point)
        c, val, _ = self._const_c(other)
        return self._new(c * val)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n: int):
        return self.powi(n)

    def nilpotent(self):
        """The part of the jet with zero constant term."""
        c = self.c.copy()
        c[0] = 0.0
        return self._new(c)

    def _series(self, derivs):
        """Compose a scalar function with this jet given f^(j)(u0), j = 0..m."""
        m = self.order
        if m == 0:
            return self._new(np.asarray(derivs[0], dtype=float).reshape(self.c.shape))
        du = self.nilpotent()
        out = du * (derivs[m] / math.factorial(m)) + derivs[m - 1] / math.factorial(m - 1)
        for j in range(m - 2, -1, -1):
            out = out * du + derivs[j] / math.factorial(j)
        return out

    def reciprocal(self):
        u0 = self.c[0]
        if np.any(u0 == 0.0):
            raise _Domain("division by zero")
        derivs = [(-1) ** j * math.factorial(j) / u0 ** (j + 1) for j in range(self.order + 1)]
        return self._series(derivs)

    def powi(self, n: int):
        n = int(n)
        if n == 0:
            return self._new(np.zeros_like(self.c)) + 1.0
        if n == 1:
            return self
        if n == 2:
            return self * self
        u0 = self.c[0]
        if n < 0 and np.any(u0 == 0.0):
            raise _Domain("negative power of zero")
        derivs = []
        for j in range(self.order + 1):
            ff = float(np.prod([n - i for i in range(j)])) if j else 1.0
            derivs.append(ff * u0 ** (n - j) if ff != 0.0 else np.zeros_like(u0))
        return self._series(derivs)

    def sqrt(self):
        u0 = self.c[0]
        if np.any(u0 < 0) or (self.order > 0 and np.any(u0 == 0)):
            raise _Domain("square root of a non-positive value")
        derivs = []
        for j in range(self.order + 1):
            ff = float(np.prod([0.5 - i for i in range(j)])) if j else 1.0
            derivs.append(ff * u0 ** (0.5 - j))
        return self._series(derivs)

    def exp(self):
        e = np.exp(self.c[0])
        return self._series([e] * (self.order + 1))

    def log(self):
        u0 = self.c[0]
        if np.any(u0 <= 0):
            raise _Domain("logarithm of a non-positive value")
        derivs = [np.log(u0)] + [(-1) ** (j - 1) * math.factorial(j - 1) / u0 ** j
                                 for j in range(1, self.order + 1)]
        return self._series(derivs)

    def sin(self):
        s, c = np.sin(self.c[0]), np.cos(self.c[0])
        cyc = [s, c, -s, -c]
        return self._series([cyc[j % 4] for j in range(self.order + 1)])

    def cos(self):
        s, c = np.sin(self.c[0]), np.cos(self.c[0])
        cyc = [c, -s, -c, s]
        return self._series([cyc[j % 4] for j in range(self.order + 1)])

    # -- differentiation ---------------------------------------------------
    def d(self, var: int) -> "Jet":
        """Partial derivative with respect to variable ``var``; order drops by one."""
        if self.order == 0:
            raise OrderOverflow(1 + self.order, self.order)
        bs = self.basis
        size = bs.sizes[self.order - 1]
        fac = bs.dfac[var, :size].reshape((size,) + (1,) * (self.c.ndim - 1))
        return self._new(self.c[bs.dsrc[var, :size]] * fac, self.order - 1)

    def grad(self, block) -> "Jet":
        """Derivatives over a slice of variables, appended as a new last axis."""
        if self.order == 0:
            raise OrderOverflow(1, 0)
        bs = self.basis
        idx = np.arange(bs.nvars)[block]
        size = bs.sizes[self.order - 1]
        src = bs.dsrc[idx, :size]                         # (nb, size)
        fac = bs.dfac[idx, :size].reshape(src.shape + (1,) * (self.c.ndim - 1))
        out = self.c[src] * fac                           # (nb, size, *shape)
        return self._new(np.moveaxis(out, 0, -1), self.order - 1)

    # -- tensor algebra ----------------------------------------------------
    def dot(self, other, subscripts: str) -> "Jet":
        return contract(subscripts, self, other)

    def inv(self) -> "Jet":
        """Inverse of a square-matrix-valued jet (Neumann series around the value)."""
        a0inv = linalg.inv(self.c[0])
        e = -np.einsum("ij,zjk->zik", a0inv, self.c)
        e[0] = 0.0
        ej = self._new(e)
        s = self._new(np.zeros_like(self.c)) + np.eye(self.shape[0])
        for _ in range(self.order):
            s = contract("ij,jk->ik", ej, s) + np.eye(self.shape[0])
        return self._new(np.einsum("zij,jk->zik", s.c, a0inv))

    def gradient_hessian(self):
        """(gradient, Hessian) of a scalar jet of order >= 2, read off the coefficients."""
        if self.order < 2 or self.c.ndim != 1:
            raise OrderOverflow(2, self.order)
        hidx, hfac = self.basis.hessian_tables()
        nv = self.basis.nvars
        return self.c[1:1 + nv].copy(), self.c[hidx] * hfac

    # -- raw partials ------------------------------------------------------
    def partial(self, multi_index: Sequence[int] = ()):
        key = tuple(sorted(multi_index))
        if len(key) > self.order:
            raise OrderOverflow(len(key), self.order)
        i = self.basis.index[key]
        return self.basis.factorial[i] * self.c[i]

    def table(self) -> dict:
        """Raw partial derivatives keyed by sorted multi-index."""
        size = self.basis.sizes[self.order]
        raw = self.c[:size] * self.basis.factorial[:size].reshape((size,) + (1,) * (self.c.ndim - 1))
        return {self.basis.monos[i]: (float(raw[i]) if raw[i].ndim == 0 else raw[i])
                for i in range(size)}

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape}, value={self.c[0]!r})"


class _Domain(NumericalError):
    """Raised inside jet kernels; re-raised as DomainViolation with the subexpression."""


def contract(subscripts: str, a, b) -> Jet:
    """Einsum of two jets (or a jet and a constant array), truncated product."""
    ins, out = subscripts.split("->")
    sa, sb = ins.split(",")
    if not isinstance(b, Jet):
        return a._new(np.einsum(f"z{sa},{sb}->z{out}", a.c, np.asarray(b, dtype=float)))
    if not isinstance(a, Jet):
        return b._new(np.einsum(f"{sa},z{sb}->z{out}", np.asarray(a, dtype=float), b.c))
    m, ca, cb = a._align(b)
    bs = a.basis
    npair = bs.npairs[m]
    prod = np.einsum(f"z{sa},z{sb}->z{out}", ca[bs.pi[:npair]], cb[bs.pj[:npair]])
    return a._new(np.add.reduceat(prod, bs.starts[: bs.sizes[m]], axis=0), m)


def stack(jets: Sequence, axis: int = 0) -> Jet:
    """Stack same-shape jets into one tensor jet; plain numbers are lifted."""
    ref = next(j for j in jets if isinstance(j, Jet))
    m = min(j.order for j in jets if isinstance(j, Jet))
    size = ref.basis.sizes[m]
    cs = []
    for j in jets:
        if isinstance(j, Jet):
            cs.append(j.c[:size])
        else:
            c = np.zeros((size,) + np.shape(j))
            c[0] = j
            cs.append(c)
    ax = axis if axis < 0 else axis + 1
    return Jet(ref.basis, m, np.stack(cs, axis=ax), ref.point)


def variables_jet(point, order: int, block=slice(None)) -> Jet:
    """Vector jet of the coordinate functions in ``block``."""
    point = np.asarray(point, dtype=float)
    bs = basis(len(point))
    idx = np.arange(len(point))[block]
    c = np.zeros((bs.sizes[order], len(idx)))
    c[0] = point[idx]
    if order >= 1:
        c[1 + idx, np.arange(len(idx))] = 1.0
    return Jet(bs, order, c, point)


# -- expression evaluation ---------------------------------------------------


def _check_order(m: int):
    if m > MAX_ORDER:
        raise OrderOverflow(m)
    if m < 0:
        raise ValueError("jet order must be non-negative")


def eval_jet(expr: Expr, point, m: int) -> Jet:
    """All partials of ``expr`` up to total degree ``m`` at ``point``."""
    _check_order(m)
    point = np.asarray(point, dtype=float)
    bs = basis(len(point))
    memo: dict = {}

    def rec(node):
        key = id(node)
        hit = memo.get(key)
        if hit is not None:
            return hit[1]
        if isinstance(node, Const):
            out = float(node.value)
        elif isinstance(node, Var):
            if node.index >= len(point):
                raise ValueError(f"variable {node.name or node.index} outside point of length {len(point)}")
            out = Jet.variable(bs, m, point, node.index)
        else:
            try:
                if isinstance(node, Unary):
                    a = rec(node.arg)
                    if not isinstance(a, Jet):
                        a = Jet.constant(bs, m, a, point)
                    out = -a if node.op == "neg" else getattr(a, node.op)()
                elif isinstance(node, Pow):
                    a = rec(node.base)
                    if not isinstance(a, Jet):
                        a = Jet.constant(bs, m, a, point)
                    out = a.powi(node.exponent)
                elif isinstance(node, Binary):
                    a, b = rec(node.left), rec(node.right)
                    if not isinstance(a, Jet) and not isinstance(b, Jet):
                        a = Jet.constant(bs, m, a, point)
                    if node.op == "add":
                        out = a + b
                    elif node.op == "sub":
                        out = a - b
                    elif node.op == "mul":
                        out = a * b
                    else:
                        if not isinstance(b, Jet) and b == 0.0:
                            raise _Domain("division by zero")
                        out = a / b
                else:
                    raise TypeError(f"not an expression node: {node!r}")
            except _Domain as err:
                raise DomainViolation(to_text(node), str(err)) from None
        memo[key] = (node, out)
        return out

    out = rec(expr)
    return out if isinstance(out, Jet) else Jet.constant(bs, m, out, point)


def eval_jets(exprs, point, m: int) -> Jet:
    """Evaluate a nested list of expressions into one tensor-valued jet."""
    arr = np.array(exprs, dtype=object)
    flat = [eval_jet(e, point, m) for e in arr.ravel()]
    j = stack(flat)
    return j._new(j.c.reshape((j.c.shape[0],) + arr.shape))


def partial(expr: Expr, point, multi_index: Sequence[int]) -> float:
    """A single raw partial derivative; ``multi_index`` holds 0-based variable positions."""
    return float(eval_jet(expr, point, len(multi_index)).partial(multi_index))


def hessian_block(expr: Expr, point, block) -> np.ndarray:
    """Symmetric matrix of second partials over a contiguous variable block."""
    j = eval_jet(expr, point, 2)
    idx = np.arange(len(point))[block]
    n = len(idx)
    out = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            out[a, b] = out[b, a] = j.partial((idx[a], idx[b]))
    return out
