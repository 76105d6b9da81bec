"""Geometry of the bundle of accelerations T^kM, k <= 3.

State layout follows ``VarLayout(n, k)``: x, then the blocks y^(1)..y^(k)
with y^(a) = (1/a!) d^a x / dt^a. Operations that need total time
derivatives along a curve take extra blocks y^(k+1)..y^(2k-1); a total
derivative is then

    d/dt = sum_a (a+1) y^(a+1) d/dy^(a)      (y^(0) = x).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import linalg
from .errors import ConfigError, IrregularPoint, OrderOverflow
from .expr import Expr, VarLayout, parse_expr
from .jet import MAX_ORDER, Jet, basis, contract, eval_jet, eval_jets, stack, variables_jet

K_MAX = 3


# -- points ------------------------------------------------------------------


@dataclass(frozen=True)
class HigherPoint:
    """x plus velocity blocks; ``blocks`` may run past k as extension slots."""

    x: tuple
    blocks: tuple
    k: int

    def __post_init__(self):
        if not 1 <= self.k <= K_MAX:
            raise ConfigError(f"order k must be in 1..{K_MAX}, got {self.k}")
        if len(self.blocks) < self.k:
            raise ConfigError(f"a point of T^{self.k}M needs {self.k} velocity blocks")
        n = len(self.x)
        if any(len(b) != n for b in self.blocks):
            raise ConfigError("every block must have n components")

    @classmethod
    def make(cls, x, *blocks, k=None):
        blocks = tuple(tuple(float(v) for v in np.atleast_1d(b)) for b in blocks)
        return cls(tuple(float(v) for v in np.atleast_1d(x)), blocks, len(blocks) if k is None else k)

    @classmethod
    def from_vector(cls, u, n, k):
        u = np.asarray(u, float)
        nb = len(u) // n - 1
        return cls(tuple(u[:n]), tuple(tuple(u[(a + 1) * n:(a + 2) * n]) for a in range(nb)), k)

    @property
    def n(self):
        return len(self.x)

    @property
    def extensions(self):
        return len(self.blocks) - self.k

    def vector(self, upto: Optional[int] = None) -> np.ndarray:
        upto = len(self.blocks) if upto is None else upto
        if upto > len(self.blocks):
            raise ConfigError(f"operation needs velocity blocks up to y^({upto}); "
                              f"point carries {len(self.blocks)} (k = {self.k})")
        return np.concatenate([np.asarray(self.x)] + [np.asarray(b) for b in self.blocks[:upto]])

    def require(self, upto: int):
        self.vector(upto)


def _block(n, a):
    return slice(a * n, (a + 1) * n)


# -- operators on jets -------------------------------------------------------


def _flow(jet: Jet, n: int, top: int) -> Jet:
    """sum_{a=0}^{top-1} (a+1) y^(a+1) d/dy^(a) applied to a jet (last axis free)."""
    out = None
    for a in range(top):
        w = variables_jet(jet.point, jet.order - 1, _block(n, a + 1)) * float(a + 1)
        term = contract("...m,m->...", jet.grad(_block(n, a)), w)
        out = term if out is None else out + term
    return out


def gamma_jet(jet: Jet, n: int, k: int) -> Jet:
    """Gamma = y^(1) d/dx + 2 y^(2) d/dy^(1) + ... + k y^(k) d/dy^(k-1)."""
    return _flow(jet, n, k)


def total_derivative(jet: Jet, n: int, nblocks: int) -> Jet:
    """d/dt along a curve, exact for jets that do not depend on the last block."""
    return _flow(jet, n, nblocks)


def _check_k(k):
    if not 1 <= k <= K_MAX:
        raise ConfigError(f"order k must be in 1..{K_MAX}, got {k}")


# -- spaces ------------------------------------------------------------------


Generator = Union[Expr, Callable]


@dataclass(frozen=True)
class HigherOrderSpace:
    """Lagrange space of order k; ``lagrangian`` is an Expr or ``(u, m) -> Jet``."""

    n: int
    k: int
    lagrangian: Generator
    eps_reg: float = 1e-10
    name: str = ""

    def __post_init__(self):
        _check_k(self.k)

    @classmethod
    def from_text(cls, n, k, text, params=None, **kw):
        return cls(n, k, parse_expr(text, VarLayout(n, k), params), **kw)

    @property
    def layout(self):
        return VarLayout(self.n, self.k)

    def jet(self, u, m: int) -> Jet:
        if m > MAX_ORDER:
            raise OrderOverflow(m)
        if isinstance(self.lagrangian, Expr):
            return eval_jet(self.lagrangian, u, m)
        return self.lagrangian(np.asarray(u, float), m)


def _Lj(space_or_expr, pt: HigherPoint, m: int, upto=None) -> tuple:
    u = pt.vector(upto)
    if isinstance(space_or_expr, HigherOrderSpace):
        return space_or_expr.jet(u, m), u
    if m > MAX_ORDER:
        raise OrderOverflow(m)
    return eval_jet(space_or_expr, u, m), u


# -- Gamma, Liouville fields and invariants ---------------------------------


def gamma_apply(f, pt: HigherPoint) -> float:
    """Gamma f at a point of T^kM."""
    fj, _ = _Lj(f, pt, 1, pt.k)
    return float(gamma_jet(fj, pt.n, pt.k).value)


def liouville_fields(pt: HigherPoint) -> list:
    """Gamma^1..Gamma^k as component vectors over (x, y^(1)..y^(k)).

    Gamma^b = sum_{c=1}^{b} c y^(c) d/dy^(k-b+c).
    """
    n, k = pt.n, pt.k
    u = pt.vector(k)
    out = []
    for b in range(1, k + 1):
        v = np.zeros((k + 1) * n)
        for c in range(1, b + 1):
            v[_block(n, k - b + c)] += c * u[_block(n, c)]
        out.append(v)
    return out


def main_invariants(L, pt: HigherPoint) -> np.ndarray:
    """I^1(L)..I^k(L): derivatives of L along the Liouville fields."""
    lj, _ = _Lj(L, pt, 1, pt.k)
    grad = lj.grad(slice(None)).value
    return np.array([grad @ v for v in liouville_fields(pt)])


def zermelo_check(L, pt: HigherPoint) -> np.ndarray:
    """Residuals (I^1, ..., I^(k-1), I^k - L); a diagnostic, nonzero for most Lagrangians."""
    inv = main_invariants(L, pt)
    lj, _ = _Lj(L, pt, 0, pt.k)
    inv[-1] -= lj.value
    return inv


def _invariant_jets(lj: Jet, pt: HigherPoint) -> list:
    n, k = pt.n, pt.k
    out = []
    for b in range(1, k + 1):
        acc = None
        for c in range(1, b + 1):
            w = variables_jet(lj.point, lj.order - 1, _block(n, c)) * float(c)
            t = contract("m,m->", lj.grad(_block(n, k - b + c)), w)
            acc = t if acc is None else acc + t
        out.append(acc)
    return out


# -- covectors, energies and momenta ----------------------------------------


def craig_synge(L, pt: HigherPoint) -> np.ndarray:
    """E^(k-1)_i = (-1)^(k-1)/(k-1)! (dL/dy^(k-1) - d/dt dL/dy^(k)); needs y^(k+1)."""
    n, k = pt.n, pt.k
    lj, _ = _Lj(L, pt, 2, k + 1)
    lk = lj.grad(_block(n, k))
    dt = total_derivative(lk, n, k + 1)
    val = lj.grad(_block(n, k - 1)).value - dt.value
    return (-1) ** (k - 1) / math.factorial(k - 1) * val


def euler_lagrange(L, pt: HigherPoint) -> np.ndarray:
    """E°_i = dL/dx - d/dt dL/dy^(1) + ... + (-1)^k d^k/dt^k dL/dy^(k); needs blocks up to 2k."""
    n, k = pt.n, pt.k
    nb = 2 * k
    lj, _ = _Lj(L, pt, k + 1, nb)
    acc = lj.grad(_block(n, 0)).value.copy()
    for a in range(1, k + 1):
        t = lj.grad(_block(n, a))
        for _ in range(a):
            t = total_derivative(t, n, nb)
        acc += (-1) ** a * t.value
    return acc


def energy_order_k(L, pt: HigherPoint) -> float:
    """E^k(L) = I^k - 1/2! d/dt I^(k-1) + ... + (-1)^(k-1)/k! d^(k-1)/dt^(k-1) I^1 - L.

    Needs extension blocks up to y^(2k-1).
    """
    n, k = pt.n, pt.k
    nb = 2 * k - 1
    lj, _ = _Lj(L, pt, k, nb)
    inv = _invariant_jets(lj, pt)
    total = 0.0
    for b in range(1, k + 1):
        t = inv[b - 1]
        for _ in range(k - b):
            t = total_derivative(t, n, nb)
        total += (-1) ** (k - b) / math.factorial(k - b + 1) * float(t.value)
    return total - float(lj.value)


def jacobi_ostrogradski(L, pt: HigherPoint) -> list:
    """Momenta p_(a) = sum_{b>=a} (-1)^(b-a)/b! d^(b-a)/dt^(b-a) dL/dy^(b)."""
    n, k = pt.n, pt.k
    nb = 2 * k - 1
    lj, _ = _Lj(L, pt, k, nb)
    out = []
    for a in range(1, k + 1):
        acc = np.zeros(n)
        for b in range(a, k + 1):
            t = lj.grad(_block(n, b))
            for _ in range(b - a):
                t = total_derivative(t, n, nb)
            acc += (-1) ** (b - a) / math.factorial(b) * t.value
        out.append(acc)
    return out


def energy_bilinear(L, pt: HigherPoint) -> float:
    """The same energy as p_(1).x' + p_(2).x'' + ... + p_(k).x^(k) - L."""
    k = pt.k
    mom = jacobi_ostrogradski(L, pt)
    lj, u = _Lj(L, pt, 0, k)
    n = pt.n
    s = sum(float(mom[a - 1] @ (math.factorial(a) * u[_block(n, a)])) for a in range(1, k + 1))
    return s - float(lj.value)


# -- semisprays and dual coefficients ----------------------------------------


def _metric_jet(lj: Jet, n: int, k: int) -> Jet:
    yk = _block(n, k)
    return lj.grad(yk).grad(yk) * 0.5


def _inverse_jet(g: Jet, eps: float) -> Jet:
    if not linalg.is_regular(g.value, eps):
        raise IrregularPoint("singular order-k metric")
    return g.inv()


def _semispray_jet_k(lj: Jet, n: int, k: int, eps: float) -> Jet:
    """(k+1) G = 1/2 g^ij (Gamma dL/dy^(k)j - dL/dy^(k-1)j), two orders below ``lj``."""
    lk = lj.grad(_block(n, k))
    rhs = gamma_jet(lk, n, k) - lj.grad(_block(n, k - 1)).truncate(lj.order - 2)
    ginv = _inverse_jet(_metric_jet(lj, n, k), eps)
    return contract("ij,j->i", ginv, rhs) * (0.5 / (k + 1))


def metric_k(space: HigherOrderSpace, pt: HigherPoint) -> np.ndarray:
    lj = space.jet(pt.vector(space.k), 2)
    return _metric_jet(lj, space.n, space.k).value


def k_semispray(space: HigherOrderSpace, pt: HigherPoint) -> np.ndarray:
    """Coefficients G°^i of the canonical k-semispray."""
    lj = space.jet(pt.vector(space.k), 2)
    return _semispray_jet_k(lj, space.n, space.k, space.eps_reg).value


@dataclass(frozen=True)
class DualCoefficients:
    M: tuple             # M_(1)..M_(k), n x n arrays
    provenance: str

    @property
    def k(self):
        return len(self.M)


def _recursion(M1: Jet, apply_S, k: int) -> list:
    """M_(a+1) = 1/(a+1) (S M_(a) + M_(1) M_(a))."""
    Ms = [M1]
    for a in range(1, k):
        Ma = Ms[-1]
        nxt = (apply_S(Ma) + contract("im,mj->ij", M1.truncate(Ma.order - 1), Ma.truncate(Ma.order - 1))) * (1.0 / (a + 1))
        Ms.append(nxt)
    return Ms


def _force_jet_k(force, u, m, n):
    if force is None:
        return None
    return eval_jets(list(force), u, m)


def dual_coefficients_semispray(space: HigherOrderSpace, pt: HigherPoint, force=None) -> DualCoefficients:
    """Dual coefficients of the canonical nonlinear connection from the (system) k-semispray.

    With a contravariant force F^i the semispray is G = G° - F/(2(k+1)) and
    S = Gamma - (k+1) G^i d/dy^(k)i. Needs L jets of order k + 2.
    """
    n, k = space.n, space.k
    u = pt.vector(k)
    m = k + 2
    lj = space.jet(u, m)
    G = _semispray_jet_k(lj, n, k, space.eps_reg)                    # order k
    fj = _force_jet_k(force, u, k, n)
    if fj is not None:
        G = G - fj * (0.5 / (k + 1))
    yk = _block(n, k)

    def apply_S(Mj):
        return gamma_jet(Mj, n, k) - contract("ijm,m->ij", Mj.grad(yk), G.truncate(Mj.order - 1)) * float(k + 1)

    Ms = _recursion(G.grad(yk), apply_S, k)
    return DualCoefficients(tuple(M.value for M in Ms), "from-semispray")


def christoffel_x(metric, u, m: int) -> Jet:
    """Christoffel symbols gamma^i_jk of a metric on M given as n x n expressions in x."""
    n = len(metric)
    g = eval_jets(metric, u, m + 1)
    dg = g.grad(slice(0, n))                                         # [a, b, c] = d_c g_ab
    low = dg.c
    sym = low.transpose(0, 1, 3, 2) + np.swapaxes(low, 1, 2) - np.moveaxis(low, 3, 1)
    return contract("is,sjk->ijk", g.truncate(m).inv(), dg._new(sym)) * 0.5


def _prolongation_jets(metric, u, n, k, m):
    """M_(1)..M_(k) as jets of order >= m along the Gamma recursion with M_(1) = gamma y^(1)."""
    gam = christoffel_x(metric, u, m + k - 1)
    y1 = variables_jet(u, gam.order, _block(n, 1))
    M1 = contract("ijm,m->ij", gam, y1)
    return _recursion(M1, lambda Mj: gamma_jet(Mj, n, k), k)


def dual_coefficients_prolongation(metric, pt: HigherPoint) -> DualCoefficients:
    """Dual coefficients determined by a Riemannian metric on M alone."""
    n, k = pt.n, pt.k
    Ms = _prolongation_jets(metric, pt.vector(k), n, k, 0)
    return DualCoefficients(tuple(M.value for M in Ms), "from-prolongation")


def primal_from_dual(dc: DualCoefficients) -> list:
    """N_(1) = M_(1), N_(a) = M_(a) - sum_{b=1}^{a-1} M_(a-b) N_(b)."""
    M = dc.M
    N = []
    for a in range(len(M)):
        acc = np.array(M[a], dtype=float)
        for b in range(a):
            acc = acc - M[a - b - 1] @ N[b]
        N.append(acc)
    return N


def dual_from_primal(N, provenance="from-primal") -> DualCoefficients:
    """Inverse of ``primal_from_dual``: M_(a) = N_(a) + sum_{b=1}^{a-1} M_(a-b) N_(b)."""
    M = []
    for a in range(len(N)):
        acc = np.array(N[a], dtype=float)
        for b in range(a):
            acc = acc + M[a - b - 1] @ N[b]
        M.append(acc)
    return DualCoefficients(tuple(M), provenance)


def _z_from(Ms, ys, n):
    """a z^(a) = a y^(a) + sum_{b=1}^{a-1} (a-b) M_(b) y^(a-b); works on arrays or jets."""
    out = []
    for a in range(1, len(Ms) + 1):
        acc = ys[a - 1] * float(a)
        for b in range(1, a):
            term = Ms[b - 1] @ ys[a - b - 1] if isinstance(ys[0], np.ndarray) else contract("ij,j->i", Ms[b - 1], ys[a - b - 1])
            acc = acc + term * float(a - b)
        out.append(acc * (1.0 / a))
    return out


def liouville_dvectors(dc: DualCoefficients, pt: HigherPoint) -> list:
    """z^(1)..z^(k) built from the dual coefficients."""
    n = pt.n
    ys = [np.asarray(pt.blocks[a], float) for a in range(dc.k)]
    return _z_from(list(dc.M), ys, n)


def prolonged_lagrangian_jet(metric, k: int):
    """(u, m) -> jet of L = g_ij(x) z^(k)i z^(k)j for the prolongation of ``metric``."""
    n = len(metric)

    def fn(u, m):
        if m + k > MAX_ORDER:
            raise OrderOverflow(m + k)
        Ms = _prolongation_jets(metric, u, n, k, m)
        Ms = [M.truncate(m) for M in Ms]
        ys = [variables_jet(u, m, _block(n, a)) for a in range(1, k + 1)]
        z = _z_from(Ms, ys, n)[-1]
        g = eval_jets(metric, u, m)
        return contract("i,i->", contract("ij,j->i", g, z), z)

    return fn


@dataclass(frozen=True)
class Prolongation:
    dual: DualCoefficients
    blocks: tuple        # (k+1) copies of the base metric in the adapted coframe
    lagrangian: float
    z: tuple


def prolong_riemannian(metric, k: int, pt: HigherPoint) -> Prolongation:
    """Prolongation of a Riemannian metric on M to T^kM."""
    _check_k(k)
    u = pt.vector(k)
    g = np.array(eval_jets(metric, u, 0).value)
    if not linalg.is_regular(g):
        raise IrregularPoint("singular base metric")
    dc = dual_coefficients_prolongation(metric, pt)
    z = liouville_dvectors(dc, pt)
    L = float(z[-1] @ g @ z[-1])
    return Prolongation(dc, tuple(g.copy() for _ in range(k + 1)), L, tuple(z))


def prolonged_space(metric, k: int, name="") -> HigherOrderSpace:
    return HigherOrderSpace(len(metric), k, prolonged_lagrangian_jet(metric, k), name=name)


# -- mechanical systems of order k -------------------------------------------


@dataclass(frozen=True)
class HigherOrderSystem:
    """Order-k Lagrangian system with contravariant external force F^i."""

    space: HigherOrderSpace
    force: Optional[tuple] = None

    @property
    def n(self):
        return self.space.n

    @property
    def k(self):
        return self.space.k


def higher_order_evolution_system(sys: HigherOrderSystem, state) -> np.ndarray:
    """First-order field on (x, y^(1)..y^(k)).

    x' = y^(1), (y^(a))' = (a+1) y^(a+1), (y^(k))' = -(k+1) G° + 1/2 F.
    """
    n, k = sys.n, sys.k
    u = np.asarray(state, float)
    out = np.empty_like(u)
    out[:n] = u[n:2 * n]
    for a in range(1, k):
        out[_block(n, a)] = (a + 1) * u[_block(n, a + 1)]
    lj = sys.space.jet(u, 2)
    top = -(k + 1) * _semispray_jet_k(lj, n, k, sys.space.eps_reg).value
    if sys.force is not None:
        top = top + 0.5 * eval_jets(list(sys.force), u, 0).value
    out[_block(n, k)] = top
    return out


def extend_point(state, deriv, n: int, k: int) -> HigherPoint:
    """Point with the extension block y^(k+1) = (y^(k))' / (k+1) read off a field value."""
    u = np.asarray(state, float)
    ext = np.asarray(deriv, float)[_block(n, k)] / (k + 1)
    return HigherPoint.from_vector(np.concatenate([u, ext]), n, k)


def lagrange_equation_residual(sys: HigherOrderSystem, state, deriv) -> np.ndarray:
    """d/dt dL/dy^(k) - dL/dy^(k-1) - F_i at a sample, with F_i = g_ij F^j.

    Evaluated from the Lagrangian directly (not from the semispray), so it is
    an independent check of the evolution field.
    """
    n, k = sys.n, sys.k
    pt = extend_point(state, deriv, n, k)
    u = pt.vector(k + 1)
    lj = sys.space.jet(u, 2)
    lk = lj.grad(_block(n, k))
    lhs = total_derivative(lk, n, k + 1).value - lj.grad(_block(n, k - 1)).value
    if sys.force is not None:
        g = _metric_jet(lj, n, k).value
        lhs = lhs - g @ eval_jets(list(sys.force), u, 0).value
    return lhs
