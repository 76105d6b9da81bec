"""Canonical geometry on the tangent bundle of a Lagrange, Finsler or GL space.

Every object is assembled from jets of the generating function at a
single point ``u = (x, y)``. The natural jet order is 4: g carries two
y-derivatives of L, the semispray one more x-derivative, N one more
y-derivative and the curvature of N one more x-derivative.

Index conventions for returned arrays (0-based):

* ``N[i, j] = N^i_j``
* ``Lc[i, j, k] = L^i_jk``, ``Cc[i, j, k] = C^i_jk`` (and likewise B, t, R)
* lowered tensors carry all indices in natural order, e.g. ``F[i, j]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import linalg
from .errors import IrregularPoint, NullSection
from .expr import Expr, VarLayout, evaluate, parse_expr
from .jet import Jet, contract, eval_jet, eval_jets, variables_jet

KINDS = ("lagrange", "finsler", "riemannian", "generalized-lagrange")
NULL_TOL = 1e-8
HOMOGENEITY_SCALES = (0.5, 2.0, 3.0)


@dataclass(frozen=True)
class TangentSpaceDef:
    """Immutable description of a space on TM.

    ``generator`` is L (lagrange), F (finsler, L = F^2) or the quadratic
    form g_ij(x) y^i y^j (riemannian). GL spaces give ``metric`` entries.
    ``connection`` optionally replaces the canonical N^i_j by explicit
    expressions (used for spaces whose preferred connection is not
    the one generated by the semispray).
    """

    n: int
    kind: str
    generator: Optional[Expr] = None
    metric: Optional[tuple] = None
    connection: Optional[tuple] = None
    eps_reg: float = 1e-10
    name: str = ""
    check_homogeneity: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "generalized-lagrange":
            if self.metric is None or len(self.metric) != self.n:
                raise ValueError("generalized-lagrange spaces need an n x n metric table")
        elif self.generator is None:
            raise ValueError(f"{self.kind} spaces need a generating expression")
        if self.kind == "finsler" and self.check_homogeneity:
            _construction_homogeneity(self)

    @property
    def layout(self) -> VarLayout:
        return VarLayout(self.n)

    @classmethod
    def from_text(cls, n, kind, text=None, params=None, metric=None, connection=None, **kw):
        lay = VarLayout(n)
        gen = parse_expr(text, lay, params) if text is not None else None
        met = None if metric is None else tuple(
            tuple(parse_expr(s, lay, params) for s in row) for row in metric)
        con = None if connection is None else tuple(
            tuple(parse_expr(s, lay, params) for s in row) for row in connection)
        return cls(n, kind, gen, met, con, **kw)


def _construction_homogeneity(space):
    rng = np.random.default_rng(7)
    hits = 0
    for _ in range(12):
        u = np.concatenate([rng.uniform(0.2, 1.2, space.n), rng.uniform(0.2, 1.0, space.n)])
        try:
            f = evaluate(space.generator, u)
            for a in HOMOGENEITY_SCALES:
                v = u.copy()
                v[space.n:] *= a
                if abs(evaluate(space.generator, v) - a * f) > 1e-9 * (1 + abs(a * f)):
                    raise ValueError(f"Finsler function is not 1-homogeneous in y at {u.tolist()}")
            hits += 1
        except ArithmeticError:
            continue
        if hits >= 3:
            break


@dataclass
class MetricValue:
    point: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    det: float
    signature: tuple


@dataclass
class ConnectionBundle:
    """All N-level and connection-level objects at one point."""

    point: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    G: np.ndarray
    N: np.ndarray
    B: np.ndarray
    t: np.ndarray
    R: np.ndarray
    Lc: np.ndarray
    Cc: np.ndarray
    D: np.ndarray
    d: np.ndarray
    F: np.ndarray
    f: np.ndarray
    cartan: np.ndarray
    curvature: Optional[dict] = None
    orders: dict = field(default_factory=dict)


# -- jets of the basic fields ------------------------------------------------


def _check_point(space, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (2 * space.n,):
        raise ValueError(f"point of length {2 * space.n} expected, got {u.shape}")
    if space.kind == "finsler" and np.linalg.norm(u[space.n:]) <= NULL_TOL:
        raise NullSection(f"Finsler space evaluated on the null section (|y| <= {NULL_TOL})")
    return u


def lagrangian_jet(space: TangentSpaceDef, u, m: int) -> Jet:
    """Jet of the Lagrangian (F^2 for Finsler, absolute energy for GL)."""
    u = _check_point(space, u)
    if space.kind == "finsler":
        f = eval_jet(space.generator, u, m)
        return f * f
    if space.kind == "generalized-lagrange":
        g = eval_jets(space.metric, u, m)
        y = variables_jet(u, m, slice(space.n, 2 * space.n))
        return contract("i,i->", contract("ij,j->i", g, y), y)
    return eval_jet(space.generator, u, m)


def _metric_from_lagrangian(lj: Jet, n: int) -> Jet:
    ys = slice(n, 2 * n)
    h = lj.grad(ys).grad(ys)
    return (h + h.T) * 0.25          # symmetric to the last bit


def metric_jet(space: TangentSpaceDef, u, m: int) -> Jet:
    """Jet of g_ij of order m (entries directly for GL, else the halved y-Hessian)."""
    if space.kind == "generalized-lagrange":
        return eval_jets(space.metric, _check_point(space, u), m)
    return _metric_from_lagrangian(lagrangian_jet(space, u, m + 2), space.n)


def _regular_inverse(g: np.ndarray, eps_reg: float, what="fundamental tensor"):
    if not linalg.is_regular(g, eps_reg):
        raise IrregularPoint(f"singular {what}: |det g| = {abs(linalg.det(g)):.3e}")
    return linalg.inv(g)


def _jet_inverse(gj: Jet, eps_reg: float, what="fundamental tensor") -> Jet:
    _regular_inverse(gj.c[0], eps_reg, what)
    return gj.inv()


def fundamental_tensor(space: TangentSpaceDef, u) -> MetricValue:
    u = _check_point(space, u)
    if space.kind == "generalized-lagrange":
        g = np.array([[evaluate(e, u) for e in row] for row in space.metric])
    else:
        g = _metric_from_lagrangian(lagrangian_jet(space, u, 2), space.n).value
    ginv = _regular_inverse(g, space.eps_reg)
    ev = np.linalg.eigvalsh(0.5 * (g + g.T))
    return MetricValue(u, g, ginv, linalg.det(g), (int(np.sum(ev > 0)), int(np.sum(ev < 0))))


def _semispray_jet(lj: Jet, n: int, eps_reg: float) -> Jet:
    """G^i = 1/4 g^ij (d^2L/dy^j dx^k y^k - dL/dx^j) as a jet two orders below ``lj``."""
    xs, ys = slice(0, n), slice(n, 2 * n)
    ly = lj.grad(ys)
    lx = lj.grad(xs)
    g = ly.grad(ys) * 0.5
    lyx = ly.grad(xs)                                  # [j, k] = d2L/dy^j dx^k
    ginv = _jet_inverse(g, eps_reg)
    y = variables_jet(lj.point, g.order, ys)
    rhs = contract("jk,k->j", lyx, y) - lx
    return contract("ij,j->i", ginv, rhs) * 0.25


def el_covector(space: TangentSpaceDef, x, y, ydot) -> np.ndarray:
    """E_i = dL/dx^i - (d^2L/dy^i dx^k y^k + 2 g_ij ydot^j)."""
    n = space.n
    u = np.concatenate([np.asarray(x, float), np.asarray(y, float)])
    lj = lagrangian_jet(space, u, 2)
    xs, ys = slice(0, n), slice(n, 2 * n)
    ly = lj.grad(ys)
    g = ly.grad(ys).value * 0.5
    lyx = ly.grad(xs).value
    return lj.grad(xs).value - (lyx @ u[ys] + 2.0 * g @ np.asarray(ydot, float))


def energy(space: TangentSpaceDef, u) -> float:
    """E_L = y^i dL/dy^i - L."""
    u = _check_point(space, u)
    lj = lagrangian_jet(space, u, 1)
    return float(u[space.n:] @ lj.grad(slice(space.n, 2 * space.n)).value - lj.value)


def canonical_semispray(space: TangentSpaceDef, u) -> np.ndarray:
    return _semispray_jet(lagrangian_jet(space, u, 2), space.n, space.eps_reg).value


def semispray_value(space: TangentSpaceDef, u) -> np.ndarray:
    """Same as ``canonical_semispray`` from a single Hessian solve (integrator fast path)."""
    u = _check_point(space, u)
    n = space.n
    gr, hess = lagrangian_jet(space, u, 2).gradient_hessian()
    g = 0.5 * hess[n:, n:]
    if not linalg.is_regular(g, space.eps_reg):
        raise IrregularPoint("singular fundamental tensor")
    return 0.25 * linalg.solve(g, hess[n:, :n] @ u[n:] - gr[:n])


def gl_absolute_energy_semispray(space: TangentSpaceDef, u) -> np.ndarray:
    """Semispray of the absolute energy g_ij(x,y) y^i y^j treated as a Lagrangian."""
    if space.kind != "generalized-lagrange":
        raise ValueError("absolute-energy semispray needs a generalized-lagrange space")
    lj = lagrangian_jet(space, u, 2)
    h = _metric_from_lagrangian(lj, space.n).value
    if not linalg.is_regular(h, space.eps_reg):
        raise IrregularPoint("weakly irregular GL metric: absolute energy has a singular Hessian")
    return _semispray_jet(lj, space.n, space.eps_reg).value


def _connection_jet(space, u, lj: Jet) -> Jet:
    """Jet of N^i_j one order below the semispray jet."""
    if space.connection is not None:
        return eval_jets(space.connection, u, lj.order - 3)
    n = space.n
    return _semispray_jet(lj, n, space.eps_reg).grad(slice(n, 2 * n))


def nonlinear_connection(space: TangentSpaceDef, u) -> np.ndarray:
    u = _check_point(space, u)
    return _connection_jet(space, u, lagrangian_jet(space, u, 3)).value


def delta(tj: Jet, nj: Jet, n: int) -> Jet:
    """delta_k T = d_k T - N^m_k dT/dy^m, new last axis k."""
    dx = tj.grad(slice(0, n))
    dy = tj.grad(slice(n, 2 * n))
    return dx - contract("...m,mk->...k", dy, nj)


def delta_derivative(space: TangentSpaceDef, u, f: Expr, i: int) -> float:
    """delta f / delta x^i for a scalar expression (``i`` 0-based)."""
    u = _check_point(space, u)
    nj = _connection_jet(space, u, lagrangian_jet(space, u, 3))
    return float(delta(eval_jet(f, u, 1), nj, space.n).value[i])


def _christoffel(gj: Jet, ginv: Jet, dg: Jet) -> Jet:
    """1/2 g^is (dg_sk/dj + dg_js/dk - dg_jk/ds) where dg[a, b, c] = d_c g_ab."""
    low = dg.c
    # sym[z, s, j, k] = d_j g_sk + d_k g_js - d_s g_jk
    sym = low.transpose(0, 1, 3, 2) + np.swapaxes(low, 1, 2) - np.moveaxis(low, 3, 1)
    return contract("is,sjk->ijk", ginv, dg._new(sym)) * 0.5


def _build(space: TangentSpaceDef, u, curvature: bool = False, connection_fn=None) -> ConnectionBundle:
    """All connection data at u; ``connection_fn(L jet) -> N jet`` replaces the canonical N."""
    u = _check_point(space, u)
    n = space.n
    xs, ys = slice(0, n), slice(n, 2 * n)
    lj = lagrangian_jet(space, u, 4)
    gsys = _semispray_jet(lj, n, space.eps_reg)                 # order 2
    if connection_fn is not None:
        nj = connection_fn(lj)
    elif space.connection is not None:
        nj = eval_jets(space.connection, u, 1)
    else:
        nj = gsys.grad(ys)                                       # order 1
    if space.kind == "generalized-lagrange":
        gj = eval_jets(space.metric, u, 2)
    else:
        gj = _metric_from_lagrangian(lj, n)                      # order 2
    ginv = _jet_inverse(gj, space.eps_reg)
    dg_h = delta(gj, nj, n)                                      # [a, b, c] = delta_c g_ab, order 1
    dg_v = gj.grad(ys)                                           # order 1
    Lj = _christoffel(gj, ginv, dg_h)
    Cj = _christoffel(gj, ginv, dg_v)

    B = nj.grad(ys).value                                        # [i, j, k] = dN^i_j/dy^k
    t = B - B.transpose(0, 2, 1)
    dN = delta(nj, nj, n).value                                  # [i, j, k] = delta_k N^i_j
    R = dN - dN.transpose(0, 2, 1)                               # R^i_jk = delta_k N^i_j - delta_j N^i_k

    y1 = variables_jet(u, 1, ys)
    Dj = contract("isj,s->ij", Lj, y1) - nj.truncate(1)
    dj = contract("isj,s->ij", Cj, y1) + np.eye(n)
    g1 = gj.truncate(1)
    Dlow = contract("is,sj->ij", g1, Dj)
    dlow = contract("is,sj->ij", g1, dj)
    Fj = (Dlow - Dlow.T) * 0.5
    fj = (dlow - dlow.T) * 0.5
    g0 = gj.value
    Cc = Cj.value
    cartan = np.einsum("is,sjk->ijk", g0, Cc)
    b = ConnectionBundle(
        point=u, g=g0, ginv=ginv.value, G=gsys.value, N=nj.value, B=B, t=t, R=R,
        Lc=Lj.value, Cc=Cc, D=Dj.value, d=dj.value, F=Fj.value, f=fj.value, cartan=cartan,
        orders={"L": 4, "g": 2, "G": 2, "N": 1, "connection": 1, "R": 0, "F": 1},
    )
    b._jets = dict(L=lj, g=gj, ginv=ginv, N=nj, Lc=Lj, Cc=Cj, F=Fj, f=fj, D=Dj, d=dj)
    if curvature:
        b.curvature = _curvatures(b, n)
    return b


def connection_bundle(space: TangentSpaceDef, u, curvature: bool = False) -> ConnectionBundle:
    return _build(space, u, curvature)


def _curvatures(b: ConnectionBundle, n: int) -> dict:
    jets = b._jets
    Lj, Cj, nj = jets["Lc"], jets["Cc"], jets["N"]
    Lc, Cc = b.Lc, b.Cc
    dL = delta(Lj, nj, n).value                       # [i, h, j, k] = delta_k L^i_hj
    vL = Lj.grad(slice(n, 2 * n)).value               # [i, h, j, k] = dL^i_hj/dy^k
    dC = delta(Cj, nj, n).value
    vC = Cj.grad(slice(n, 2 * n)).value
    # R_h^i_jk = delta_k L^i_hj - delta_j L^i_hk + L^s_hj L^i_sk - L^s_hk L^i_sj + C^i_hs R^s_jk
    RR = (dL - dL.transpose(0, 1, 3, 2)
          + np.einsum("shj,isk->ihjk", Lc, Lc) - np.einsum("shk,isj->ihjk", Lc, Lc)
          + np.einsum("ihs,sjk->ihjk", Cc, b.R))
    # P^s_jk = dN^s_j/dy^k - L^s_kj
    Pt = b.B - Lc.transpose(0, 2, 1)
    # C^i_hk|j = delta_j C^i_hk + L^i_sj C^s_hk - L^s_hj C^i_sk - L^s_kj C^i_hs
    Ch = (dC
          + np.einsum("isj,shk->ihkj", Lc, Cc) - np.einsum("shj,isk->ihkj", Lc, Cc)
          - np.einsum("skj,ihs->ihkj", Lc, Cc))
    # P_h^i_jk = dL^i_hj/dy^k - C^i_hk|j + C^i_hs P^s_jk
    PP = vL - Ch.transpose(0, 1, 3, 2) + np.einsum("ihs,sjk->ihjk", Cc, Pt)
    SS = (vC - vC.transpose(0, 1, 3, 2)
          + np.einsum("shj,isk->ihjk", Cc, Cc) - np.einsum("shk,isj->ihjk", Cc, Cc))
    # stored as [h, i, j, k]
    return {"R": RR.transpose(1, 0, 2, 3), "P": PP.transpose(1, 0, 2, 3),
            "S": SS.transpose(1, 0, 2, 3), "P_torsion": Pt}


def metrical_connection(space, u):
    b = _build(space, u)
    return b.Lc, b.Cc


def torsion_curvature(space, u, curvature: bool = False):
    b = _build(space, u, curvature)
    return b.t, b.R, b.B, b.curvature


def deflection_em(space, u):
    b = _build(space, u)
    return b.D, b.d, b.F, b.f


def cartan_tensor(space, u) -> np.ndarray:
    """C_ijk = 1/4 d^3 L / dy^i dy^j dy^k (L = F^2 for Finsler)."""
    u = _check_point(space, u)
    if space.kind == "generalized-lagrange":
        raise ValueError("Cartan tensor is defined for Lagrangian generators only")
    ys = slice(space.n, 2 * space.n)
    c = lagrangian_jet(space, u, 3).grad(ys).grad(ys).grad(ys).value * 0.25
    if space.kind == "finsler":
        contr = np.einsum("s,sjk->jk", u[ys], c)
        scale = 1.0 + np.max(np.abs(c))
        if np.max(np.abs(contr)) > 1e-8 * scale:
            raise ValueError(f"Cartan tensor fails y^s C_sjk = 0 (max {np.max(np.abs(contr)):.2e})")
    return c


# -- covariant derivatives ---------------------------------------------------


def _apply_connection(base, T0, coeff, kinds, sign_upper=1.0):
    """Add one +coeff term per upper index and one -coeff term per lower index."""
    out = base.copy()
    for a, kind in enumerate(kinds):
        if kind == "u":
            x = np.tensordot(T0, coeff, axes=([a], [1]))      # ... i k
            out += np.moveaxis(x, -2, a)
        else:
            x = np.tensordot(T0, coeff, axes=([a], [0]))      # ... j k
            out -= np.moveaxis(x, -2, a)
    return out


def covariant_derivative_jet(bundle: ConnectionBundle, tj: Jet, kinds: str, direction: str = "h"):
    """Covariant derivative of a tensor jet; ``kinds`` has one 'u'/'l' per index.

    Returns an array with the derivative index appended last.
    """
    n = len(bundle.g)
    T0 = np.asarray(tj.value, float)
    if direction == "h":
        base = delta(tj, bundle._jets["N"], n).value
        return _apply_connection(np.asarray(base), T0, bundle.Lc, kinds)
    base = tj.grad(slice(n, 2 * n)).value
    return _apply_connection(np.asarray(base), T0, bundle.Cc, kinds)


def covariant_derivative(space, u, components, kinds: str, direction: str = "h", bundle=None):
    """h- (``|k``) or v- (``|_k``) covariant derivative of a d-tensor given as Exprs."""
    b = bundle or _build(space, u)
    if isinstance(components, Expr):
        tj = eval_jet(components, b.point, 1)
    else:
        tj = eval_jets(components, b.point, 1)
    return covariant_derivative_jet(b, tj, kinds, direction)


def metricity_residual(space, u, bundle=None) -> tuple[float, float]:
    """max |g_ij|k| and max |g_ij|_k| for the canonical metrical connection."""
    b = bundle or _build(space, u)
    gj = b._jets["g"].truncate(1)
    h = covariant_derivative_jet(b, gj, "ll", "h")
    v = covariant_derivative_jet(b, gj, "ll", "v")
    return float(np.max(np.abs(h))), float(np.max(np.abs(v)))


def maxwell_residual(space, u, bundle=None):
    """Left minus right side of both generalized Maxwell identities.

    h: F_ij|k + F_jk|i + F_ki|j + sum_cyc C_i0s R^s_jk
    v: F_ij|_k + F_jk|_i + F_ki|_j
    """
    b = bundle or _build(space, u)
    n = len(b.g)
    Fj = b._jets["F"]
    Fh = covariant_derivative_jet(b, Fj, "ll", "h")   # [i, j, k]
    Fv = covariant_derivative_jet(b, Fj, "ll", "v")
    y = b.point[n:]
    c0 = np.einsum("ijs,j->is", b.cartan, y)           # C_i0s
    cr = np.einsum("is,sjk->ijk", c0, b.R)
    cyc = lambda a: a + a.transpose(1, 2, 0) + a.transpose(2, 0, 1)
    return cyc(Fh) + cyc(cr), cyc(Fv)


# -- identities --------------------------------------------------------------


def berwald_identity_residual(space, u, bundle=None) -> tuple[float, float]:
    """g_ij||k - g_ik||j and its vertical analogue under the Berwald connection."""
    b = bundle or _build(space, u)
    n = len(b.g)
    gj = b._jets["g"]
    dg = delta(gj, b._jets["N"], n).value               # [i, j, k] = delta_k g_ij
    Bc = b.B                                             # B^r_ik = dN^r_i/dy^k
    gb = dg - np.einsum("rik,rj->ijk", Bc, b.g) - np.einsum("rjk,ir->ijk", Bc, b.g)
    vg = gj.grad(slice(n, 2 * n)).value
    return (float(np.max(np.abs(gb - gb.transpose(0, 2, 1)))),
            float(np.max(np.abs(vg - vg.transpose(0, 2, 1)))))


def p_tensor_symmetry(space, u, bundle=None) -> float:
    """Total-symmetry defect of P_ijk = g_is P^s_jk with P^s_jk = dN^s_j/dy^k - L^s_kj."""
    b = bundle or _build(space, u)
    P = np.einsum("is,sjk->ijk", b.g, b.B - b.Lc.transpose(0, 2, 1))
    perms = [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    return float(max(np.max(np.abs(P - P.transpose(p))) for p in perms))


def finsler_connection_cross_check(space, u) -> float:
    """|N from dG/dy - (gamma^i_j0 - C^i_jk gamma^k_00)| for Finsler spaces."""
    u = _check_point(space, u)
    n = space.n
    lj = lagrangian_jet(space, u, 3)
    gj = _metric_from_lagrangian(lj, n)                   # order 1
    g = gj.value
    ginv = linalg.inv(g)
    dgx = gj.grad(slice(0, n)).value                      # [a, b, c] = d_c g_ab
    # gamma_ijk = 1/2 (d_j g_ik + d_k g_ij - d_i g_jk)
    low = 0.5 * (np.einsum("ikj->ijk", dgx) + dgx - np.einsum("jki->ijk", dgx))
    gamma = np.einsum("is,sjk->ijk", ginv, low)
    y = u[n:]
    gj0 = gamma @ y
    g00 = gj0 @ y
    C = np.einsum("is,sjk->ijk", ginv, lj.grad(slice(n, 2 * n)).grad(slice(n, 2 * n))
                  .grad(slice(n, 2 * n)).value * 0.25)
    alt = gj0 - np.einsum("ijk,k->ij", C, g00)
    return float(np.max(np.abs(alt - nonlinear_connection(space, u))))


def homogeneity_check(f, u_samples, r: float, n: int, tol: float = 1e-10,
                      scales: Sequence[float] = HOMOGENEITY_SCALES):
    """Euler relation y.df/dy = r f plus direct scaling f(x, a y) = a^r f(x, y).

    ``f`` is an Expr or a callable ``(u, order) -> Jet`` (tensor-valued allowed).
    Returns ``(passed, max_residual)``; residuals are relative to 1 + |f|.
    """
    if isinstance(f, Expr):
        expr = f
        f = lambda u, m: eval_jet(expr, u, m)
    worst = 0.0
    for u in np.atleast_2d(np.asarray(u_samples, float)):
        base = f(u, 1)
        fv = np.asarray(base.value, float)
        pts = [u]
        for a in scales:
            v = u.copy()
            v[n:] *= a
            pts.append(v)
            fa = np.asarray(f(v, 0).value, float)
            worst = max(worst, float(np.max(np.abs(fa - a ** r * fv) / (1 + np.abs(a ** r * fv)))))
        for v in pts:
            jv = f(v, 1)
            euler = np.tensordot(np.asarray(jv.grad(slice(n, 2 * n)).value), v[n:], axes=([-1], [0]))
            val = np.asarray(jv.value, float)
            worst = max(worst, float(np.max(np.abs(euler - r * val) / (1 + np.abs(val)))))
    return worst < tol, worst


def almost_structures(space, u):
    """Almost complex 𝔽, metric 𝔾 and 2-form θ as 2n x 2n adapted-frame matrices."""
    g = fundamental_tensor(space, u).g
    n = space.n
    eye, zero = np.eye(n), np.zeros((n, n))
    F = np.block([[zero, eye], [-eye, zero]])
    G = np.block([[g, zero], [zero, g]])
    theta = np.block([[zero, -g], [g, zero]])
    return F, G, theta
