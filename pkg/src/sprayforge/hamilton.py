"""Canonical geometry on the cotangent bundle: Hamilton and Cartan spaces.

Points are ``u = (x, p)``. On this side the adapted frame uses
``delta_i = d_i + N_ij d/dp_j`` (plus sign), the Poisson bracket is
``{f, g} = f_p . g_x - g_p . f_x`` and the Hamilton equations read
``xdot = dH/dp``, ``pdot = -dH/dx`` for the halved function ``H/2``.

Array conventions: ``gup[i, j] = g^ij``, ``glow[i, j] = g_ij``,
``N[i, j] = N_ij``, ``Hc[i, j, k] = H^i_jk``, ``Cc[i, j, k] = C_i^jk``,
``R[i, j, h] = R_ijh``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .errors import IrregularPoint, NullSection
from .expr import Expr, VarLayout, evaluate, parse_expr
from .jet import Jet, contract, eval_jet, eval_jets, variables_jet
from .tangent import HOMOGENEITY_SCALES, _christoffel

KINDS = ("hamilton", "cartan", "riemannian-dual")
NULL_TOL = 1e-8


@dataclass(frozen=True)
class CotangentSpaceDef:
    """``generator`` is H (hamilton, riemannian-dual) or K (cartan, H = K^2)."""

    n: int
    kind: str
    generator: Expr
    eps_reg: float = 1e-10
    name: str = ""
    check_homogeneity: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "cartan" and self.check_homogeneity:
            rng = np.random.default_rng(11)
            for _ in range(3):
                u = np.concatenate([rng.uniform(0.2, 1.2, self.n), rng.uniform(0.3, 1.0, self.n)])
                try:
                    k = evaluate(self.generator, u)
                except ArithmeticError:
                    continue
                for a in HOMOGENEITY_SCALES:
                    v = u.copy()
                    v[self.n:] *= a
                    if abs(evaluate(self.generator, v) - a * k) > 1e-9 * (1 + abs(a * k)):
                        raise ValueError("Cartan function is not 1-homogeneous in p")

    @property
    def layout(self) -> VarLayout:
        return VarLayout(self.n, side="cotangent")

    @classmethod
    def from_text(cls, n, kind, text, params=None, **kw):
        return cls(n, kind, parse_expr(text, VarLayout(n, side="cotangent"), params), **kw)


def _check_point(space, u):
    u = np.asarray(u, dtype=float)
    if u.shape != (2 * space.n,):
        raise ValueError(f"point of length {2 * space.n} expected, got {u.shape}")
    if space.kind == "cartan" and np.linalg.norm(u[space.n:]) <= NULL_TOL:
        raise NullSection(f"Cartan space evaluated on the null section (|p| <= {NULL_TOL})")
    return u


def hamiltonian_jet(space: CotangentSpaceDef, u, m: int) -> Jet:
    """Jet of H (K^2 for Cartan spaces)."""
    u = _check_point(space, u)
    j = eval_jet(space.generator, u, m)
    return j * j if space.kind == "cartan" else j


def hamiltonian_value(space, u) -> float:
    v = evaluate(space.generator, _check_point(space, u))
    return v * v if space.kind == "cartan" else v


# -- Poisson structure -------------------------------------------------------


def poisson_jets(fj: Jet, gj: Jet, n: int) -> Jet:
    """{f, g} = df/dp_i dg/dx^i - dg/dp_i df/dx^i on jets (order drops by one)."""
    xs, ps = slice(0, n), slice(n, 2 * n)
    return (contract("i,i->", fj.grad(ps), gj.grad(xs))
            - contract("i,i->", gj.grad(ps), fj.grad(xs)))


def poisson(f: Expr, g: Expr, point) -> float:
    point = np.asarray(point, dtype=float)
    n = len(point) // 2
    return float(poisson_jets(eval_jet(f, point, 1), eval_jet(g, point, 1), n).value)


def jacobi_residual(f: Expr, g: Expr, h: Expr, point) -> float:
    """{f,{g,h}} + {g,{h,f}} + {h,{f,g}}."""
    point = np.asarray(point, dtype=float)
    n = len(point) // 2
    fj, gj, hj = (eval_jet(e, point, 2) for e in (f, g, h))
    total = (poisson_jets(fj, poisson_jets(gj, hj, n), n)
             + poisson_jets(gj, poisson_jets(hj, fj, n), n)
             + poisson_jets(hj, poisson_jets(fj, gj, n), n))
    return float(total.value)


def hamilton_vector_field(space: CotangentSpaceDef, u):
    """(xdot, pdot) with xdot = d(H/2)/dp, pdot = -d(H/2)/dx."""
    n = space.n
    hj = hamiltonian_jet(space, u, 1)
    return 0.5 * hj.grad(slice(n, 2 * n)).value, -0.5 * hj.grad(slice(0, n)).value


# -- metric and connections --------------------------------------------------


def hamilton_fundamental(space: CotangentSpaceDef, u):
    """g^ij = 1/2 d^2H/dp_i dp_j and the lowered g_ij."""
    n = space.n
    ps = slice(n, 2 * n)
    h = hamiltonian_jet(space, u, 2).grad(ps).grad(ps).value
    gup = (h + h.T) * 0.25
    if not linalg.is_regular(gup, space.eps_reg):
        raise IrregularPoint(f"singular Hamilton fundamental tensor: |det| = {abs(linalg.det(gup)):.3e}")
    return gup, linalg.inv(gup)


def _canonical_N(hj: Jet, n: int, eps_reg: float):
    """N_ij = 1/4 {g_ij, H} - 1/4 (g_ik H_{p_k x^j} + g_jk H_{p_k x^i}), as a jet."""
    xs, ps = slice(0, n), slice(n, 2 * n)
    hp = hj.grad(ps)
    hx = hj.grad(xs)
    h = hp.grad(ps)
    gup = (h + h.T) * 0.25
    if not linalg.is_regular(gup.c[0], eps_reg):
        raise IrregularPoint("singular Hamilton fundamental tensor")
    glow = gup.inv()
    glow = (glow + glow.T) * 0.5
    bracket = (contract("ijk,k->ij", glow.grad(ps), hx)
               - contract("ijk,k->ij", glow.grad(xs), hp))
    mixed = contract("ik,kj->ij", glow, hp.grad(xs))           # g_ik d2H/dp_k dx^j
    return (bracket - mixed - mixed.T) * 0.25, gup, glow


def canonical_nonlinear_connection_H(space: CotangentSpaceDef, u) -> np.ndarray:
    hj = hamiltonian_jet(space, u, 3)
    return _canonical_N(hj, space.n, space.eps_reg)[0].value


def cartan_nonlinear_connection(space: CotangentSpaceDef, u) -> np.ndarray:
    """N_ij = gamma^0_ij - 1/2 gamma^0_h0 d g_ij / dp_h (Cartan spaces)."""
    if space.kind != "cartan":
        raise ValueError("dedicated Cartan route needs a cartan space")
    u = _check_point(space, u)
    n = space.n
    xs, ps = slice(0, n), slice(n, 2 * n)
    hj = hamiltonian_jet(space, u, 3)
    glow = (hj.grad(ps).grad(ps) * 0.5).inv()                  # order 1
    g = glow.value
    gup = linalg.inv(g)
    dgx = glow.grad(xs).value                                   # [a, b, c] = d_c g_ab
    low = 0.5 * (np.einsum("ikj->ijk", dgx) + dgx - np.einsum("jki->ijk", dgx))
    gamma = np.einsum("is,sjk->ijk", gup, low)                  # gamma^i_jh
    p = u[ps]
    pup = gup @ p
    g0 = np.einsum("ijh,i->jh", gamma, p)                       # gamma^0_jh
    g0h0 = g0 @ pup                                             # gamma^0_h0
    dgp = glow.grad(ps).value                                   # [i, j, h] = d g_ij / dp_h
    return g0 - 0.5 * np.einsum("h,ijh->ij", g0h0, dgp)


def delta_H(tj: Jet, nj: Jet, n: int) -> Jet:
    """delta_k T = d_k T + N_kj dT/dp_j, new last axis k."""
    dx = tj.grad(slice(0, n))
    dp = tj.grad(slice(n, 2 * n))
    return dx + contract("...j,kj->...k", dp, nj)


@dataclass
class CotangentBundle:
    point: np.ndarray
    gup: np.ndarray
    glow: np.ndarray
    N: np.ndarray
    R: np.ndarray
    Hc: np.ndarray
    Cc: np.ndarray
    jets: dict = field(default_factory=dict, repr=False)


def cotangent_bundle(space: CotangentSpaceDef, u, connection: Optional[Jet] = None) -> CotangentBundle:
    """Canonical N, its curvature and the metrical connection at ``u``.

    ``connection`` (a jet of N_ij of order >= 1) overrides the canonical N;
    mechanical systems use this for their evolution connection.
    """
    u = _check_point(space, u)
    n = space.n
    ps = slice(n, 2 * n)
    hj = hamiltonian_jet(space, u, 4)
    nj, gup, glow = _canonical_N(hj, n, space.eps_reg)
    if connection is not None:
        nj = connection
    nj = nj.truncate(1)
    dN = delta_H(nj, nj, n).value                               # [a, b, c] = delta_c N_ab
    R = dN.transpose(1, 0, 2) - dN.transpose(1, 2, 0)           # R_ijh = delta_h N_ji - delta_j N_hi
    Hj = _christoffel(glow, gup, delta_H(glow, nj, n))
    Cj = _christoffel(gup, glow, gup.grad(ps)) * -1.0
    return CotangentBundle(u, gup.value, glow.value, nj.value, R, Hj.value, Cj.value,
                           jets=dict(N=nj, gup=gup, glow=glow, H=hj, Hc=Hj, Cc=Cj))


def metrical_connection_H(space, u):
    b = cotangent_bundle(space, u)
    return b.Hc, b.Cc


def curvature_H(space, u) -> np.ndarray:
    return cotangent_bundle(space, u).R


def covariant_derivative_H(bundle: CotangentBundle, tj: Jet, kinds: str, direction: str = "h"):
    """h (``_|k``) or v (``|^k``) covariant derivative on T*M; ``kinds`` per index 'u' or 'l'."""
    n = len(bundle.gup)
    T0 = np.asarray(tj.value, float)
    if direction == "h":
        out = np.array(delta_H(tj, bundle.jets["N"], n).value, dtype=float)
        coeff, up_axis, low_axis = bundle.Hc, 1, 0
    else:
        out = np.array(tj.grad(slice(n, 2 * n)).value, dtype=float)
        coeff, up_axis, low_axis = bundle.Cc, 0, 1
    for a, kind in enumerate(kinds):
        if kind == "u":
            out += np.moveaxis(np.tensordot(T0, coeff, axes=([a], [up_axis])), -2, a)
        else:
            out -= np.moveaxis(np.tensordot(T0, coeff, axes=([a], [low_axis])), -2, a)
    return out


def metricity_residual_H(space, u, bundle=None) -> tuple[float, float]:
    b = bundle or cotangent_bundle(space, u)
    gj = b.jets["gup"].truncate(1)
    h = covariant_derivative_H(b, gj, "uu", "h")
    v = covariant_derivative_H(b, gj, "uu", "v")
    return float(np.max(np.abs(h))), float(np.max(np.abs(v)))


def connection_symmetry(space, u) -> float:
    N = canonical_nonlinear_connection_H(space, u)
    return float(np.max(np.abs(N - N.T)))


def cyclic_curvature_residual(space, u) -> float:
    """R_ijh + R_jhi + R_hij."""
    R = curvature_H(space, u)
    return float(np.max(np.abs(R + R.transpose(1, 2, 0) + R.transpose(2, 0, 1))))


def cartan_deflections(space, u, bundle=None):
    """Delta_ij = p_i|j (expected 0) and dbar^i_j = p_j|^i (expected identity)."""
    b = bundle or cotangent_bundle(space, u)
    n = len(b.gup)
    pj = variables_jet(b.point, 1, slice(n, 2 * n))
    Delta = covariant_derivative_H(b, pj, "l", "h")              # [i, j] = p_i|j
    dv = covariant_derivative_H(b, pj, "l", "v")                 # [j, i] = p_j|^i
    return Delta, dv.T


def cartan_identities(space, u, bundle=None) -> dict:
    """Residuals of the Cartan-space relations between K, p^i and the connection."""
    if space.kind != "cartan":
        raise ValueError("Cartan identities need a cartan space")
    b = bundle or cotangent_bundle(space, u)
    n = space.n
    p = b.point[n:]
    pup = b.gup @ p
    kj = eval_jet(space.generator, b.point, 1)
    k = kj.value
    Delta, dbar = cartan_deflections(space, u, b)
    k_h = covariant_derivative_H(b, kj, "", "h")                # K_|h
    k_v = covariant_derivative_H(b, kj, "", "v")                # K|^h
    return {
        "K2_vs_pp": abs(k * k - float(p @ pup)),
        "Delta": float(np.max(np.abs(Delta))),
        "dbar_minus_identity": float(np.max(np.abs(dbar - np.eye(n)))),
        "K_h": float(np.max(np.abs(k_h))),
        "K_v_minus_p_over_K": float(np.max(np.abs(k_v - pup / k))),
    }
