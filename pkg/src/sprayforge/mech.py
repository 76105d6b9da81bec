"""Mechanical systems: a space plus external forces, on TM or on T*M.

Convention used everywhere in this module: the evolution equations are
``E_i(L) = F_i`` with L the generating Lagrangian (L = 2T for Riemannian
systems, F^2 for Finslerian ones). In semispray form

    ydot^i = -2 G°^i + 1/2 F^i,        G^i = G°^i - 1/4 F^i,

and the energy law reads ``d E_L / dt = F_i y^i``. For a Riemannian
system where the kinetic energy T = L/2 is the natural quantity this is
``dT/dt = 1/2 F_i y^i``; ``ENERGY_FACTOR`` keeps that bookkeeping.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .expr import Expr, VarLayout, evaluate, parse_expr
from .hamilton import (CotangentSpaceDef, _canonical_N, cotangent_bundle, hamiltonian_jet)
from .jet import Jet, basis, contract, eval_jet, eval_jets, variables_jet
from .tangent import (TangentSpaceDef, _build, _semispray_jet, delta, lagrangian_jet, semispray_value)

CLASSES = ("riemannian", "finslerian", "lagrangian", "hamiltonian", "cartanian")
# multiplies both E_L and F_i y^i in the energy law of each class
ENERGY_FACTOR = {"riemannian": 0.5, "finslerian": 1.0, "lagrangian": 1.0,
                 "hamiltonian": 1.0, "cartanian": 1.0}
_KIND_FOR_CLASS = {"riemannian": ("riemannian", "lagrange"), "finslerian": ("finsler",),
                   "lagrangian": ("lagrange", "riemannian", "finsler"),
                   "hamiltonian": ("hamilton", "riemannian-dual", "cartan"), "cartanian": ("cartan",)}
DISSIPATION_TOL = 1e-12


@dataclass(frozen=True)
class ExternalForce:
    """Force components as expressions; ``representation`` is contravariant or covariant."""

    components: tuple
    representation: str = "contravariant"

    def __post_init__(self):
        if self.representation not in ("contravariant", "covariant"):
            raise ValueError("force representation must be contravariant or covariant")

    @classmethod
    def from_text(cls, texts, layout: VarLayout, representation="contravariant", params=None):
        return cls(tuple(parse_expr(t, layout, params) for t in texts), representation)


@dataclass(frozen=True)
class MechanicalSystem:
    space: object                    # TangentSpaceDef or CotangentSpaceDef
    force: Optional[ExternalForce] = None
    system_class: str = "lagrangian"
    name: str = ""

    def __post_init__(self):
        if self.system_class not in CLASSES:
            raise ValueError(f"unknown system class {self.system_class!r}")
        if self.space.kind not in _KIND_FOR_CLASS[self.system_class]:
            raise ValueError(f"{self.system_class} system cannot be built on a {self.space.kind} space")
        if self.force is not None and len(self.force.components) != self.space.n:
            raise ValueError("force needs exactly n components")

    @property
    def n(self):
        return self.space.n

    @property
    def tangent(self) -> bool:
        return isinstance(self.space, TangentSpaceDef)


# -- forces ------------------------------------------------------------------


def _metric_value(sys: MechanicalSystem, u) -> np.ndarray:
    """g_ij on TM, g^ij on T*M, always evaluated at the current point."""
    n = sys.n
    fib = slice(n, 2 * n)
    if sys.tangent:
        return lagrangian_jet(sys.space, u, 2).grad(fib).grad(fib).value * 0.5
    return hamiltonian_jet(sys.space, u, 2).grad(fib).grad(fib).value * 0.5


def force_jet(sys: MechanicalSystem, u, m: int, covariant: bool) -> Jet:
    """Jet of F^i (or F_i) of order m, converting with the local metric when needed."""
    u = np.asarray(u, float)
    n = sys.n
    if sys.force is None:
        return Jet.constant(basis(2 * n), m, np.zeros(n), u)
    raw = eval_jets(list(sys.force.components), u, m)
    given_cov = sys.force.representation == "covariant"
    if given_cov == covariant:
        return raw
    fib = slice(n, 2 * n)
    if sys.tangent:
        g = lagrangian_jet(sys.space, u, m + 2).grad(fib).grad(fib) * 0.5    # g_ij
    else:
        g = (hamiltonian_jet(sys.space, u, m + 2).grad(fib).grad(fib) * 0.5).inv()  # g_ij from g^ij
    if covariant:
        return contract("ij,j->i", g, raw)
    return contract("ij,j->i", g.inv(), raw)


def force_values(sys: MechanicalSystem, u, covariant: bool) -> np.ndarray:
    if sys.force is None:
        return np.zeros(sys.n)
    raw = np.array([evaluate(e, u) for e in sys.force.components])
    if (sys.force.representation == "covariant") == covariant:
        return raw
    g = _metric_value(sys, u)
    if not sys.tangent:
        g = linalg.inv(g)
    return g @ raw if covariant else linalg.solve(g, raw)


def conversion_roundtrip(sys: MechanicalSystem, u) -> float:
    """|F^i -> F_i -> F^i - F^i| using the metric at u."""
    g = _metric_value(sys, u)
    if not sys.tangent:
        g = linalg.inv(g)
    up = force_values(sys, u, covariant=False)
    return float(np.max(np.abs(linalg.solve(g, g @ up) - up)))


# -- tangent side ------------------------------------------------------------


def evolution_semispray(sys: MechanicalSystem, u) -> np.ndarray:
    """G^i = G°^i - 1/4 F^i."""
    g0 = semispray_value(sys.space, u)
    return g0 - 0.25 * force_values(sys, u, covariant=False)


def _evolution_N_jet(sys: MechanicalSystem, u, lj: Jet) -> Jet:
    n = sys.n
    ys = slice(n, 2 * n)
    if sys.space.connection is not None:
        n0 = eval_jets(sys.space.connection, u, lj.order - 3)
    else:
        n0 = _semispray_jet(lj, n, sys.space.eps_reg).grad(ys)
    fj = force_jet(sys, u, n0.order + 1, covariant=False)
    return n0 - fj.grad(ys) * 0.25


def evolution_nonlinear_connection(sys: MechanicalSystem, u) -> np.ndarray:
    """N^i_j = N°^i_j - 1/4 dF^i/dy^j."""
    u = np.asarray(u, float)
    return _evolution_N_jet(sys, u, lagrangian_jet(sys.space, u, 3)).value


def evolution_bundle(sys: MechanicalSystem, u, curvature=False):
    """Tangent-geometry bundle built on the evolution connection instead of the canonical one."""
    u = np.asarray(u, float)
    conn = lambda lj: _evolution_N_jet(sys, u, lj).truncate(1)
    return _build(sys.space, u, curvature, connection_fn=conn)


def force_tensors(sys: MechanicalSystem, u):
    """Helicoidal P_ij = 1/2 (dF_i/dy^j - dF_j/dy^i) and symmetric Q_ij."""
    n = sys.n
    d = force_jet(sys, np.asarray(u, float), 1, covariant=True).grad(slice(n, 2 * n)).value
    return 0.5 * (d - d.T), 0.5 * (d + d.T)


def evolution_rhs(sys: MechanicalSystem, u) -> np.ndarray:
    """State derivative (xdot, ydot) for tangent systems, (xdot, pdot) for cotangent ones."""
    u = np.asarray(u, float)
    n = sys.n
    if not sys.tangent:
        xd, pd = hamiltonian_evolution_field(sys, u)
        return np.concatenate([xd, pd])
    return np.concatenate([u[n:], -2.0 * evolution_semispray(sys, u)])


def energy_value(sys: MechanicalSystem, u) -> float:
    """Class-scaled energy: T for Riemannian systems, E_L otherwise, H on T*M."""
    u = np.asarray(u, float)
    n = sys.n
    if not sys.tangent:
        return float(hamiltonian_jet(sys.space, u, 0).value)
    lj = lagrangian_jet(sys.space, u, 1)
    el = float(u[n:] @ lj.grad(slice(n, 2 * n)).value - lj.value)
    return ENERGY_FACTOR[sys.system_class] * el


def energy_variation_residual(sys: MechanicalSystem, u, udot) -> float:
    """|dE/dt - factor * F_i xdot^i| at one trajectory sample.

    dE/dt comes from the chain rule (energy gradient from jets, times the
    sampled state derivative), not from differencing the trajectory.
    """
    u = np.asarray(u, float)
    udot = np.asarray(udot, float)
    n = sys.n
    fac = ENERGY_FACTOR[sys.system_class]
    if sys.tangent:
        lj = lagrangian_jet(sys.space, u, 2)
        ys = slice(n, 2 * n)
        ly = lj.grad(ys)
        el = contract("i,i->", ly, variables_jet(u, 1, ys)) - lj.truncate(1)
        dedt = fac * float(el.grad(slice(None)).value @ udot)
        rhs = fac * float(force_values(sys, u, covariant=True) @ u[n:])
    else:
        dedt = float(hamiltonian_jet(sys.space, u, 1).grad(slice(None)).value @ udot)
        rhs = float(force_values(sys, u, covariant=True) @ udot[:n])
    return abs(dedt - rhs)


def dissipativity(sys: MechanicalSystem, u):
    """Sign of g_ij F^i y^j (tangent) or F_i xdot^i (cotangent)."""
    u = np.asarray(u, float)
    n = sys.n
    if sys.tangent:
        val = float(force_values(sys, u, covariant=True) @ u[n:])
    else:
        xd, _ = hamiltonian_evolution_field(sys, u)
        val = float(force_values(sys, u, covariant=True) @ xd)
    if val < -DISSIPATION_TOL:
        return "dissipative", val
    if val > DISSIPATION_TOL:
        return "accretive", val
    return "neutral", val


def _S(tj: Jet, u, G: np.ndarray, n: int):
    """Evolution semispray S = y^i d/dx^i - 2 G^i d/dy^i applied to a jet."""
    return (np.tensordot(tj.grad(slice(0, n)).value, u[n:], axes=([-1], [0]))
            - 2.0 * np.tensordot(tj.grad(slice(n, 2 * n)).value, G, axes=([-1], [0])))


def dynamical_derivative(sys: MechanicalSystem, u, X) -> np.ndarray:
    """nabla X^i = S(X^i) + X^j N^i_j for a d-vector field given by expressions."""
    u = np.asarray(u, float)
    xj = eval_jets(list(X), u, 1)
    G = evolution_semispray(sys, u)
    N = evolution_nonlinear_connection(sys, u)
    return _S(xj, u, G, sys.n) + N @ xj.value


def nabla_g(sys: MechanicalSystem, u) -> np.ndarray:
    """nabla g_ij = S(g_ij) - g_sj N^s_i - g_is N^s_j."""
    u = np.asarray(u, float)
    n = sys.n
    lj = lagrangian_jet(sys.space, u, 3)
    gj = lj.grad(slice(n, 2 * n)).grad(slice(n, 2 * n)) * 0.5
    G = evolution_semispray(sys, u)
    N = _evolution_N_jet(sys, u, lj).value
    g = gj.value
    return _S(gj, u, G, n) - N.T @ g - g @ N


def nabla_g_residual(sys: MechanicalSystem, u) -> np.ndarray:
    """nabla g - 1/2 Q, which vanishes for the evolution connection."""
    _, Q = force_tensors(sys, u)
    return nabla_g(sys, u) - 0.5 * Q


def system_em_tensor(sys: MechanicalSystem, u) -> np.ndarray:
    """Electromagnetic tensor of the system from the closed-form decomposition.

    F = F° + 1/4 P + 1/4 Fcheck with
    Fcheck_ij = (d F^r/dy^j C_irs - d F^r/dy^i C_jrs) y^s; the last term
    vanishes for Riemannian and Finslerian systems (C_irs y^s = 0).
    """
    u = np.asarray(u, float)
    n = sys.n
    b0 = _build(sys.space, u)
    P, _ = force_tensors(sys, u)
    dF = force_jet(sys, u, 1, covariant=False).grad(slice(n, 2 * n)).value   # [r, j] = dF^r/dy^j
    c0 = np.einsum("irs,s->ir", b0.cartan, u[n:])                             # C_irs y^s
    A = np.einsum("rj,ir->ij", dF, c0)
    return b0.F + 0.25 * P + 0.25 * (A - A.T)


def system_em_tensor_direct(sys: MechanicalSystem, u) -> np.ndarray:
    """Same tensor from the deflection of the evolution connection (independent route)."""
    return evolution_bundle(sys, u).F


def kahler_obstruction(sys: MechanicalSystem, u):
    """(max |R_ijk + R_jki + R_kij|, max |g_is B^s_jk - g_js B^s_ik|) for the evolution N."""
    b = evolution_bundle(sys, u)
    Rl = np.einsum("ih,hjk->ijk", b.g, b.R)
    cyc = Rl + Rl.transpose(1, 2, 0) + Rl.transpose(2, 0, 1)
    gB = np.einsum("is,sjk->ijk", b.g, b.B)
    return float(np.max(np.abs(cyc))), float(np.max(np.abs(gB - gB.transpose(1, 0, 2))))


# -- cotangent side ----------------------------------------------------------


def hamiltonian_evolution_field(sys: MechanicalSystem, u):
    """xdot = d(H/2)/dp, pdot = -d(H/2)/dx + 1/2 F_i."""
    u = np.asarray(u, float)
    n = sys.n
    hj = hamiltonian_jet(sys.space, u, 1)
    gr = hj.grad(slice(None)).value
    return 0.5 * gr[n:], -0.5 * gr[:n] + 0.5 * force_values(sys, u, covariant=True)


def _sigma_h_N_jet(sys: MechanicalSystem, u, hj: Jet) -> Jet:
    n = sys.n
    n0, gup, glow = _canonical_N(hj, n, sys.space.eps_reg)
    fj = force_jet(sys, u, n0.order + 1, covariant=True)
    dF = fj.grad(slice(n, 2 * n))                                # [j, h] = dF_j/dp_h
    return n0 + contract("ih,jh->ij", glow.truncate(n0.order), dF) * 0.25


def sigma_h_nonlinear_connection(sys: MechanicalSystem, u) -> np.ndarray:
    """N_ij = N°_ij + 1/4 g_ih dF_j/dp_h."""
    u = np.asarray(u, float)
    return _sigma_h_N_jet(sys, u, hamiltonian_jet(sys.space, u, 3)).value


def sigma_h_bundle(sys: MechanicalSystem, u):
    u = np.asarray(u, float)
    nj = _sigma_h_N_jet(sys, u, hamiltonian_jet(sys.space, u, 4))
    return cotangent_bundle(sys.space, u, connection=nj)
