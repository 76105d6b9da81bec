"""Legendre duality between TM and T*M via damped Newton inversion.

The forward map is ``p = 1/2 dL/dy``; its Jacobian in y is the
fundamental tensor, which doubles as the Newton Jacobian. Dual
generating functions are lazy wrappers around the inverse map.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .errors import ConvergenceError, NumericalError, SingularMatrix
from .hamilton import CotangentSpaceDef, hamiltonian_jet
from .tangent import TangentSpaceDef, lagrangian_jet


@dataclass
class NewtonInfo:
    iterations: int = 0
    halvings: int = 0
    residual: float = float("nan")


def _first_second(space, u):
    """(value, gradient, halved Hessian) in the fibre variables for either side."""
    n = space.n
    fib = slice(n, 2 * n)
    if isinstance(space, TangentSpaceDef):
        j = lagrangian_jet(space, u, 2)
    else:
        j = hamiltonian_jet(space, u, 2)
    gr = j.grad(fib)
    return j.value, gr.value, gr.grad(fib).value * 0.5


def _damped_newton(fun, z0, target, tol, max_iter, max_halvings, info):
    """Solve grad/2 (z) = target where ``fun(z) -> (value, grad, jac)``.

    Once the residual is below tolerance one extra full step is tried, so
    quadratic convergence carries the answer to machine precision (finite
    differences of the inverse map rely on this).
    """
    z = np.array(z0, dtype=float)
    _, gr, jac = fun(z)
    r = 0.5 * gr - target
    rn = float(np.linalg.norm(r))
    thresh = tol * (1.0 + float(np.linalg.norm(target)))
    for it in range(max_iter + 1):
        info.iterations = it
        info.residual = rn
        converged = rn < thresh
        if converged and rn == 0.0:
            return z
        if it == max_iter:
            break
        try:
            step = linalg.solve(jac, r)
        except SingularMatrix:
            if converged:
                return z
            raise ConvergenceError("singular Jacobian during Legendre inversion") from None
        lam = 1.0
        for _ in range(max_halvings + 1):
            trial = z - lam * step
            try:
                _, gr_t, jac_t = fun(trial)
                r_t = 0.5 * gr_t - target
                rn_t = float(np.linalg.norm(r_t))
            except (NumericalError, ArithmeticError):
                rn_t = np.inf
            if rn_t <= rn or converged:
                break
            lam *= 0.5
            info.halvings += 1
        else:
            raise ConvergenceError("Legendre Newton step failed after maximal damping")
        if converged:
            return trial if rn_t <= rn else z
        z, r, rn, jac = trial, r_t, rn_t, jac_t
    if rn < thresh:
        return z
    raise ConvergenceError(f"Legendre inversion did not converge in {max_iter} iterations (|r| = {rn:.3e})")


def legendre_forward(space: TangentSpaceDef, x, y) -> np.ndarray:
    """p_i = 1/2 dL/dy^i."""
    u = np.concatenate([np.asarray(x, float), np.asarray(y, float)])
    return 0.5 * lagrangian_jet(space, u, 1).grad(slice(space.n, 2 * space.n)).value


@dataclass(frozen=True)
class LegendrePair:
    """A tangent-side space with the settings of its numerical inverse map."""

    tangent: TangentSpaceDef
    tol: float = 1e-10
    max_iter: int = 50
    max_halvings: int = 8
    y_ref: Optional[tuple] = None

    def seed(self, x, p) -> np.ndarray:
        n = self.tangent.n
        yr = np.ones(n) if self.y_ref is None else np.asarray(self.y_ref, float)
        _, _, g = _first_second(self.tangent, np.concatenate([x, yr]))
        return linalg.solve(g, p)


def legendre_inverse(pair: LegendrePair, x, p, seed=None, info: Optional[NewtonInfo] = None) -> np.ndarray:
    """y with 1/2 dL/dy (x, y) = p, by damped Newton with Jacobian g."""
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    info = info if info is not None else NewtonInfo()
    y0 = pair.seed(x, p) if seed is None else np.asarray(seed, float)
    fun = lambda y: _first_second(pair.tangent, np.concatenate([x, y]))
    return _damped_newton(fun, y0, p, pair.tol, pair.max_iter, pair.max_halvings, info)


def dual_hamiltonian(pair: LegendrePair, x, p, seed=None) -> float:
    """H* = 2 (p.y - L/2) at y = inverse image of p."""
    x = np.asarray(x, float)
    p = np.asarray(p, float)
    y = legendre_inverse(pair, x, p, seed)
    lval = lagrangian_jet(pair.tangent, np.concatenate([x, y]), 0).value
    return 2.0 * (float(p @ y) - 0.5 * lval)


@dataclass(frozen=True)
class DualHamiltonian:
    """Lazy Hamilton function of a Lagrange space: H* with dH*/dp = 2y, g* = g^-1."""

    pair: LegendrePair
    n: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n", self.pair.tangent.n)

    def evaluate(self, u):
        n = self.n
        x, p = u[:n], u[n:]
        y = legendre_inverse(self.pair, x, p)
        lv, _, g = _first_second(self.pair.tangent, np.concatenate([x, y]))
        return 2.0 * float(p @ y) - lv, 2.0 * y, linalg.inv(g)


@dataclass(frozen=True)
class DualLagrangian:
    """Lazy Lagrangian of a Hamilton space (or of any lazy dual)."""

    cotangent: object
    p_ref: Optional[tuple] = None
    tol: float = 1e-10
    max_iter: int = 50
    max_halvings: int = 8

    @property
    def n(self):
        return self.cotangent.n

    def solve_p(self, x, y, info=None) -> np.ndarray:
        n = self.n
        info = info if info is not None else NewtonInfo()
        fun = lambda p: _cot_eval(self.cotangent, np.concatenate([x, p]))
        pr = np.ones(n) if self.p_ref is None else np.asarray(self.p_ref, float)
        _, _, gup = fun(pr)
        p0 = linalg.solve(gup, y)
        return _damped_newton(fun, p0, y, self.tol, self.max_iter, self.max_halvings, info)

    def evaluate(self, u):
        n = self.n
        x, y = u[:n], u[n:]
        p = self.solve_p(x, y)
        hv, _, gup = _cot_eval(self.cotangent, np.concatenate([x, p]))
        return 2.0 * float(p @ y) - hv, 2.0 * p, linalg.inv(gup)


def _cot_eval(cot, u):
    if isinstance(cot, CotangentSpaceDef):
        return _first_second(cot, u)
    return cot.evaluate(u)


def dual_lagrangian(cotangent, x, y, p_ref=None) -> float:
    """L* = 2 (p.y - H/2) with p solving 1/2 dH/dp = y."""
    dl = DualLagrangian(cotangent, p_ref=p_ref)
    return dl.evaluate(np.concatenate([np.asarray(x, float), np.asarray(y, float)]))[0]


def round_trip_residual(pair: LegendrePair, x, y) -> float:
    """|Leg(Leg L) - L| / (1 + |L|) at (x, y)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    lval = lagrangian_jet(pair.tangent, np.concatenate([x, y]), 0).value
    back = DualLagrangian(DualHamiltonian(pair)).evaluate(np.concatenate([x, y]))[0]
    return abs(back - lval) / (1.0 + abs(lval))


def _richardson_jacobian(fun, z, h):
    """Central differences at steps h and h/2 combined to fourth order."""
    n = len(z)

    def central(step):
        cols = []
        for j in range(n):
            e = np.zeros(n)
            e[j] = step
            cols.append((fun(z + e) - fun(z - e)) / (2 * step))
        return np.stack(cols, axis=1)

    return (4.0 * central(h / 2) - central(h)) / 3.0


def forward_jacobian_fd(space: TangentSpaceDef, x, y, h: float = 1e-3) -> np.ndarray:
    """Finite-difference Jacobian dp/dy of the forward map (independent of the jet Hessian)."""
    x = np.asarray(x, float)
    return _richardson_jacobian(lambda yy: legendre_forward(space, x, yy), np.asarray(y, float), h)


def dual_metric_fd(pair: LegendrePair, x, p, h: float = 1e-3) -> np.ndarray:
    """g*^ij = dy^i/dp_j of the numerical inverse map, by finite differences."""
    x = np.asarray(x, float)
    return _richardson_jacobian(lambda pp: legendre_inverse(pair, x, pp), np.asarray(p, float), h)
