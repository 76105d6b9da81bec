"""Verification suites: every invariant applicable to a scenario, as named residual checks."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import hamilton as ham
from . import higher as hi
from . import legendre as leg
from . import mech
from . import tangent as tg
from .errors import NumericalError
from .expr import evaluate
from .integrate import IntegratorConfig, integrate, monitor_energy, monitor_energy_residual
from .jet import eval_jet, eval_jets

DEFAULT_SEED = 12345
N_METRIC = 20
N_MAXWELL = 10


@dataclass
class CheckResult:
    name: str
    residual: float
    threshold: float
    note: str = ""
    error: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.error is None and self.residual <= self.threshold

    @property
    def status(self) -> str:
        if self.error is not None:
            return "error"
        return "pass" if self.passed else "FAIL"


class _Suite:
    def __init__(self, toggles=None):
        self.results = []
        self.toggles = toggles or {}

    def run(self, name, threshold, fn, note=""):
        if self.toggles.get(name) is False:
            return
        try:
            r = fn()
            self.results.append(CheckResult(name, float(r), threshold, note))
        except NumericalError as exc:
            self.results.append(CheckResult(name, math.inf, threshold, note, f"{type(exc).__name__}: {exc}"))


def _amax(a) -> float:
    a = np.asarray(a, float)
    return float(np.max(np.abs(a))) if a.size else 0.0


# -- automatic differentiation vs finite differences ------------------------


def fd_gradient_hessian(expr, u, h1=1e-5, h2=1e-4):
    """Central-difference gradient and Hessian of an expression (independent of jets)."""
    u = np.asarray(u, float)
    nv = len(u)
    f = lambda v: evaluate(expr, v)
    grad = np.zeros(nv)
    hess = np.zeros((nv, nv))
    f0 = f(u)
    for i in range(nv):
        e = np.zeros(nv)
        e[i] = h1
        grad[i] = (f(u + e) - f(u - e)) / (2 * h1)
        e[i] = h2
        hess[i, i] = (f(u + e) - 2 * f0 + f(u - e)) / h2 ** 2
        for j in range(i):
            d = np.zeros(nv)
            d[j] = h2
            hess[i, j] = hess[j, i] = (f(u + e + d) - f(u + e - d) - f(u - e + d) + f(u - e - d)) / (4 * h2 ** 2)
    return grad, hess


def ad_fd_residual(exprs, points) -> float:
    """Worst |jet partial - FD partial| / (1 + |partial|) over first and second partials."""
    worst = 0.0
    for e in exprs:
        for u in points:
            try:
                g, hsn = eval_jet(e, u, 2).gradient_hessian()
            except AttributeError:
                continue                # constant expression: nothing to differentiate
            fg, fh = fd_gradient_hessian(e, u)
            worst = max(worst, _amax((g - fg) / (1 + np.abs(g))), _amax((hsn - fh) / (1 + np.abs(hsn))))
    return worst


# -- helpers for closed forms -----------------------------------------------


def _param(sc, key, default):
    name = sc.config.closed_form.get(key, default)
    return sc.config.params[name] if isinstance(name, str) else float(name)


def _em_closed(sc, u):
    """Closed-form G, N, F, g for the electrodynamics Lagrangian."""
    n = sc.n
    ex = sc.exprs
    gam = tuple(tuple(ex[f"closed_form.gamma[{i + 1}][{j + 1}]"] for j in range(n)) for i in range(n))
    A = [ex[f"closed_form.A[{i + 1}]"] for i in range(n)]
    mc, kappa = _param(sc, "mc", "mc"), _param(sc, "kappa", "kappa")
    chris = hi.christoffel_x(gam, u, 0).value
    dA = eval_jets(A, u, 1).grad(slice(0, n)).value              # [k, j] = d_j A_k
    F = 0.5 * kappa * (dA.T - dA)                                 # F_jk = kappa/2 (d_j A_k - d_k A_j)
    g = mc * eval_jets(gam, u, 0).value
    ginv = np.linalg.inv(g)
    y = u[n:]
    G = 0.5 * np.einsum("ijk,j,k->i", chris, y, y) - ginv @ F @ y
    N = np.einsum("ijk,k->ij", chris, y) - ginv @ F
    return G, N, F, g, chris


def _em_dual_closed(sc, x, p):
    n = sc.n
    ex = sc.exprs
    gam = tuple(tuple(ex[f"closed_form.gamma[{i + 1}][{j + 1}]"] for j in range(n)) for i in range(n))
    A = [ex[f"closed_form.A[{i + 1}]"] for i in range(n)]
    mc, kappa = _param(sc, "mc", "mc"), _param(sc, "kappa", "kappa")
    u = np.concatenate([x, np.zeros(n)])
    g = eval_jets(gam, u, 0).value
    a = eval_jets(A, u, 0).value
    q = p - kappa * a
    return float(q @ np.linalg.solve(g, q)) / mc


def legendre_grid(sc, rng, per_axis=5):
    """x from the sampling box and a per_axis^n grid of fibre vectors."""
    cfg = sc.config
    x = rng.uniform(*cfg.sample_x, cfg.n)
    axis = np.linspace(cfg.sample_y[0], cfg.sample_y[1], per_axis)
    ys = np.array(np.meshgrid(*([axis] * cfg.n), indexing="ij")).reshape(cfg.n, -1).T
    return x, ys


# -- suites ------------------------------------------------------------------


def _trajectory(sc, t_end, h=None, method="rk4-fixed", stride=10, monitors=None, rtol=1e-9, atol=1e-12):
    cfg = sc.config
    ic = IntegratorConfig(method=method, h=h or cfg.integration.h, t_end=t_end, stride=stride, rtol=rtol, atol=atol)
    tr = integrate(sc.field, np.array(cfg.initial), ic, monitors)
    if tr.error:
        raise NumericalError(tr.error)
    return tr


def _tangent_suite(sc, rng, s: _Suite):
    space = sc.space
    cfg = sc.config
    n = sc.n
    pts = sc.sample_points(rng, N_METRIC)
    bundles = [tg._build(space, u) for u in pts]

    s.run("metric-symmetry", 0.0, lambda: max(_amax(b.g - b.g.T) for b in bundles))
    s.run("metricity-h", 1e-9, lambda: max(tg.metricity_residual(space, u, b)[0] for u, b in zip(pts, bundles)))
    s.run("metricity-v", 1e-9, lambda: max(tg.metricity_residual(space, u, b)[1] for u, b in zip(pts, bundles)))
    s.run("L-symmetry", 0.0, lambda: max(_amax(b.Lc - b.Lc.transpose(0, 2, 1)) for b in bundles))
    s.run("C-symmetry", 0.0, lambda: max(_amax(b.Cc - b.Cc.transpose(0, 2, 1)) for b in bundles))
    if cfg.kind == "generalized-lagrange":
        return
    s.run("torsion-t", 1e-12, lambda: max(_amax(b.t) for b in bundles))
    mx = [tg.maxwell_residual(space, u, b) for u, b in zip(pts[:N_MAXWELL], bundles[:N_MAXWELL])]
    # the electromagnetic tensor of a Riemannian space vanishes, so its Maxwell residuals must be 0 exactly
    mthr = 0.0 if cfg.kind == "riemannian" else 1e-7
    s.run("maxwell-h", mthr, lambda: max(_amax(h) for h, _ in mx))
    s.run("maxwell-v", mthr, lambda: max(_amax(v) for _, v in mx))
    if cfg.kind in ("riemannian", "finsler") and space.connection is None:
        s.run("em-tensor-zero", 1e-12, lambda: max(_amax(b.F) for b in bundles),
              "electromagnetic tensor of the space vanishes")
    if cfg.kind == "riemannian":
        s.run("cartan-tensor-zero", 0.0, lambda: max(_amax(b.cartan) for b in bundles))
    if cfg.kind == "finsler":
        s.run("cartan-yC", 1e-10, lambda: max(_amax(np.einsum("sjk,s->jk", b.cartan, u[n:])) for u, b in zip(pts, bundles)))
        s.run("homogeneity-F", 1e-10, lambda: tg.homogeneity_check(space.generator, pts[:5], 1.0, n)[1])
        s.run("homogeneity-g", 1e-10, lambda: tg.homogeneity_check(lambda u, m: tg.metric_jet(space, u, m), pts[:5], 0.0, n)[1])
        if space.connection is None:
            s.run("berwald-identity", 1e-9, lambda: max(max(tg.berwald_identity_residual(space, u)) for u in pts[:5]))
            s.run("P-symmetry", 1e-9, lambda: max(tg.p_tensor_symmetry(space, u) for u in pts[:5]))
            s.run("finsler-connection-cross-check", 1e-9, lambda: max(tg.finsler_connection_cross_check(space, u) for u in pts[:5]))

    pair = leg.LegendrePair(space)
    x, ys = legendre_grid(sc, rng)
    s.run("legendre-roundtrip", 1e-8, lambda: max(leg.round_trip_residual(pair, x, y) for y in ys),
          f"{len(ys)}-point fibre grid")
    typ = cfg.closed_form.get("type")
    if cfg.kind == "finsler" and space.connection is None:
        def k2_f2():
            worst = 0.0
            for y in ys[::3]:
                p = leg.legendre_forward(space, x, y)
                f2 = tg.lagrangian_jet(space, np.concatenate([x, y]), 0).value
                worst = max(worst, abs(leg.dual_hamiltonian(pair, x, p) - f2) / (1 + f2))
            return worst
        s.run("cartan-dual-K2-equals-F2", 1e-8, k2_f2)
    if typ == "electrodynamics":
        def em_gn(which):
            worst = 0.0
            for u in pts:
                G, N, *_ = _em_closed(sc, u)
                worst = max(worst, _amax((tg.canonical_semispray(space, u) - G) if which == "G"
                                         else (tg.nonlinear_connection(space, u) - N)))
            return worst
        s.run("electrodynamics-G", 1e-10, lambda: em_gn("G"))
        s.run("electrodynamics-N", 1e-10, lambda: em_gn("N"))
        s.run("electrodynamics-dual", 1e-10, lambda: max(
            abs(leg.dual_hamiltonian(pair, x, p) - _em_dual_closed(sc, x, p))
            for p in (leg.legendre_forward(space, x, y) for y in ys)))

        def lorentz():
            tr = _trajectory(sc, 5.0, h=1e-3, stride=50)
            worst = 0.0
            for st, d in zip(tr.states, tr.derivs):
                _, _, F, g, chris = _em_closed(sc, st)
                y = st[n:]
                res = d[n:] + np.einsum("ijk,j,k->i", chris, y, y) - 2.0 * np.linalg.solve(g, F @ y)
                worst = max(worst, _amax(res))
            return worst
        s.run("lorentz-equation", 1e-8, lorentz, "RK4 h=1e-3 on [0, 5]")
    if typ == "lorentz-connection":
        ex = sc.exprs
        a = tuple(tuple(ex[f"closed_form.a[{i + 1}][{j + 1}]"] for j in range(n)) for i in range(n))
        b = [ex[f"closed_form.b[{i + 1}]"] for i in range(n)]

        def lorentz_conn():
            worst = 0.0
            for u in pts:
                chris = hi.christoffel_x(a, u, 0).value
                db = eval_jets(b, u, 1).grad(slice(0, n)).value           # [s, j] = d_j b_s
                ainv = np.linalg.inv(eval_jets(a, u, 0).value)
                Fo = 0.5 * ainv @ (db - db.T)
                N = np.einsum("ijk,k->ij", chris, u[n:]) - Fo
                worst = max(worst, _amax(tg.nonlinear_connection(space, u) - N))
            return worst
        s.run("lorentz-connection", 1e-12, lorentz_conn)
    _system_suite(sc, rng, s, pts)


def _system_suite(sc, rng, s, pts):
    sys = sc.system
    cfg = sc.config
    n = sc.n
    if sys is None or cfg.initial is None:
        return
    tangent = sys.tangent
    if sys.force is not None:
        s.run("force-conversion", 1e-12, lambda: max(mech.conversion_roundtrip(sys, u) for u in pts[:5]))
        if tangent:
            s.run("nabla-g-minus-half-Q", 1e-9, lambda: max(_amax(mech.nabla_g_residual(sys, u)) for u in pts[:5]))
            s.run("system-em-two-routes", 1e-9, lambda: max(
                _amax(mech.system_em_tensor(sys, u) - mech.system_em_tensor_direct(sys, u)) for u in pts[:5]))

        def energy_law():
            tr = _trajectory(sc, min(cfg.integration.t_end, 2.0), stride=20,
                             monitors={"res": monitor_energy_residual(sys)})
            return float(np.max(tr.monitors["res"]))
        s.run("energy-variation", 1e-7, energy_law, "per sample along the trajectory")
    conservative = sys.force is None or cfg.name == "lorentz-force"
    typ = cfg.closed_form.get("type")
    if conservative:
        thr = 1e-8 if tangent else 1e-7

        def drift():
            tr = _trajectory(sc, 10.0, h=0.05, method="rkf45-adaptive", stride=5, rtol=1e-11, atol=1e-13,
                             monitors={"E": monitor_energy(sys)})
            e = tr.monitors["E"]
            return float(np.max(np.abs(e - e[0])))
        s.run("energy-drift" if tangent else "hamiltonian-drift", thr, drift, "adaptive RKF45 on [0, 10]")
    if typ == "damped":
        om = _param(sc, "omega", "omega")

        def damped():
            tr = _trajectory(sc, 1.0, h=1e-3, stride=10)
            speed = np.linalg.norm(tr.states[:, n:], axis=1)
            return float(np.max(np.abs(speed - speed[0] * np.exp(-om * tr.t))))
        s.run("damped-closed-form", 1e-6, damped, "|y(t)| = |y0| exp(-omega t)")
    if typ == "oscillator":
        om = np.array([cfg.params[w] for w in cfg.closed_form["omega"]])

        def prime():
            tr = _trajectory(sc, 10.0, h=0.05, method="rkf45-adaptive", stride=5, rtol=1e-11, atol=1e-13)
            h = tr.states[:, n:] ** 2 + om ** 2 * tr.states[:, :n] ** 2
            return float(np.max(np.abs(h - h[0])))
        s.run("prime-integrals", 1e-8, prime, "y_i^2 + w_i^2 x_i^2")
    d = mech.dissipativity(sys, np.array(cfg.initial))
    s.results.append(CheckResult(f"dissipativity:{d[0]}", 0.0, 0.0, f"g(F, y) = {d[1]:.3e} at the initial state"))


def _cotangent_suite(sc, rng, s: _Suite):
    space = sc.space
    cfg = sc.config
    n = sc.n
    pts = sc.sample_points(rng, N_METRIC)
    bundles = [ham.cotangent_bundle(space, u) for u in pts]
    s.run("metric-symmetry", 0.0, lambda: max(_amax(b.gup - b.gup.T) for b in bundles))
    s.run("metricity-h", 1e-9, lambda: max(ham.metricity_residual_H(space, u, b)[0] for u, b in zip(pts, bundles)))
    s.run("metricity-v", 1e-9, lambda: max(ham.metricity_residual_H(space, u, b)[1] for u, b in zip(pts, bundles)))
    s.run("N-symmetry", 1e-12, lambda: max(_amax(b.N - b.N.T) for b in bundles))
    s.run("H-symmetry", 0.0, lambda: max(_amax(b.Hc - b.Hc.transpose(0, 2, 1)) for b in bundles))
    s.run("C-symmetry", 0.0, lambda: max(_amax(b.Cc - np.swapaxes(b.Cc, 1, 2)) for b in bundles))
    s.run("cyclic-curvature", 1e-9, lambda: max(
        _amax(b.R + b.R.transpose(1, 2, 0) + b.R.transpose(2, 0, 1)) for b in bundles))
    s.run("jacobi-identity", 1e-8, lambda: max(
        ham.jacobi_residual(space.generator, _coord(sc, 0), _coord(sc, n + 1), u)
        for u in pts[:5]), "{H, x1, p2} cyclic sum")
    if cfg.kind == "cartan":
        ids = [ham.cartan_identities(space, u, b) for u, b in zip(pts[:N_MAXWELL], bundles[:N_MAXWELL])]
        s.run("cartan-Delta", 1e-8, lambda: max(d["Delta"] for d in ids), "p_i|j = 0")
        s.run("cartan-K2-pp", 1e-10, lambda: max(d["K2_vs_pp"] for d in ids))
        s.run("cartan-dbar", 1e-8, lambda: max(d["dbar_minus_identity"] for d in ids))
        s.run("cartan-K-h", 1e-8, lambda: max(d["K_h"] for d in ids))
        s.run("cartan-K-v", 1e-8, lambda: max(d["K_v_minus_p_over_K"] for d in ids))
        s.run("cartan-N-two-routes", 1e-9, lambda: max(
            _amax(ham.cartan_nonlinear_connection(space, u) - b.N) for u, b in zip(pts[:N_MAXWELL], bundles)))
        s.run("homogeneity-K", 1e-10, lambda: tg.homogeneity_check(space.generator, pts[:5], 1.0, n)[1])
    _system_suite(sc, rng, s, pts)


def _coord(sc, idx):
    from .expr import Var

    return Var(idx, sc.config.layout.names[idx])


def _higher_suite(sc, rng, s: _Suite):
    cfg = sc.config
    n, k = cfg.n, cfg.k
    sys = sc.system
    pts = sc.sample_points(rng, 5)
    if cfg.kind == "prolonged-riemannian":
        dcs = [hi.dual_coefficients_prolongation(sc.metric_exprs, hi.HigherPoint.from_vector(u, n, k)) for u in pts]
    else:
        dcs = [hi.dual_coefficients_semispray(sc.space, hi.HigherPoint.from_vector(u, n, k), sys.force) for u in pts]
    s.run("dual-primal-roundtrip", 1e-12, lambda: max(
        max(_amax(a - b) for a, b in zip(hi.dual_from_primal(hi.primal_from_dual(dc)).M, dc.M)) for dc in dcs))
    if cfg.initial is None:
        return
    cache = {}

    def traj():
        # one trajectory serves every check below; accuracy needs are modest
        if "tr" not in cache:
            cache["tr"] = _trajectory(sc, cfg.integration.t_end, h=max(cfg.integration.h, 4e-3), stride=5)
        return cache["tr"]

    def lag_res():
        tr = traj()
        return max(_amax(hi.lagrange_equation_residual(sys, st, d)) for st, d in zip(tr.states, tr.derivs))
    s.run("lagrange-equation-residual", 1e-7, lag_res, "order-(k+1) equation along the trajectory")
    if sys.force is None and k == 2:
        def e2_drift():
            tr = traj()
            e = [hi.energy_order_k(sys.space, hi.extend_point(st, d, n, k)) for st, d in zip(tr.states, tr.derivs)]
            return float(np.max(np.abs(np.array(e) - e[0])))
        s.run("energy-order-k-drift", 1e-8, e2_drift)
    if cfg.closed_form.get("type") == "friction-k2":
        c = _param(sc, "c", "c")

        def friction():
            tr = traj()
            x0, v0, w0 = (np.array(cfg.initial[a * n:(a + 1) * n]) for a in range(3))
            t = tr.t[:, None]
            exact = x0 + v0 * t + (8 * w0 / c ** 2) * (np.exp(-c * t / 2) - 1 + c * t / 2)
            return _amax(tr.states[:, :n] - exact)
        s.run("friction-closed-form", 1e-7, friction)


def run_verify(sc, seed: int = DEFAULT_SEED):
    """All checks applicable to a scenario; returns a list of CheckResult."""
    rng = np.random.default_rng(seed)
    s = _Suite(sc.config.checks)
    pts = sc.sample_points(rng, 3)
    s.run("ad-vs-fd", 1e-6, lambda: ad_fd_residual(list(sc.exprs.values()), pts), "first and second partials")
    side = sc.config.side
    try:
        if side == "tangent":
            _tangent_suite(sc, rng, s)
        elif side == "cotangent":
            _cotangent_suite(sc, rng, s)
        else:
            _higher_suite(sc, rng, s)
    except NumericalError as exc:
        s.results.append(CheckResult("suite", math.inf, 0.0, "", f"{type(exc).__name__}: {exc}"))
    return s.results
