import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sprayforge import higher as hi
from sprayforge import tangent as tg
from sprayforge.errors import OrderOverflow
from sprayforge.expr import VarLayout, parse_expr
from sprayforge.integrate import IntegratorConfig, integrate

LAY12 = VarLayout(1, 2)
GAMMA_X = [[parse_expr("exp(x1^2 - 1)", LAY12)]]   # Christoffel symbol equal to x, metric 1 at x = 1
L2D = "(1 + x1^2)*y2_1^2 + y2_2^2*(2 + x2*y1_1) + 0.1*y2_1^4 + x1*y1_2*y2_1"


def test_gamma_operator():
    f = parse_expr("x1*y1_1", LAY12)
    assert hi.gamma_apply(f, hi.HigherPoint.make([1], [2], [3])) == 10.0   # y1 * y1 + 2 y2 * x1


def test_main_invariants_and_covectors():
    L = parse_expr("y2_1^2", LAY12)
    assert np.allclose(hi.main_invariants(L, hi.HigherPoint.make([0], [1], [1])), [2.0, 4.0])
    p = hi.HigherPoint.make([0], [1], [1], [1], k=2)
    assert hi.craig_synge(L, p)[0] == pytest.approx(6.0, abs=1e-12)
    assert hi.energy_order_k(L, p) == pytest.approx(-2.0, abs=1e-12)
    assert hi.energy_bilinear(L, p) == pytest.approx(-2.0, abs=1e-12)
    mom = hi.jacobi_ostrogradski(L, p)
    assert np.allclose([m[0] for m in mom], [-3.0, 1.0])


def test_prolongation_hand_values():
    pr = hi.prolong_riemannian(GAMMA_X, 2, hi.HigherPoint.make([1], [1], [1]))
    assert np.allclose([M[0, 0] for M in pr.dual.M], [1.0, 2.0], atol=1e-12)
    assert np.allclose([z[0] for z in pr.z], [1.0, 1.5], atol=1e-12)
    assert pr.lagrangian == pytest.approx(2.25, abs=1e-12)


@pytest.mark.parametrize("k", [2, 3])
def test_primal_dual_round_trip(k):
    rng = np.random.default_rng(k)
    N = [rng.normal(size=(3, 3)) for _ in range(k)]
    back = hi.primal_from_dual(hi.dual_from_primal(N))
    assert max(np.max(np.abs(a - b)) for a, b in zip(back, N)) < 1e-12


def test_k1_reductions():
    t = "(1 + x1^2)*y1^2 + (2 + sin(x2))*y2^2 + 0.1*y1^4 + 0.3*y1*y2*x1"
    sp = tg.TangentSpaceDef.from_text(2, "lagrange", t)
    hs = hi.HigherOrderSpace.from_text(2, 1, t)
    u = np.array([0.3, -0.2, 0.7, -0.4])
    yd = np.array([0.2, 0.5])
    base = hi.HigherPoint.make(u[:2], u[2:])
    assert np.allclose(hi.k_semispray(hs, base), tg.canonical_semispray(sp, u), atol=1e-12)
    ext = hi.HigherPoint.make(u[:2], u[2:], yd / 2, k=1)
    assert np.allclose(hi.craig_synge(hs.lagrangian, ext), tg.el_covector(sp, u[:2], u[2:], yd), atol=1e-12)
    assert hi.energy_order_k(hs.lagrangian, base) == pytest.approx(tg.energy(sp, u), abs=1e-12)


def test_energy_forms_agree():
    hs = hi.HigherOrderSpace.from_text(2, 2, L2D)
    pt = hi.HigherPoint.make([0.3, 0.2], [0.5, -0.1], [0.4, 0.6], [0.1, 0.2], [0.3, -0.5], [0.2, 0.1], k=2)
    assert hi.energy_order_k(hs.lagrangian, pt) == pytest.approx(hi.energy_bilinear(hs.lagrangian, pt), abs=1e-13)


def test_semispray_route_k3_overflows():
    hs = hi.HigherOrderSpace.from_text(1, 3, "y3_1^2")
    with pytest.raises(OrderOverflow):
        hi.dual_coefficients_semispray(hs, hi.HigherPoint.make([0], [1], [1], [1]))


def test_prolongation_route_k3_round_trip():
    lay = VarLayout(1, 3)
    metric = [[parse_expr("exp(x1^2 - 1)", lay)]]
    dc = hi.dual_coefficients_prolongation(metric, hi.HigherPoint.make([1], [1], [1], [1]))
    back = hi.dual_from_primal(hi.primal_from_dual(dc))
    assert max(np.max(np.abs(a - b)) for a, b in zip(back.M, dc.M)) < 1e-12


def test_forced_lagrange_residual():
    lay = VarLayout(2, 2)
    hs = hi.HigherOrderSpace.from_text(2, 2, L2D)
    sys = hi.HigherOrderSystem(hs, tuple(parse_expr(s, lay) for s in ["-0.3*y2_1", "x1*y2_2"]))
    st_ = np.array([0.3, 0.2, 0.5, -0.1, 0.4, 0.6])
    d = hi.higher_order_evolution_system(sys, st_)
    assert np.max(np.abs(hi.lagrange_equation_residual(sys, st_, d))) < 1e-13


def test_flat_k2_energy_conserved():
    hs = hi.HigherOrderSpace.from_text(2, 2, "y2_1^2 + y2_2^2")
    sys = hi.HigherOrderSystem(hs)
    tr = integrate(lambda s: hi.higher_order_evolution_system(sys, s), [0, 0, 1.0, 0.5, 0.3, -0.2],
                   IntegratorConfig(h=0.01, t_end=5.0, stride=10))
    e = [hi.energy_order_k(hs, hi.extend_point(s, d, 2, 2)) for s, d in zip(tr.states, tr.derivs)]
    assert np.ptp(e) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([2, 3]))
def test_round_trip_property(seed, k):
    rng = np.random.default_rng(seed)
    N = [rng.uniform(-2, 2, size=(2, 2)) for _ in range(k)]
    dc = hi.dual_from_primal(N)
    assert max(np.max(np.abs(a - b)) for a, b in zip(hi.primal_from_dual(dc), N)) < 1e-11
