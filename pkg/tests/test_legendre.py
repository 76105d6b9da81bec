import numpy as np
import pytest

from sprayforge import hamilton as ham
from sprayforge import legendre as leg
from sprayforge import tangent as tg
from sprayforge.errors import ConvergenceError

from _support import grid_points

RANDERS = "sqrt((1 + 0.2*x2^2)*y1^2 + y2^2) + 0.2*y1 + 0.1*x1*y2"


def test_flat_dual_is_p_squared():
    sp = tg.TangentSpaceDef.from_text(2, "riemannian", "y1^2 + y2^2")
    pair = leg.LegendrePair(sp)
    x = np.zeros(2)
    for p in grid_points(-1, 1, 2, 3):
        assert leg.dual_hamiltonian(pair, x, p) == pytest.approx(p @ p, abs=1e-14)


def test_forward_is_half_gradient():
    sp = tg.TangentSpaceDef.from_text(2, "lagrange", "y1^2 + 3*y2^2 + x1*y1")
    assert np.allclose(leg.legendre_forward(sp, [2.0, 0.0], [1.0, 1.0]), [2.0, 3.0])


def test_inverse_round_trip_randers():
    sp = tg.TangentSpaceDef.from_text(2, "finsler", RANDERS)
    pair = leg.LegendrePair(sp)
    x = np.array([0.3, -0.2])
    for y in grid_points(0.2, 1.0, 2, 5):
        p = leg.legendre_forward(sp, x, y)
        assert np.allclose(leg.legendre_inverse(pair, x, p), y, atol=1e-10)
        assert leg.round_trip_residual(pair, x, y) < 1e-8


def test_randers_dual_is_cartan():
    # K*^2 = F^2 at Legendre-related points
    sp = tg.TangentSpaceDef.from_text(2, "finsler", RANDERS)
    pair = leg.LegendrePair(sp)
    x = np.array([0.3, -0.2])
    y = np.array([0.7, 0.4])
    p = leg.legendre_forward(sp, x, y)
    f2 = tg.lagrangian_jet(sp, np.concatenate([x, y]), 0).value
    assert leg.dual_hamiltonian(pair, x, p) == pytest.approx(f2, rel=1e-10)


def test_dual_metric_is_inverse_fd():
    sp = tg.TangentSpaceDef.from_text(2, "finsler", RANDERS)
    pair = leg.LegendrePair(sp)
    x, y = np.array([0.3, -0.2]), np.array([0.7, 0.4])
    p = leg.legendre_forward(sp, x, y)
    g = tg.fundamental_tensor(sp, np.concatenate([x, y])).g
    assert np.allclose(leg.dual_metric_fd(pair, x, p), np.linalg.inv(g), atol=1e-7)
    assert np.allclose(leg.forward_jacobian_fd(sp, x, y), g, atol=1e-7)


def test_hamilton_to_lagrange():
    cs = ham.CotangentSpaceDef.from_text(2, "hamilton", "2*p1^2 + p2^2")
    # H = 2 p1^2 + p2^2: y = 1/2 dH/dp = (2 p1, p2), L* = y1^2/2 + y2^2
    assert leg.dual_lagrangian(cs, [0, 0], [1.0, 1.0]) == pytest.approx(1.5, abs=1e-12)


def test_newton_failure_raises():
    sp = tg.TangentSpaceDef.from_text(1, "lagrange", "y1^4 + y1^2")
    pair = leg.LegendrePair(sp, max_iter=1, max_halvings=0)
    with pytest.raises(ConvergenceError):
        leg.legendre_inverse(pair, np.zeros(1), np.array([1e6]))
