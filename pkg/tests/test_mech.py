import numpy as np
import pytest

from sprayforge import mech
from sprayforge import tangent as tg
from sprayforge.errors import ConfigError
from sprayforge.expr import VarLayout
from sprayforge.hamilton import CotangentSpaceDef
from sprayforge.integrate import IntegratorConfig, integrate, monitor_energy

LAY = VarLayout(3)
L3 = "(1 + x1^2)*y1^2 + (2 + sin(x2))*y2^2 + y3^2*exp(x3) + 0.1*y1^4 + 0.3*y1*y2*x3 + x1*y3"
FORCE = ["-0.3*y1 + x2*y2*y3", "0.2*y1^2 - 0.5*y2", "-y3*x1 + 0.1*y1*y2"]
U = np.array([0.3, -0.2, 0.5, 0.7, -0.4, 0.9])


@pytest.fixture(scope="module")
def forced():
    sp = tg.TangentSpaceDef.from_text(3, "lagrange", L3)
    return mech.MechanicalSystem(sp, mech.ExternalForce.from_text(FORCE, LAY, "covariant"), "lagrangian")


def test_unforced_evolution_is_canonical_spray():
    sp = tg.TangentSpaceDef.from_text(3, "lagrange", L3)
    sys = mech.MechanicalSystem(sp)
    assert np.allclose(mech.evolution_semispray(sys, U), tg.canonical_semispray(sp, U), atol=1e-15)
    assert np.allclose(mech.evolution_nonlinear_connection(sys, U), tg.nonlinear_connection(sp, U), atol=1e-14)


def test_force_shifts_spray_by_quarter(forced):
    sp = forced.space
    Fup = mech.force_values(forced, U, covariant=False)
    G = mech.evolution_semispray(forced, U)
    assert np.allclose(G, tg.canonical_semispray(sp, U) - 0.25 * Fup, atol=1e-14)


def test_covariant_contravariant_round_trip(forced):
    assert mech.conversion_roundtrip(forced, U) < 1e-13


def test_energy_law(forced):
    ud = mech.evolution_rhs(forced, U)
    assert mech.energy_variation_residual(forced, U, ud) < 1e-13


def test_energy_law_fd_oracle(forced):
    # dE/dt by a central difference along the flow, against F_i y^i
    h = 1e-5
    f = lambda s: mech.evolution_rhs(forced, s)
    e = lambda s: mech.energy_value(forced, s)
    ud = f(U)
    dedt = (e(U + h * ud) - e(U - h * ud)) / (2 * h)
    Fy = mech.force_values(forced, U, covariant=True) @ U[3:]
    assert dedt == pytest.approx(Fy, abs=1e-7)


def test_dynamical_derivative_and_em_routes(forced):
    assert np.max(np.abs(mech.nabla_g_residual(forced, U))) < 1e-12
    a = mech.system_em_tensor(forced, U)
    b = mech.system_em_tensor_direct(forced, U)
    assert np.allclose(a, b, atol=1e-13)
    assert np.allclose(a, -a.T, atol=1e-14)


def test_helicoidal_and_symmetric_parts(forced):
    P, Q = mech.force_tensors(forced, U)
    assert np.allclose(P, -P.T) and np.allclose(Q, Q.T)


def test_dissipativity_labels():
    sp = tg.TangentSpaceDef.from_text(2, "riemannian", "y1^2 + y2^2")
    lay = VarLayout(2)
    damp = mech.MechanicalSystem(sp, mech.ExternalForce.from_text(["-y1", "-y2"], lay), "riemannian")
    push = mech.MechanicalSystem(sp, mech.ExternalForce.from_text(["y1", "y2"], lay), "riemannian")
    skew = mech.MechanicalSystem(sp, mech.ExternalForce.from_text(["y2", "-y1"], lay), "riemannian")
    u = [0, 0, 0.6, 0.8]
    assert mech.dissipativity(damp, u)[0] == "dissipative"
    assert mech.dissipativity(push, u)[0] == "accretive"
    assert mech.dissipativity(skew, u)[0] == "neutral"


def test_harmonic_oscillator_closed_form():
    sp = tg.TangentSpaceDef.from_text(1, "riemannian", "y1^2")
    sys = mech.MechanicalSystem(sp, mech.ExternalForce.from_text(["-2*4*x1"], VarLayout(1)), "riemannian")
    tr = integrate(lambda s: mech.evolution_rhs(sys, s), [1.0, 0.0], IntegratorConfig(h=1e-3, t_end=1.0))
    assert tr.final[0] == pytest.approx(np.cos(2.0), abs=1e-10)


def test_hamilton_system_energy_law():
    cl = VarLayout(3, side="cotangent")
    cs = CotangentSpaceDef.from_text(3, "hamilton", "(1 + x1^2)*p1^2 + p2^2*(2 + x3) + p3^2 + 0.1*p1^4 + x2*p1*p3")
    F = mech.ExternalForce.from_text(["-0.3*p1", "0.2*p1*p2 - 0.5*p2", "-p3*x1"], cl, "covariant")
    sys = mech.MechanicalSystem(cs, F, "hamiltonian")
    assert mech.energy_variation_residual(sys, U, mech.evolution_rhs(sys, U)) < 1e-13
    N = mech.sigma_h_nonlinear_connection(sys, U)
    assert N.shape == (3, 3)


def test_unforced_hamilton_energy_conserved():
    cs = CotangentSpaceDef.from_text(2, "hamilton", "(1 + x1^2)*p1^2 + p2^2 + 0.1*p1^4")
    sys = mech.MechanicalSystem(cs, None, "hamiltonian")
    tr = integrate(lambda s: mech.evolution_rhs(sys, s), [0.1, 0.2, 0.5, -0.3],
                   IntegratorConfig(method="rkf45-adaptive", h=0.01, t_end=5.0, rtol=1e-11, atol=1e-13),
                   {"H": monitor_energy(sys)})
    assert np.ptp(tr.monitors["H"]) < 1e-8


def test_unknown_class_rejected():
    sp = tg.TangentSpaceDef.from_text(1, "riemannian", "y1^2")
    with pytest.raises((ConfigError, ValueError)):
        mech.MechanicalSystem(sp, None, "nonsense")
