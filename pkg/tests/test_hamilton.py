import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sprayforge import hamilton as ham
from sprayforge.errors import NullSection
from sprayforge.expr import Var, VarLayout, parse_expr

from _support import random_polynomial

CLAY = VarLayout(2, side="cotangent")
HAM = "(1 + x1^2)*p1^2 + p2^2*(2 + x2) + 0.1*p1^4 + x2*p1*p2"
KROPINA = "(p1^2 + (1 + 0.2*x1^2)*p2^2)/(p1 + 0.5*p2)"


@pytest.fixture(scope="module")
def hspace():
    return ham.CotangentSpaceDef.from_text(2, "hamilton", HAM)


@pytest.fixture(scope="module")
def kropina():
    return ham.CotangentSpaceDef.from_text(2, "cartan", KROPINA)


def test_canonical_brackets():
    u = [0.3, -0.2, 0.5, 0.7]
    for i in range(2):
        for j in range(2):
            assert ham.poisson(Var(2 + i), Var(j), u) == (1.0 if i == j else 0.0)
            assert ham.poisson(Var(i), Var(j), u) == 0.0


def test_bracket_antisymmetry_and_bilinearity():
    rng = np.random.default_rng(3)
    f, g, h = (random_polynomial(rng, CLAY) for _ in range(3))
    u = rng.uniform(-1, 1, 4)
    assert ham.poisson(f, g, u) == -ham.poisson(g, f, u)
    fh = parse_expr(f"2*({f}) + 3*({h})", CLAY)
    lin = 2 * ham.poisson(f, g, u) + 3 * ham.poisson(h, g, u)
    assert ham.poisson(fh, g, u) == pytest.approx(lin, abs=1e-12)


def test_jacobi_identity_random_triples():
    rng = np.random.default_rng(11)
    for _ in range(10):
        f, g, h = (random_polynomial(rng, CLAY) for _ in range(3))
        assert abs(ham.jacobi_residual(f, g, h, rng.uniform(-1, 1, 4))) < 1e-8


def test_hamilton_vector_field_is_half_gradient(hspace):
    u = np.array([0.3, -0.2, 0.5, 0.7])
    xdot, pdot = ham.hamilton_vector_field(hspace, u)
    # x' = {H/2, x} and p' = {H/2, p}
    for i in range(2):
        assert xdot[i] == pytest.approx(0.5 * ham.poisson(hspace.generator, Var(i), u), abs=1e-14)
        assert pdot[i] == pytest.approx(0.5 * ham.poisson(hspace.generator, Var(2 + i), u), abs=1e-14)


def test_cotangent_bundle_identities(hspace):
    u = np.array([0.3, -0.2, 0.5, 0.7])
    b = ham.cotangent_bundle(hspace, u)
    h, v = ham.metricity_residual_H(hspace, u, b)
    assert h < 1e-12 and v < 1e-12
    assert ham.connection_symmetry(hspace, u) < 1e-14
    assert ham.cyclic_curvature_residual(hspace, u) < 1e-12
    assert np.array_equal(b.Hc, b.Hc.transpose(0, 2, 1))


def test_flat_cartan():
    sp = ham.CotangentSpaceDef.from_text(2, "cartan", "sqrt(p1^2 + p2^2)")
    u = [0.1, 0.2, 0.6, 0.8]
    gup, _ = ham.hamilton_fundamental(sp, u)
    assert np.allclose(gup, np.eye(2), atol=1e-15)
    assert not np.any(ham.canonical_nonlinear_connection_H(sp, u))


def test_kropina_identities(kropina):
    u = np.array([0.2, -0.4, 0.8, 0.5])
    ids = ham.cartan_identities(kropina, u)
    assert ids["Delta"] < 1e-10
    assert ids["K2_vs_pp"] < 1e-12
    assert ids["dbar_minus_identity"] < 1e-10
    assert np.allclose(ham.cartan_nonlinear_connection(kropina, u),
                       ham.canonical_nonlinear_connection_H(kropina, u), atol=1e-12)


def test_cartan_null_section(kropina):
    with pytest.raises(NullSection):
        ham.hamiltonian_value(kropina, [0.1, 0.1, 0.0, 0.0])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_jacobi_property(seed):
    rng = np.random.default_rng(seed)
    f, g, h = (random_polynomial(rng, CLAY, degree=3, terms=4) for _ in range(3))
    assert abs(ham.jacobi_residual(f, g, h, rng.uniform(-1, 1, 4))) < 1e-8
