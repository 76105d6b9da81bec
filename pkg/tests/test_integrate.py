import numpy as np
import pytest

from sprayforge.errors import ConfigError
from sprayforge.integrate import IntegratorConfig, integrate, monitor_residual, rk4_step


def decay(s):
    return -s


def test_rk4_order_ratio():
    errs = [abs(integrate(decay, [1.0], IntegratorConfig(h=h, t_end=1.0)).final[0] - np.exp(-1)) for h in (0.1, 0.05)]
    assert 12 <= errs[0] / errs[1] <= 20


@pytest.mark.parametrize("method", ["rk4-fixed", "rkf45-adaptive"])
def test_exp_decay(method):
    tr = integrate(decay, [1.0], IntegratorConfig(method, h=0.01, t_end=1.0))
    assert tr.ok and tr.final[0] == pytest.approx(np.exp(-1), abs=1e-9)


def test_time_reversal():
    osc = lambda s: np.array([s[1], -np.sin(s[0])])
    fwd = integrate(osc, [0.5, 0.2], IntegratorConfig(h=1e-3, t_end=2.0))
    back = integrate(lambda s: -osc(s), fwd.final, IntegratorConfig(h=1e-3, t_end=2.0))
    assert np.allclose(back.final, [0.5, 0.2], atol=1e-6)


def test_stored_derivative_is_fresh():
    tr = integrate(decay, [1.0], IntegratorConfig(h=0.1, t_end=1.0, stride=2))
    assert np.array_equal(tr.derivs, -tr.states)
    assert len(tr.t) == 6


def test_adaptive_statistics_and_monitors():
    tr = integrate(decay, [1.0], IntegratorConfig("rkf45-adaptive", h=0.5, t_end=3.0, rtol=1e-10),
                   {"res": monitor_residual(lambda s, d: d + s)})
    assert tr.accepted > 0 and tr.t[-1] == pytest.approx(3.0)
    assert np.max(tr.monitors["res"]) == 0.0


def test_blow_up_truncates_with_error():
    tr = integrate(lambda s: s ** 2, [1.0], IntegratorConfig("rkf45-adaptive", h=0.1, t_end=2.0))
    assert not tr.ok and tr.t[-1] < 1.0


def test_field_with_time_argument():
    tr = integrate(lambda t, s: np.array([np.cos(t)]), [0.0], IntegratorConfig(h=1e-3, t_end=1.0))
    assert tr.final[0] == pytest.approx(np.sin(1.0), abs=1e-12)


@pytest.mark.parametrize("kw", [dict(method="euler"), dict(h=0.0), dict(t_end=-1.0), dict(stride=0)])
def test_bad_configs(kw):
    with pytest.raises(ConfigError):
        IntegratorConfig(**kw)


def test_single_step():
    assert rk4_step(lambda t, s: -s, 0.0, np.array([1.0]), 0.1)[0] == pytest.approx(np.exp(-0.1), abs=1e-7)
