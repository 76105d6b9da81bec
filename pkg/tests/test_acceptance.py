"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Preset-level checks come from one shared `sprayforge verify --all` run
(the `verify_all` fixture); everything else is computed here.
"""
import json
import math

import numpy as np

from sprayforge import cli
from sprayforge import hamilton as ham
from sprayforge import higher as hi
from sprayforge import tangent as tg
from sprayforge.expr import VarLayout, parse_expr
from sprayforge.integrate import IntegratorConfig, integrate
from sprayforge.jet import eval_jet
from sprayforge.scenarios import load_preset, preset_names

from _support import random_polynomial

TANGENT = [nm for nm in preset_names() if load_preset(nm).side == "tangent"]
COTANGENT = [nm for nm in preset_names() if load_preset(nm).side == "cotangent"]
HIGHER = [nm for nm in preset_names() if load_preset(nm).side == "higher"]
CARTAN = [nm for nm in COTANGENT if load_preset(nm).kind == "cartan"]
RIEMANNIAN = [nm for nm in TANGENT if load_preset(nm).kind == "riemannian"]


def _checks(reports, preset, *names):
    by = {c["name"]: c for c in reports[preset]["checks"]}
    missing = [nm for nm in names if nm not in by]
    assert not missing, f"{preset}: checks {missing} not run"
    return [by[nm] for nm in names]


def _gather(reports, presets, *names):
    """(all passed, worst residual, failing labels) over presets x checks."""
    worst, bad = 0.0, []
    for p in presets:
        for c in _checks(reports, p, *names):
            if not c["passed"]:
                bad.append(f"{p}:{c['name']}")
            if c["residual"] is not None:
                worst = max(worst, c["residual"])
    return not bad, worst, bad


def test_criterion_01_ad_correctness(verify_all, record_criterion):
    _, reports = verify_all
    ok, worst, bad = _gather(reports, preset_names(), "ad-vs-fd")
    # order-4 Taylor coefficients of exp/sin compositions against analytic derivatives
    lay = VarLayout(1)
    j = eval_jet(parse_expr("exp(sin(x1))", lay), [0.0, 0.0], 4)
    taylor = max(abs(j.partial((0,) * m) - ref) for m, ref in enumerate([1, 1, 1, 0, -3]))
    a, b = 0.4, -0.3
    j2 = eval_jet(parse_expr("exp(x1)*sin(y1_1)", lay), [a, b], 4)
    mixed = max(abs(j2.partial((0, 0, 1, 1)) - math.exp(a) * -math.sin(b)),
                abs(j2.partial((1, 1, 1)) - math.exp(a) * -math.cos(b)),
                abs(j2.partial((0, 0, 0, 0)) - math.exp(a) * math.sin(b)))
    taylor = max(taylor, mixed)
    ok = ok and taylor < 1e-10
    record_criterion(1, "AD vs finite differences and order-4 Taylor", ok,
                     f"FD worst {worst:.2e} <= 1e-6, Taylor worst {taylor:.2e} <= 1e-10 {bad or ''}")
    assert ok


def test_criterion_02_metricity(verify_all, record_criterion):
    _, reports = verify_all
    ok, worst, bad = _gather(reports, TANGENT + COTANGENT, "metricity-h", "metricity-v")
    record_criterion(2, "metricity on every tangent and cotangent preset", ok, f"worst {worst:.2e} <= 1e-9 {bad or ''}")
    assert ok


def test_criterion_03_torsion_and_symmetry(verify_all, record_criterion):
    _, reports = verify_all
    ok1, w1, b1 = _gather(reports, TANGENT, "torsion-t", "L-symmetry", "C-symmetry")
    ok2, w2, b2 = _gather(reports, COTANGENT, "N-symmetry", "H-symmetry", "C-symmetry")
    ok = ok1 and ok2
    record_criterion(3, "torsion-free canonical N, exact lower-index symmetry", ok,
                     f"worst {max(w1, w2):.2e} {b1 + b2 or ''}")
    assert ok


def test_criterion_04_electrodynamics(verify_all, record_criterion):
    _, reports = verify_all
    ok, worst, bad = _gather(reports, ["electrodynamics"], "electrodynamics-G", "electrodynamics-N", "lorentz-equation")
    record_criterion(4, "electrodynamics G, N closed forms and Lorentz equation", ok,
                     f"worst {worst:.2e} {bad or ''}")
    assert ok


def test_criterion_05_energy_laws(verify_all, record_criterion):
    _, reports = verify_all
    conservative = ["euclid-flat", "polar-plane", "electrodynamics", "randers", "ingarden", "lorentz-force"]
    forced = ["harmonic-oscillator", "damped-liouville", "lorentz-force", "finsler-beta-force"]
    ok1, w1, b1 = _gather(reports, conservative, "energy-drift")
    ok2, w2, b2 = _gather(reports, ["damped-liouville"], "damped-closed-form")
    ok3, w3, b3 = _gather(reports, forced, "energy-variation")
    ok = ok1 and ok2 and ok3
    record_criterion(5, "energy conservation, damping and energy-variation law", ok,
                     f"drift {w1:.2e}, damped {w2:.2e}, variation {w3:.2e} {b1 + b2 + b3 or ''}")
    assert ok


def test_criterion_06_maxwell(verify_all, record_criterion):
    _, reports = verify_all
    ok1, w1, b1 = _gather(reports, ["electrodynamics", "randers"], "maxwell-h", "maxwell-v")
    exact = [c["residual"] for p in RIEMANNIAN for c in _checks(reports, p, "maxwell-h", "maxwell-v")]
    ok = ok1 and all(r == 0.0 for r in exact)
    record_criterion(6, "Maxwell identities (exactly 0 on Riemannian presets)", ok,
                     f"worst {w1:.2e} <= 1e-7, Riemannian max {max(exact):.1e} {b1 or ''}")
    assert ok


def test_criterion_07_legendre(verify_all, record_criterion):
    _, reports = verify_all
    ok1, w1, b1 = _gather(reports, TANGENT, "legendre-roundtrip")
    ok2, w2, b2 = _gather(reports, ["electrodynamics"], "electrodynamics-dual")
    ok3, w3, b3 = _gather(reports, ["randers", "finsler-beta-force"], "cartan-dual-K2-equals-F2")
    ok = ok1 and ok2 and ok3
    record_criterion(7, "Legendre round trip, electrodynamics dual, K*^2 = F^2", ok,
                     f"round trip {w1:.2e}, dual {w2:.2e}, K2 {w3:.2e} {b1 + b2 + b3 or ''}")
    assert ok


def test_criterion_08_cartan_identities(verify_all, record_criterion):
    _, reports = verify_all
    ok, worst, bad = _gather(reports, CARTAN, "cartan-Delta", "cartan-K2-pp", "cartan-N-two-routes")
    record_criterion(8, "Cartan-space identities", ok, f"worst {worst:.2e} {bad or ''}")
    assert ok


def test_criterion_09_homogeneity(verify_all, record_criterion):
    _, reports = verify_all
    ok1, w1, b1 = _gather(reports, ["randers"], "homogeneity-F", "homogeneity-g")
    ok2, w2, b2 = _gather(reports, CARTAN, "homogeneity-K")
    ok = ok1 and ok2
    record_criterion(9, "homogeneity of F (r=1), g (r=0), K (r=1)", ok, f"worst {max(w1, w2):.2e} {b1 + b2 or ''}")
    assert ok


def test_criterion_10_higher_order(verify_all, record_criterion):
    _, reports = verify_all
    ok, worst, bad = _gather(reports, HIGHER, "dual-primal-roundtrip", "lagrange-equation-residual")
    ok_f, w_f, b_f = _gather(reports, ["higher-order-friction-k2"], "friction-closed-form")
    details = []
    # round trips at k = 2, 3
    rng = np.random.default_rng(10)
    rt = 0.0
    for k in (2, 3):
        N = [rng.normal(size=(2, 2)) for _ in range(k)]
        rt = max(rt, max(np.max(np.abs(a - b)) for a, b in zip(hi.primal_from_dual(hi.dual_from_primal(N)), N)))
    details.append(f"round trip {max(rt, worst):.1e}")
    # hand values on 1D fixtures
    lay = VarLayout(1, 2)
    pr = hi.prolong_riemannian([[parse_expr("exp(x1^2 - 1)", lay)]], 2, hi.HigherPoint.make([1], [1], [1]))
    L = parse_expr("y2_1^2", lay)
    p3 = hi.HigherPoint.make([0], [1], [1], [1], k=2)
    hand = max(abs(pr.dual.M[1][0, 0] - 2.0), abs(pr.z[1][0] - 1.5),
               abs(hi.energy_order_k(L, p3) + 2.0), abs(hi.craig_synge(L, p3)[0] - 6.0))
    details.append(f"hand values {hand:.1e}")
    # k = 1 reductions
    t = "(1 + x1^2)*y1^2 + (2 + sin(x2))*y2^2 + 0.1*y1^4 + 0.3*y1*y2*x1"
    sp = tg.TangentSpaceDef.from_text(2, "lagrange", t)
    hs = hi.HigherOrderSpace.from_text(2, 1, t)
    u = np.array([0.3, -0.2, 0.7, -0.4])
    red = max(np.max(np.abs(hi.k_semispray(hs, hi.HigherPoint.make(u[:2], u[2:])) - tg.canonical_semispray(sp, u))),
              abs(hi.energy_order_k(hs.lagrangian, hi.HigherPoint.make(u[:2], u[2:])) - tg.energy(sp, u)))
    details.append(f"k=1 reductions {red:.1e}")
    # energy of order 2 on the flat unforced system over [0, 5]
    flat = hi.HigherOrderSystem(hi.HigherOrderSpace.from_text(2, 2, "y2_1^2 + y2_2^2"))
    tr = integrate(lambda s: hi.higher_order_evolution_system(flat, s), [0, 0, 1.0, 0.5, 0.3, -0.2],
                   IntegratorConfig(h=0.01, t_end=5.0, stride=10))
    e = [hi.energy_order_k(flat.space, hi.extend_point(s, d, 2, 2)) for s, d in zip(tr.states, tr.derivs)]
    drift = float(np.ptp(e))
    details.append(f"flat drift {drift:.1e}")
    ok = ok and ok_f and rt < 1e-12 and hand < 1e-12 and red < 1e-12 and drift < 1e-6
    record_criterion(10, "higher-order kit", ok, ", ".join(details) + f" {bad + b_f or ''}")
    assert ok


def test_criterion_11_poisson(verify_all, record_criterion):
    _, reports = verify_all
    lay = VarLayout(2, side="cotangent")
    rng = np.random.default_rng(2024)
    anti, bil, jac = 0.0, 0.0, 0.0
    for _ in range(50):
        f, g, h = (random_polynomial(rng, lay) for _ in range(3))
        u = rng.uniform(-1, 1, 4)
        anti = max(anti, abs(ham.poisson(f, g, u) + ham.poisson(g, f, u)))
        comb = parse_expr(f"2*({f}) - 3*({h})", lay)
        lin = 2 * ham.poisson(f, g, u) - 3 * ham.poisson(h, g, u)
        bil = max(bil, abs(ham.poisson(comb, g, u) - lin) / (1 + abs(lin)))
        jac = max(jac, abs(ham.jacobi_residual(f, g, h, u)))
    ok_d, w_d, b_d = _gather(reports, COTANGENT, "hamiltonian-drift")
    ok = anti == 0.0 and bil < 1e-13 and jac < 1e-8 and ok_d
    record_criterion(11, "Poisson structure and H conservation", ok,
                     f"antisymmetry {anti:.1e}, bilinearity {bil:.1e}, Jacobi {jac:.1e}, drift {w_d:.1e} {b_d or ''}")
    assert ok


def test_criterion_12_integrator(record_criterion):
    decay = lambda s: -s
    errs = [abs(integrate(decay, [1.0], IntegratorConfig(h=h, t_end=1.0)).final[0] - math.exp(-1)) for h in (0.1, 0.05)]
    ratio = errs[0] / errs[1]
    osc = lambda s: np.array([s[1], -np.sin(s[0])])
    fwd = integrate(osc, [0.5, 0.2], IntegratorConfig(h=1e-3, t_end=2.0))
    back = integrate(lambda s: -osc(s), fwd.final, IntegratorConfig(h=1e-3, t_end=2.0))
    rev = float(np.max(np.abs(back.final - [0.5, 0.2])))
    ok = 12 <= ratio <= 20 and rev < 1e-6
    record_criterion(12, "RK4 order and time reversal", ok, f"halving ratio {ratio:.2f}, reversal {rev:.1e}")
    assert ok


def test_criterion_13_cli_contract(verify_all, record_criterion, tmp_path, capsys):
    code_all, reports = verify_all
    per_preset = {p: reports[p]["exit_code"] for p in preset_names()}
    corrupted = cli.main(["verify", "--preset", "corrupted-gl"])
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "lagrange", "n": 2, "lagrangian": "y1^2 + * y2"}))
    malformed = cli.main(["verify", "--config", str(bad)])
    numeric = cli.main(["inspect", "--preset", "randers", "--point", "0.1,0.2,0,0"])
    capsys.readouterr()
    ok = (code_all == 0 and all(v == 0 for v in per_preset.values())
          and corrupted == 1 and malformed == 2 and numeric == 3)
    record_criterion(13, "CLI exit codes 0/1/2/3", ok,
                     f"verify --all {code_all}, corrupted {corrupted}, malformed {malformed}, numerical {numeric}")
    assert ok
