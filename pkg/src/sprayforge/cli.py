"""Command-line surface: inspect, verify, simulate, legendre, prolong, scenario list.

Exit codes: 0 success, 1 verification failure, 2 configuration or parse
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import hamilton as ham
from . import higher as hi
from . import legendre as leg
from . import mech
from . import tangent as tg
from . import __version__
from .errors import ConfigError, NumericalError, ParseError
from .integrate import (IntegratorConfig, integrate, monitor_energy, monitor_energy_residual,
                        monitor_residual, monitor_speed)
from .jet import eval_jet
from .scenarios import NEGATIVE_CONTROLS, build, load_config, load_preset, preset_document, preset_names
from .verify import DEFAULT_SEED, legendre_grid, run_verify

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


# -- helpers -----------------------------------------------------------------


def _config(args):
    if getattr(args, "config", None) and getattr(args, "preset", None):
        raise ConfigError("give either --config or --preset, not both")
    if getattr(args, "config", None):
        return load_config(args.config)
    if getattr(args, "preset", None):
        return load_preset(args.preset)
    raise ConfigError("a scenario is required (--preset NAME or --config FILE)")


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SPRAYFORGE_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"SPRAYFORGE_SEED must be an integer, got {env!r}") from None


def _parse_point(text, size, what="--point"):
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise ConfigError(f"{what} must be comma-separated numbers, got {text!r}") from None
    if len(vals) != size:
        raise ConfigError(f"{what} needs {size} components, got {len(vals)}")
    return np.array(vals)


def _default_point(sc):
    cfg = sc.config
    if cfg.initial is not None:
        return np.array(cfg.initial, float)
    x = np.full(cfg.n, 0.5 * sum(cfg.sample_x))
    rest = np.full(cfg.layout.size - cfg.n, 0.5 * sum(cfg.sample_y))
    return np.concatenate([x, rest])


def _point(args, sc):
    size = sc.config.layout.size
    return _parse_point(args.point, size) if args.point else _default_point(sc)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _out_dir(args, cfg):
    return args.out_dir or cfg.output_dir


def _write_json(out_dir, fname, doc):
    if out_dir is None:
        return None
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    target = path / fname
    with open(target, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(doc), fh, indent=2)
    return target


def _fmt(a):
    return np.array2string(np.asarray(a, float), precision=10, suppress_small=False, max_line_width=120)


def _print_report(report, indent=""):
    for key, val in report.items():
        if isinstance(val, dict) and any(isinstance(v, np.ndarray) for v in val.values()):
            print(f"{indent}{key}:")
            _print_report(val, indent + "  ")
        elif isinstance(val, (np.ndarray, list, tuple)) and np.ndim(val) > 0:
            pad = indent + "  "
            print(f"{indent}{key}:")
            print(pad + _fmt(val).replace("\n", "\n" + pad))
        else:
            print(f"{indent}{key}: {val}")


def _generator_jet(expr, u, order):
    if expr is None:
        return {}
    table = eval_jet(expr, u, order).table()
    return {",".join(str(i) for i in key) if key else "value": v for key, v in table.items()}


# -- inspect -----------------------------------------------------------------


def inspect_report(sc, u, order=2) -> dict:
    """Structured report of every geometric object at ``u``."""
    cfg = sc.config
    rep = {"scenario": cfg.name, "kind": cfg.kind, "n": cfg.n, "point": u}
    if cfg.side == "tangent":
        b = tg._build(sc.space, u, curvature=True)
        rep.update(g=b.g, g_inverse=b.ginv, semispray=b.G, N=b.N, berwald=b.B, torsion_t=b.t,
                   curvature_R=b.R, L=b.Lc, C=b.Cc, deflection_D=b.D, deflection_d=b.d,
                   electromagnetic_F=b.F, electromagnetic_f=b.f, cartan_C=b.cartan,
                   jet_orders=b.orders, energy=tg.energy(sc.space, u))
        if sc.system is not None and sc.system.force is not None:
            rep.update(evolution_semispray=mech.evolution_semispray(sc.system, u),
                       evolution_N=mech.evolution_nonlinear_connection(sc.system, u),
                       system_electromagnetic=mech.system_em_tensor(sc.system, u))
    elif cfg.side == "cotangent":
        b = ham.cotangent_bundle(sc.space, u)
        rep.update(g_upper=b.gup, g_lower=b.glow, N=b.N, curvature_R=b.R, H=b.Hc, C=b.Cc,
                   hamiltonian=ham.hamiltonian_value(sc.space, u),
                   jet_orders={"H": 4, "g": 2, "N": 1, "connection": 1, "R": 0})
        if cfg.kind == "cartan":
            rep["cartan_identities"] = ham.cartan_identities(sc.space, u, b)
    else:
        n, k = cfg.n, cfg.k
        pt = hi.HigherPoint.from_vector(u, n, k)
        if cfg.kind == "prolonged-riemannian":
            dc = hi.dual_coefficients_prolongation(sc.metric_exprs, pt)
        else:
            dc = hi.dual_coefficients_semispray(sc.space, pt, sc.system.force)
        rep.update(metric_top_block=hi.metric_k(sc.space, pt), k_semispray=hi.k_semispray(sc.space, pt),
                   main_invariants=hi.main_invariants(sc.space, pt),
                   dual_coefficients={f"M{a + 1}": M for a, M in enumerate(dc.M)},
                   primal_coefficients={f"N{a + 1}": N for a, N in enumerate(hi.primal_from_dual(dc))},
                   liouville_dvectors={f"z{a + 1}": z for a, z in enumerate(hi.liouville_dvectors(dc, pt))},
                   dual_provenance=dc.provenance)
    gen = sc.exprs.get("generator")
    if gen is not None:
        rep["generator_jet"] = _generator_jet(gen, u, order)
        rep["generator_jet_order"] = order
    return rep


def cmd_inspect(args):
    sc = build(_config(args))
    u = _point(args, sc)
    rep = inspect_report(sc, u, args.order if args.order is not None else 2)
    _print_report(rep)
    _write_json(_out_dir(args, sc.config), f"inspect-{sc.config.name}.json", rep)
    return EXIT_OK


# -- verify ------------------------------------------------------------------


def verify_status(results) -> int:
    if any(not r.passed and r.error is None for r in results):
        return EXIT_FAIL
    if any(r.error is not None for r in results):
        return EXIT_NUMERIC
    return EXIT_OK


def _print_verify(name, results):
    print(f"verify {name}")
    print(f"  {'check':34s} {'residual':>12s} {'threshold':>10s}  status")
    for r in results:
        res = "-" if r.error else f"{r.residual:.3e}"
        extra = f"  {r.error}" if r.error else (f"  ({r.note})" if r.note else "")
        print(f"  {r.name:34s} {res:>12s} {r.threshold:>10.0e}  {r.status}{extra}")


def cmd_verify(args):
    seed = _seed(args)
    cfgs = [load_preset(nm) for nm in preset_names()] if args.all else [_config(args)]
    worst = EXIT_OK
    for cfg in cfgs:
        sc = build(cfg)
        results = run_verify(sc, seed)
        _print_verify(cfg.name, results)
        code = verify_status(results)
        _write_json(_out_dir(args, cfg), f"verify-{cfg.name}.json", {
            "scenario": cfg.name, "seed": seed, "exit_code": code,
            "checks": [dict(name=r.name, residual=r.residual if np.isfinite(r.residual) else None,
                            threshold=r.threshold, passed=r.passed, note=r.note, error=r.error)
                       for r in results]})
        if code == EXIT_FAIL or (code == EXIT_NUMERIC and worst == EXIT_OK):
            worst = code
    return worst


# -- simulate ----------------------------------------------------------------


def _monitors(sc):
    cfg = sc.config
    if cfg.side == "higher":
        sys_ = sc.system
        return {"lagrange_residual": monitor_residual(lambda s, d: hi.lagrange_equation_residual(sys_, s, d))}
    mons = {"energy": monitor_energy(sc.system)}
    if sc.system.force is not None:
        mons["energy_residual"] = monitor_energy_residual(sc.system)
    if cfg.side == "tangent":
        mons["speed"] = monitor_speed(cfg.n)
    return mons


def write_trajectory_csv(path, names, tr):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        mon = list(tr.monitors)
        w.writerow(["t"] + list(names) + mon)
        for i, t in enumerate(tr.t):
            row = [t] + list(tr.states[i]) + [tr.monitors[m][i] for m in mon]
            w.writerow(["%.17g" % v for v in row])


def read_trajectory_csv(path):
    """(header, array) of a CSV written by ``write_trajectory_csv``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def cmd_simulate(args):
    cfg = _config(args)
    sc = build(cfg)
    if sc.system is None:
        raise ConfigError(f"{cfg.kind} scenarios have no evolution system to simulate")
    ic = cfg.integration
    ic = IntegratorConfig(method=args.method or ic.method, h=args.h or ic.h, t_start=ic.t_start,
                          t_end=args.t_end or ic.t_end, rtol=ic.rtol, atol=ic.atol, stride=ic.stride,
                          h_min=ic.h_min)
    state0 = _parse_point(args.initial, cfg.layout.size, "--initial") if args.initial else _default_point(sc)
    tr = integrate(sc.field, state0, ic, _monitors(sc))
    out = Path(_out_dir(args, cfg) or ".")
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{cfg.name}.csv"
    write_trajectory_csv(csv_path, cfg.state_names(), tr)
    summary = {"scenario": cfg.name, "method": ic.method, "h": ic.h, "t_end": float(tr.t[-1]),
               "initial": state0, "endpoint": tr.final, "monitor_extrema": tr.monitor_extrema(),
               "accepted_steps": tr.accepted, "rejected_steps": tr.rejected, "samples": len(tr.t),
               "error": tr.error, "csv": str(csv_path)}
    _write_json(out, f"{cfg.name}-summary.json", summary)
    print(f"simulate {cfg.name}: {len(tr.t)} samples, {tr.accepted} accepted / {tr.rejected} rejected steps")
    print(f"  endpoint t={tr.t[-1]:.6g}: {_fmt(tr.final)}")
    for k, (lo, hi_) in tr.monitor_extrema().items():
        print(f"  monitor {k}: min {lo:.6e} max {hi_:.6e}")
    print(f"  wrote {csv_path}")
    if tr.error:
        print(f"integration failed: {tr.error}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# -- legendre ----------------------------------------------------------------


def legendre_rows(sc, x, ys):
    from .verify import _em_dual_closed

    space = sc.space
    pair = leg.LegendrePair(space)
    closed = sc.config.closed_form.get("type") == "electrodynamics"
    rows = []
    for y in ys:
        u = np.concatenate([x, y])
        try:
            p = leg.legendre_forward(space, x, y)
            hstar = leg.dual_hamiltonian(pair, x, p)
            res = leg.round_trip_residual(pair, x, y)
        except NumericalError as exc:
            raise type(exc)(f"{exc} (grid point y = {list(y)})") from None
        row = {"x": x, "y": y, "p": p, "L": tg.lagrangian_jet(space, u, 0).value, "H*": hstar, "roundtrip": res}
        if closed:
            row["H*_closed"] = _em_dual_closed(sc, x, p)
            row["closed_diff"] = abs(hstar - row["H*_closed"])
        rows.append(row)
    return rows


def cmd_legendre(args):
    cfg = _config(args)
    sc = build(cfg)
    if cfg.side != "tangent" or cfg.kind == "generalized-lagrange":
        raise ConfigError("legendre needs a regular Lagrange, Finsler or Riemannian scenario")
    rng = np.random.default_rng(_seed(args))
    x, ys = legendre_grid(sc, rng, args.grid)
    if args.point:
        x = _parse_point(args.point, cfg.n, "--point (base point x)")
    rows = legendre_rows(sc, x, ys)
    n = cfg.n
    print(f"legendre {cfg.name}: base point x = {_fmt(x)}, {len(rows)} fibre points")
    cols = ["y", "p", "L", "H*", "roundtrip"] + (["closed_diff"] if "closed_diff" in rows[0] else [])
    print("  " + "  ".join(f"{c:>{14 * n if c in ('y', 'p') else 12}s}" for c in cols))
    for r in rows:
        cells = []
        for c in cols:
            v = r[c]
            cells.append(" ".join(f"{a:13.6e}" for a in v) if np.ndim(v) else f"{v:12.5e}")
        print("  " + "  ".join(cells))
    worst = max(r["roundtrip"] for r in rows)
    summary = {"scenario": cfg.name, "x": x, "grid": args.grid, "max_roundtrip": worst, "rows": rows}
    print(f"  max round-trip residual {worst:.3e}")
    if "closed_diff" in rows[0]:
        summary["max_closed_diff"] = max(r["closed_diff"] for r in rows)
        print(f"  max |H* - closed form| {summary['max_closed_diff']:.3e}")
    _write_json(_out_dir(args, cfg), f"legendre-{cfg.name}.json", summary)
    return EXIT_OK


# -- prolong -----------------------------------------------------------------


def cmd_prolong(args):
    cfg = _config(args)
    sc = build(cfg)
    if cfg.metric is None or cfg.kind not in ("riemannian", "prolonged-riemannian"):
        raise ConfigError("prolong needs a Riemannian metric table (riemannian or prolonged-riemannian scenario)")
    k = args.k or (cfg.k if cfg.kind == "prolonged-riemannian" else 2)
    n = cfg.n
    if args.point:
        u = _parse_point(args.point, (k + 1) * n)
    else:
        base = _default_point(sc)
        u = np.concatenate([base, np.resize(base[n:], (k + 1) * n - len(base))])[:(k + 1) * n]
    pt = hi.HigherPoint.from_vector(u, n, k)
    pr = hi.prolong_riemannian(sc.metric_exprs, k, pt)
    rep = {"scenario": cfg.name, "k": k, "point": u,
           "dual_coefficients": {f"M{a + 1}": M for a, M in enumerate(pr.dual.M)},
           "liouville_dvectors": {f"z{a + 1}": z for a, z in enumerate(pr.z)},
           "prolonged_lagrangian": pr.lagrangian}
    if k == 1:
        rep["note"] = "k = 1: the prolongation is the Sasaki lift of the base metric with N = gamma y"
    _print_report(rep)
    _write_json(_out_dir(args, cfg), f"prolong-{cfg.name}.json", rep)
    return EXIT_OK


# -- scenario list -----------------------------------------------------------


def cmd_scenario(args):
    names = preset_names(include_controls=args.all)
    print(f"{'name':26s} {'kind':22s} {'n':>2s} {'k':>2s}  description")
    for nm in names:
        doc = preset_document(nm)
        tag = " [negative control]" if nm in NEGATIVE_CONTROLS else ""
        print(f"{nm:26s} {doc['kind']:22s} {doc.get('n', ''):>2} {doc.get('k', 1):>2}  "
              f"{doc.get('description', '')}{tag}")
    return EXIT_OK


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sprayforge", description="Semispray and connection geometry engine.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, point=True):
        p.add_argument("--preset", help="built-in scenario name")
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--seed", type=int, default=None, help="random seed (env SPRAYFORGE_SEED)")
        p.add_argument("--out-dir", default=None, help="directory for JSON / CSV output")
        if point:
            p.add_argument("--point", help="comma-separated coordinates in layout order")

    p = sub.add_parser("inspect", help="report every geometric object at a point")
    common(p)
    p.add_argument("--order", type=int, default=None, help="order of the generator jet in the report")
    p.set_defaults(fn=cmd_inspect)

    p = sub.add_parser("verify", help="run every applicable invariant check")
    common(p, point=False)
    p.add_argument("--all", action="store_true", help="verify every preset")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("simulate", help="integrate the evolution system and write a CSV trajectory")
    common(p, point=False)
    p.add_argument("--initial", help="comma-separated initial state (defaults to the scenario's)")
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--h", type=float, default=None)
    p.add_argument("--method", choices=["rk4-fixed", "rkf45-adaptive"], default=None)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("legendre", help="Legendre transform on a fibre grid")
    common(p)
    p.add_argument("--grid", type=int, default=5, help="grid points per fibre axis")
    p.set_defaults(fn=cmd_legendre)

    p = sub.add_parser("prolong", help="prolong a Riemannian metric to the k-th order bundle")
    common(p)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(fn=cmd_prolong)

    p = sub.add_parser("scenario", help="scenario registry")
    p.add_argument("action", choices=["list"])
    p.add_argument("--all", action="store_true", help="include negative controls")
    p.set_defaults(fn=cmd_scenario)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ParseError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
