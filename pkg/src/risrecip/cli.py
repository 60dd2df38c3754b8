"""Command-line front end.

Exit codes: 0 success, 1 domain error (message names the failing check),
2 usage error.  Every output file is written atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .channel import SPEED_OF_LIGHT, Direction, received_power, reciprocity_report
from .errors import ConfigurationError, RisError
from .experiments import (FIXTURE_ENV, FIXTURE_IDS, TrajectoryPoint, atomic_write_text,
                          circle_fit, load_scenario, optimize_pattern, pattern_table,
                          render_table, report_csv, report_json, resolve_scenario_path,
                          trajectory_csv, trajectory_json, voltage_sweep)
from .models import IdealVaractor, build_panel
from .nonreciprocal import (HarmonicMap, NonlinearCellModel, angle_grid, dominant_response,
                            fourier_coefficients, harmonic_radiation, load_schedule,
                            nonlinear_transmission, phase_gradient_schedule, round_trip_test)

SCENARIO_HELP = (f"scenario file path or fixture id ({', '.join(FIXTURE_IDS)}); "
                 f"${FIXTURE_ENV} overrides the fixture directory")

SCHEMAS = """file schemas:
  trajectory CSV: voltage_v,re_up,im_up,re_down,im_down
  report CSV:     scenario,pattern,p_up_dbm,p_down_dbm,phase_up_deg,phase_down_deg
                  ("NA" where phase is not reported)
  harmonic CSV:   k,theta_deg,re,im,abs
  JSON outputs mirror the CSV field names (choose with a .json suffix)
  schedule file:  INI, [schedule] period_s, then [group.N] segments =
                  "start end value; ..." tiling [0, 1) of the period"""


class UsageError(Exception):
    pass


def emit_plotdata(data, path):
    """Write a trajectory (list of TrajectoryPoint) or a HarmonicMap to CSV/JSON."""
    path = Path(path)
    as_json = path.suffix == ".json"
    if isinstance(data, HarmonicMap):
        if len(data) == 0:
            raise ConfigurationError("empty harmonic map")
        rows = [(k, th, a.real, a.imag, abs(a)) for (k, th), a in data.items()]
        fields = ("k", "theta_deg", "re", "im", "abs")
        if as_json:
            text = json.dumps([dict(zip(fields, r)) for r in rows], indent=2) + "\n"
        else:
            out = io.StringIO()
            wr = csv.writer(out, lineterminator="\n")
            wr.writerow(fields)
            for r in rows:
                wr.writerow([r[0], *(repr(float(v)) for v in r[1:])])
            text = out.getvalue()
    else:
        points = list(data)
        if not points:
            raise ConfigurationError("empty trajectory: nothing to plot")
        text = trajectory_json(points) if as_json else trajectory_csv(points)
    atomic_write_text(path, text)
    return path


def _check_out(path):
    if path is None:
        return None
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir():
        raise UsageError(f"output directory does not exist: {parent}")
    return p


def _check_scenario(ref):
    try:
        resolve_scenario_path(ref)
    except RisError as exc:
        raise UsageError(str(exc)) from None
    return ref


def _write(text, path):
    atomic_write_text(path, text)
    print(f"wrote {path}")


def cmd_sweep(args):
    sc = load_scenario(args.scenario)
    points = voltage_sweep(sc.scene("identical"), args.steps)
    if args.noise:
        rng = np.random.default_rng(args.seed)
        scale = args.noise * max(abs(p.h_up) for p in points)
        noisy = []
        for p in points:
            n = rng.normal(0, scale, 4)
            noisy.append(TrajectoryPoint(p.voltage, p.h_up + complex(n[0], n[1]),
                                         p.h_down + complex(n[2], n[3])))
        points = noisy
    fit = circle_fit([p.h_up for p in points])
    dev = max(abs(p.h_up - p.h_down) for p in points)
    print(f"{sc.id}: {len(points)} points, circle centre {fit.center.real:.6e}"
          f"{fit.center.imag:+.6e}j, radius {fit.radius:.6e}, rms residual {fit.rms_residual:.3e}")
    print(f"max |h_up - h_down| = {dev:.3e}")
    if args.out:
        emit_plotdata(points, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_table(args):
    scenarios = [load_scenario(s) for s in (args.scenario or FIXTURE_IDS)]
    rows = pattern_table(scenarios)
    sys.stdout.write(render_table(rows, scenarios))
    if args.out:
        _write(report_json(rows) if args.out.suffix == ".json" else report_csv(rows), args.out)
    return 0


def cmd_reciprocity(args):
    sc = load_scenario(args.scenario)
    kind = args.pattern or sc.patterns[0].kind
    rep = reciprocity_report(sc.scene(kind), args.mag_tol, args.phase_tol)
    print(f"{sc.id} / {sc.scene(kind).pattern.name}")
    print(f"h_up   = {rep.h_up.real:.9e}{rep.h_up.imag:+.9e}j")
    print(f"h_down = {rep.h_down.real:.9e}{rep.h_down.imag:+.9e}j")
    print(f"deviation {rep.magnitude_dev_db:.6f} dB / {rep.phase_dev_deg:.6f}\N{DEGREE SIGN}")
    print(rep.render(sc.geometry.pt_dbm))
    print(f"verdict {rep.verdict}")
    return 0


DEMO_CARRIER = 10e9


def _demo_panel(f1, cols=64):
    lam = SPEED_OF_LIGHT / f1
    return build_panel(1, cols, lam / 4, lam / 4, 1, IdealVaractor())


def _demo_schedule(panel, f1, fm_ratio, beta_ratio, reverse=False):
    beta = beta_ratio * 2 * math.pi * f1 / SPEED_OF_LIGHT
    return phase_gradient_schedule(panel, 1.0 / (fm_ratio * f1), beta, reverse=reverse)


def _schedule_panel(args):
    if args.schedule:
        if not args.scenario:
            raise UsageError("--schedule needs --scenario for the panel")
        sc = load_scenario(args.scenario)
        if args.f is None:
            args.f = sc.geometry.f
        return sc.panel, load_schedule(args.schedule)
    if args.f is None:
        args.f = DEMO_CARRIER
    panel = _demo_panel(args.f)
    return panel, _demo_schedule(panel, args.f, args.fm_ratio, args.beta_ratio)


def cmd_harmonics(args):
    panel, schedule = _schedule_panel(args)
    if schedule.n_groups != panel.n_groups:
        raise ConfigurationError(
            f"schedule has {schedule.n_groups} groups, panel has {panel.n_groups}")
    spec = fourier_coefficients(schedule, panel.cell_model, args.k_max, carrier=args.f)
    hmap = harmonic_radiation(panel, spec, args.theta_in, args.f, angle_grid(args.grid_res))
    dom = dominant_response(hmap)
    for k in spec.harmonics():
        print(f"k={k:+d}  f={(args.f + k * spec.f_m) / 1e9:.6f} GHz  "
              f"mean|a_k|={np.abs(spec[k]).mean():.6f}")
    if dom is None:
        print("dominant: no signal")
    else:
        print(f"dominant: k={dom[0]:+d} theta_out={dom[1]:.2f} deg "
              f"(specular frame {-dom[1]:.2f} deg) |amplitude|={abs(dom[2]):.6f}")
    if args.out:
        emit_plotdata(hmap, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_roundtrip(args):
    panel, schedule = _schedule_panel(args)
    down = None
    if args.reverse_down:
        if args.schedule:
            raise UsageError("--reverse-down applies to the built-in demo schedule only")
        down = _demo_schedule(panel, args.f, args.fm_ratio, args.beta_ratio, reverse=True)
    res = round_trip_test(panel, schedule, args.theta1, args.f, down, args.k_max, args.grid_res)
    lines = [f"uplink:   theta1={res.theta1:.2f} deg f1={res.f1 / 1e9:.6f} GHz -> "
             f"k={res.k1:+d} theta2={res.theta2:.2f} deg f2={res.f2 / 1e9:.6f} GHz",
             f"downlink: theta2={res.theta2:.2f} deg f2={res.f2 / 1e9:.6f} GHz -> "
             f"k={res.k2:+d} theta3={res.theta3:.2f} deg f3={res.f3 / 1e9:.6f} GHz",
             f"momentum ledger imbalance {res.momentum_imbalance:.3e} rad/m",
             f"reciprocal {str(res.reciprocal).lower()}"]
    print("\n".join(lines))
    if args.out:
        rec = {"theta1_deg": res.theta1, "f1_hz": res.f1, "theta2_deg": res.theta2,
               "f2_hz": res.f2, "theta3_deg": res.theta3, "f3_hz": res.f3, "k1": res.k1,
               "k2": res.k2, "reciprocal": res.reciprocal,
               "momentum_imbalance": res.momentum_imbalance}
        _write(json.dumps(rec, indent=2) + "\n", args.out)
    return 0


def cmd_nonlinear(args):
    model = NonlinearCellModel(args.t_max, args.c_fwd, args.c_rev, args.gamma, args.p_ref)
    powers_dbm = np.linspace(args.p_min_dbm, args.p_max_dbm, args.steps)
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(("p_in_dbm", "p_in_w", "downlink_amplitude", "uplink_amplitude",
                 "isolation_db"))
    for p_dbm in powers_dbm:
        p_w = float(1e-3 * 10 ** (p_dbm / 10))
        fwd = nonlinear_transmission(model, Direction.DOWNLINK, p_w)
        rev = nonlinear_transmission(model, Direction.UPLINK, p_w)
        wr.writerow([repr(float(p_dbm)), repr(p_w), repr(fwd), repr(rev),
                     repr(20 * math.log10(fwd / rev))])
    text = out.getvalue()
    sys.stdout.write(text)
    if args.out:
        _write(text, args.out)
    return 0


def cmd_optimize(args):
    sc = load_scenario(args.scenario)
    res = optimize_pattern(sc.scene("identical"), args.mode)
    values = ", ".join(f"{v:g}" for v in res.pattern.values)
    print(f"{sc.id} {args.mode}: groups [{values}]")
    print(f"gain over identical: uplink {res.gain_db_up:.6f} dB, downlink {res.gain_db_down:.6f} dB")
    pt = sc.geometry.pt_dbm
    print(f"received power: uplink {received_power(pt, res.h_up):.2f} dBm, "
          f"downlink {received_power(pt, res.h_down):.2f} dBm")
    if args.out:
        rec = {"scenario": sc.id, "mode": args.mode, "values": list(res.pattern.values),
               "gain_db_up": res.gain_db_up, "gain_db_down": res.gain_db_down}
        _write(json.dumps(rec, indent=2) + "\n", args.out)
    return 0


def build_parser():
    fmt = argparse.RawDescriptionHelpFormatter
    parser = argparse.ArgumentParser(
        prog="risrecip", description="RIS-assisted TDD link simulator: reciprocity checks "
        "and nonreciprocal surface demonstrations.", epilog=SCHEMAS, formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, func):
        p = sub.add_parser(name, help=help_, description=help_, epilog=SCHEMAS,
                           formatter_class=fmt)
        p.set_defaults(func=func)
        return p

    p = add("sweep", "sweep one common varactor voltage over all groups and record "
            "the uplink/downlink trajectory", cmd_sweep)
    p.add_argument("--scenario", required=True, help=SCENARIO_HELP)
    p.add_argument("--steps", type=int, default=211, help="voltage steps (default 211)")
    p.add_argument("--out", type=Path, help="trajectory CSV/JSON output")
    p.add_argument("--noise", type=float, default=0.0,
                   help="additive Gaussian noise, as a fraction of max |h| (default 0)")
    p.add_argument("--seed", type=int, default=0, help="noise seed (default 0)")

    p = add("table", "received power/phase per scenario and coding pattern", cmd_table)
    p.add_argument("--scenario", action="append",
                   help=SCENARIO_HELP + "; repeatable, default all four fixtures")
    p.add_argument("--out", type=Path, help="report CSV/JSON output")

    p = add("reciprocity", "compare uplink and downlink channels of one scene",
            cmd_reciprocity)
    p.add_argument("--scenario", required=True, help=SCENARIO_HELP)
    p.add_argument("--pattern", choices=["identical", "gradient", "stripe", "custom"],
                   help="coding pattern (default: first listed in the scenario)")
    p.add_argument("--mag-tol", type=float, default=1e-9, help="dB (default 1e-9)")
    p.add_argument("--phase-tol", type=float, default=1e-9, help="degrees (default 1e-9)")

    for name, help_, func in (
            ("harmonics", "harmonic spectrum and far-field beams of a time-modulated "
             "surface", cmd_harmonics),
            ("roundtrip", "two-pass angle/frequency round trip through a "
             "time-modulated surface", cmd_roundtrip)):
        p = add(name, help_, func)
        p.add_argument("--scenario", help=SCENARIO_HELP + " (panel for --schedule)")
        p.add_argument("--schedule", type=Path, help="schedule file; default is a built-in "
                       "64-column phase-gradient demo")
        p.add_argument("--f", type=float, help="carrier in Hz (default: the scenario "
                       "carrier with --schedule, else 10e9)")
        p.add_argument("--fm-ratio", type=float, default=0.05,
                       help="demo modulation frequency / carrier (default 0.05)")
        p.add_argument("--beta-ratio", type=float, default=0.2,
                       help="demo spatial gradient / carrier wavenumber (default 0.2)")
        p.add_argument("--k-max", type=int, default=4, help="highest harmonic (default 4)")
        p.add_argument("--grid-res", type=float, default=0.01,
                       help="angle grid resolution in degrees (default 0.01)")
        p.add_argument("--out", type=Path, help="output file")
        if name == "harmonics":
            p.add_argument("--theta-in", type=float, default=30.0, help="degrees (default 30)")
        else:
            p.add_argument("--theta1", type=float, default=30.0, help="degrees (default 30)")
            p.add_argument("--reverse-down", action="store_true",
                           help="reverse the demo time gradient in the downlink pass")

    p = add("nonlinear", "power sweep of the asymmetric nonlinear cell", cmd_nonlinear)
    p.add_argument("--p-min-dbm", type=float, default=-30.0)
    p.add_argument("--p-max-dbm", type=float, default=20.0)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--t-max", type=float, default=0.9)
    p.add_argument("--c-fwd", type=float, default=0.01)
    p.add_argument("--c-rev", type=float, default=100.0)
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--p-ref", type=float, default=1e-3, help="watts (default 1e-3)")
    p.add_argument("--out", type=Path, help="CSV output")

    p = add("optimize", "search group settings that maximise received power", cmd_optimize)
    p.add_argument("--scenario", required=True, help=SCENARIO_HELP)
    p.add_argument("--mode", required=True,
                   choices=["continuous_align", "exhaustive_bits", "greedy_bits"])
    p.add_argument("--out", type=Path, help="JSON output")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.out = _check_out(getattr(args, "out", None))
        for ref in ([args.scenario] if isinstance(getattr(args, "scenario", None), str)
                    else getattr(args, "scenario", None) or []):
            _check_scenario(ref)
        if getattr(args, "schedule", None) and not args.schedule.is_file():
            raise UsageError(f"schedule file not found: {args.schedule}")
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"risrecip: error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"risrecip: error: {exc}", file=sys.stderr)
        return 2
    except RisError as exc:
        print(f"risrecip: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"risrecip: cannot write output: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())
