"""Command-line front end: ``barlift run <config> [--output DIR] [--seed N]``."""

import argparse
import os
import sys
import time

import numpy as np

from .certify import bounds_for_d1, certify, synthesize_gains
from .config import parse_config
from .errors import BarliftError, NeverEnters, SynthesisFailed
from .sim import run_disturbance, run_energy, run_epsilon_sweep, run_reduced_tracking

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return ",".join(_fmt(a) for a in v)
    return str(v)


def write_report(path, items) -> None:
    with open(path, "w") as fh:
        for k, v in items:
            fh.write(f"{k}={_fmt(v)}\n")


def read_report(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and "=" in line:
                k, v = line.split("=", 1)
                out[k] = v
    return out


NAMES = ("e_x", "e_v", "e_qr", "e_wr", "e_q1", "e_w1", "e_q2", "e_w2")


def track_verdict(trace, cfg, p) -> tuple:
    """Final-error and thrust-settling checks on a tracking trace."""
    e0, e1 = trace.errors[0], trace.errors[-1]
    ok_abs = bool(np.all(e1 < cfg["track.max_error"]))
    ok_rel = bool(np.all(e1 < cfg["track.max_ratio"] * e0))
    hover = (p.m_Q + 0.5 * p.m_r) * p.g
    tail = trace.t >= trace.t[-1] - cfg["track.settle_window"] - 1e-12
    u = trace.data[tail][:, 9:11]
    dev = float(np.max(np.abs(u - hover)) / hover)
    ok_u = dev <= cfg["track.u_band"]
    return ok_abs and ok_rel and ok_u, ok_abs, ok_rel, dev


def _run_track(cfg, out):
    p, g = cfg.params(), cfg.gains()
    res = run_reduced_tracking(p, g, cfg.trajectory(), cfg.initial_state(), cfg.integrator(),
                               bounds=cfg.bounds(), attitude=cfg["attitude.enabled"],
                               thrust_sign=cfg["attitude.thrust_sign"])
    res.trace.to_csv(os.path.join(out, "trace.csv"))
    ok, ok_abs, ok_rel, dev = track_verdict(res.trace, cfg, p)
    items = [("mode", "track"), ("rows", len(res.trace))]
    items += [(f"final_{n}", v) for n, v in zip(NAMES, res.trace.errors[-1])]
    items += [(f"initial_{n}", v) for n, v in zip(NAMES, res.trace.errors[0])]
    items += [("final_V", res.trace.column("V")[-1]), ("u_band_deviation", dev),
              ("errors_below_threshold", ok_abs), ("errors_below_ratio", ok_rel), ("verdict", ok)]
    return ok, items


def _run_sweep(cfg, out):
    p, g = cfg.params(), cfg.gains()
    r = run_epsilon_sweep(p, g, cfg.trajectory(), cfg.initial_state(), cfg["sweep.epsilons"],
                          T=cfg["sweep.T"], t1=cfg["sweep.t1"], h_factor=cfg["sweep.h_factor"])
    with open(os.path.join(out, "sweep.csv"), "w") as fh:
        fh.write("epsilon,deviation,boundary_layer_deviation\n")
        for e, d, d0 in zip(r.epsilons, r.deviations, r.initial_deviation):
            fh.write(f"{e:.17g},{d:.17g},{d0:.17g}\n")
    ok_ratio = all(cfg["sweep.ratio_lo"] <= q <= cfg["sweep.ratio_hi"] for q in r.ratios)
    ok_scale = r.deviations[-1] < cfg["sweep.scale_fraction"] * r.scale
    items = [("mode", "sweep")]
    items += [(f"deviation_eps_{e:g}", d) for e, d in zip(r.epsilons, r.deviations)]
    items += [(f"ratio_{k + 1}", q) for k, q in enumerate(r.ratios)]
    items += [("scale", r.scale), ("ratio_check", ok_ratio), ("scale_check", ok_scale),
              ("verdict", ok_ratio and ok_scale)]
    return ok_ratio and ok_scale, items


def _run_disturb(cfg, out):
    p, g, b = cfg.params(), cfg.gains(), cfg.bounds()
    if cfg["disturb.d1_target"] > 0:
        b = bounds_for_d1(g, b, p, cfg["disturb.d1_target"])
    items = [("mode", "disturb"), ("delta_x", b.delta_x), ("delta_qr", b.delta_qr),
             ("delta_q", b.delta_q)]
    try:
        r = run_disturbance(p, g, b, cfg.trajectory(), cfg.initial_state(), cfg.integrator(),
                            seed=cfg["seed"], slack=cfg["disturb.slack"])
    except NeverEnters as exc:
        return False, items + [("verdict", False), ("message", str(exc))]
    r.run.trace.to_csv(os.path.join(out, "trace.csv"))
    T = r.run.trace.t[-1]
    ok = r.contained and r.t_enter < 0.5 * T
    items += [("d1", r.d1), ("t_enter", r.t_enter), ("max_V_after", r.max_V_after),
              ("contained", r.contained), ("verdict", ok)]
    return ok, items


def _run_certify(cfg, out):
    rep = certify(cfg.gains(), cfg.bounds(), cfg.params(), with_bound=True)
    with open(os.path.join(out, "report.txt"), "w") as fh:
        fh.write("mode=certify\n" + rep.to_text())
    return rep.verdict, None


def _run_synthesize(cfg, out):
    b, p = cfg.bounds(), cfg.params()
    items = [("mode", "synthesize"), ("alpha", b.alpha)]
    try:
        g = synthesize_gains(b, p, cfg["synthesize.target_lambda"], cfg["synthesize.alpha_max"],
                             base=cfg.gains())
    except SynthesisFailed as exc:
        return False, items + [("verdict", False), ("binding_condition", exc.binding_condition)]
    rep = certify(g, b, p)
    items += [(f"gains.{k}", v) for k, v in (
        ("k_x", g.k_x), ("k_v", g.k_v), ("k_qr", g.k_qr), ("k_wr", g.k_wr),
        ("k_q1", g.k_q[0]), ("k_q2", g.k_q[1]), ("k_w1", g.k_w[0]), ("k_w2", g.k_w[1]),
        ("c_x", g.c_x), ("c_qr", g.c_qr), ("c_q1", g.c_q[0]), ("c_q2", g.c_q[1]))]
    items += [("lambda_min_W", rep.lambda_min_W), ("verdict", rep.verdict)]
    return rep.verdict, items


def _run_energy(cfg, out):
    t, E = run_energy(cfg.params(), h=cfg["energy.h"], T=cfg["energy.T"])
    np.savetxt(os.path.join(out, "energy.csv"), np.column_stack([t, E]), delimiter=",",
               header="t,E", comments="", fmt="%.17g")
    drift = float(np.max(np.abs(E - E[0])) / abs(E[0]))
    ok = drift < cfg["energy.tol"]
    return ok, [("mode", "energy"), ("E0", E[0]), ("max_relative_drift", drift), ("verdict", ok)]


RUNNERS = {"track": _run_track, "sweep": _run_sweep, "disturb": _run_disturb,
           "certify": _run_certify, "synthesize": _run_synthesize, "energy": _run_energy}


def run(cfg, output=None) -> int:
    """Execute one experiment; returns the exit code."""
    out = output or cfg["output"]
    try:
        os.makedirs(out, exist_ok=True)
        t0 = time.perf_counter()
        ok, items = RUNNERS[cfg.mode](cfg, out)
        if items is not None:
            items.append(("wall_time_s", time.perf_counter() - t0))
            write_report(os.path.join(out, "report.txt"), items)
    except (BarliftError, OSError, ArithmeticError, ValueError) as exc:
        print(f"barlift: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_PASS if ok else EXIT_FAIL


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="barlift", description="Two-quadrotor bar transport experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment described by a config file")
    r.add_argument("config", help="flat key=value file (use '-' for stdin)")
    r.add_argument("--output", help="output directory (overrides 'output')")
    r.add_argument("--seed", type=int, help="random seed (overrides 'seed')")
    args = ap.parse_args(argv)
    try:
        text = sys.stdin.read() if args.config == "-" else open(args.config).read()
        cfg = parse_config(text)
    except (OSError, BarliftError) as exc:
        print(f"barlift: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.seed is not None:
        cfg.values["seed"] = args.seed
    return run(cfg, args.output)


if __name__ == "__main__":
    sys.exit(main())
