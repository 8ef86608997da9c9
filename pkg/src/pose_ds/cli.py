"""Command line entry points.

One executable, five subcommands covering the whole workflow:

    pose-ds learn demo.csv model.json
    pose-ds rollout model.json traj.csv --perturb 2.0,0.1,0,0,0,0,0
    pose-ds eval model.json demo.csv
    pose-ds export-grid model.json grid.json --grid-n 5
    pose-ds serve model.json --port 8080

Tunables resolve as flags over config file over built-in defaults. The
config file is flat JSON restricted to the same keys as the flags;
anything else in it is rejected rather than silently ignored.
"""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .demo import Pose, load_demo
from .diffeo import PoseDiffeo, PositionDiffeo, grid_distortion_export
from .ds import (
    BuildParams,
    RolloutOptions,
    build_model,
    load_model,
    rollout,
    save_model,
)
from .errors import (
    DegenerateDemoError,
    DemoLoadError,
    FitNonConvergenceError,
    ModelFormatError,
    PoseDsError,
)
from .metrics import convergence_certificate, reproduction_metrics

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FIT = 3
EXIT_NO_CONVERGENCE = 4
EXIT_PORT_BUSY = 5

log = logging.getLogger("pose_ds")

# name -> (coercion, default); one row per tunable shared by flags and
# the config file.
TUNABLES = {
    "dt": (float, 0.005),
    "max_t": (float, 60.0),
    "beta": (float, -4.0),
    "gamma2": (float, 1.0),
    "max_layers": (int, 300),
    "mu": (float, 0.9),
    "seed": (int, 42),
    "port": (int, 8080),
}


class UsageError(PoseDsError):
    pass


def _resolve_tunables(args):
    """flags > config file > defaults, with unknown config keys and
    uncoercible values treated as usage errors. Also reports which keys
    were set explicitly rather than defaulted."""
    cfg = {}
    if args.config:
        try:
            with open(args.config) as f:
                cfg = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"config: {e}") from e
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        unknown = sorted(set(cfg) - set(TUNABLES))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    out = {}
    explicit = set()
    for name, (coerce, default) in TUNABLES.items():
        flag = getattr(args, name, None)
        try:
            if flag is not None:
                out[name] = coerce(flag)
                explicit.add(name)
            elif name in cfg:
                out[name] = coerce(cfg[name])
                explicit.add(name)
            else:
                out[name] = default
        except (TypeError, ValueError) as e:
            raise UsageError(f"bad value for {name}: {e}") from e
    return out, explicit


def _parse_floats(text, count, what):
    parts = text.split(",")
    if len(parts) != count:
        raise UsageError(f"{what} wants {count} comma-separated numbers, got {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError as e:
        raise UsageError(f"{what}: {e}") from e


def _parse_pose(text):
    vals = _parse_floats(text, 7, "pose")
    q = np.array(vals[3:], dtype=float)
    qn = float(np.linalg.norm(q))
    if qn < 1e-9:
        raise UsageError("pose quaternion has zero norm")
    return Pose(np.array(vals[:3], dtype=float), q / qn)


def _load_goal_schedule(path):
    try:
        with open(path) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"goal schedule: {e}") from e
    if not isinstance(doc, list):
        raise UsageError("goal schedule must be a JSON list")
    sched = []
    for i, entry in enumerate(doc):
        try:
            t = float(entry["t"])
            x = np.array(entry["x"], dtype=float).reshape(3)
            q = np.array(entry["q"], dtype=float).reshape(4)
        except (KeyError, TypeError, ValueError) as e:
            raise UsageError(f"goal schedule entry {i}: {e}") from e
        qn = float(np.linalg.norm(q))
        if qn < 1e-9:
            raise UsageError(f"goal schedule entry {i}: zero-norm quaternion")
        sched.append((t, Pose(x, q / qn)))
    return tuple(sched)


def cmd_learn(args, tun):
    demo = load_demo(args.demo)
    params = BuildParams(
        max_layers=tun["max_layers"],
        mu=tun["mu"],
        beta=tun["beta"],
        gamma2=tun["gamma2"],
    )
    model = build_model(demo, params)
    save_model(model, args.model_out)
    meta = model.meta
    print(
        f"fit: {meta['fit_layer_count']} layers, "
        f"max position residual {meta['fit_max_residual']:.3e}, "
        f"max orientation residual {meta['ori_max_residual']:.3e} rad"
    )
    return EXIT_OK


CSV_COLUMNS = "t,x,y,z,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,Vpos,Vori"


def write_rollout_csv(res, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS.split(","))
        for i in range(len(res)):
            row = (
                res.t[i],
                *res.world_x[i],
                *res.world_q[i],
                *res.world_v[i],
                *res.world_w[i],
                res.v_pos[i],
                res.v_ori[i],
            )
            w.writerow([repr(float(v)) for v in row])


def cmd_rollout(args, tun):
    model = load_model(args.model)
    start = _parse_pose(args.start) if args.start else model.demo_start()
    perts = tuple(
        (vals[0], np.array(vals[1:4]), np.array(vals[4:7]))
        for vals in (_parse_floats(p, 7, "--perturb") for p in args.perturb or ())
    )
    sched = _load_goal_schedule(args.goal_schedule) if args.goal_schedule else ()
    opts = RolloutOptions(
        dt=tun["dt"], max_t=tun["max_t"], perturbations=perts, goal_schedule=sched
    )
    res = rollout(model, start, opts)
    write_rollout_csv(res, args.csv_out)
    final_x = float(np.linalg.norm(res.latent_x[-1]))
    print(
        f"{res.reason}: {len(res)} samples over {res.t[-1]:.3f} s, "
        f"final |x| {final_x:.3e}, final V_ori {res.v_ori[-1]:.3e}"
    )
    return EXIT_OK if res.converged else EXIT_NO_CONVERGENCE


def cmd_eval(args, tun):
    model = load_model(args.model)
    demo = load_demo(args.demo)
    rep = reproduction_metrics(model, demo, dt=tun["dt"], max_t=tun["max_t"])
    cert = convergence_certificate(
        model, n_starts=100, seed=tun["seed"], dt=tun["dt"], max_t=tun["max_t"]
    )
    doc = {
        "reproduction_rmse_pos": rep["pos_rmse"],
        "reproduction_rmse_ori_rad": rep["ori_rmse_rad"],
        "convergence_rate": cert["rate"],
        "mean_settle_time_s": cert["mean_settle_time_s"],
        "lyapunov_monotone_fraction": cert["monotone_fraction"],
    }
    text = json.dumps(doc, sort_keys=True)
    print(text)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text + "\n")
    return EXIT_OK


def cmd_export_grid(args, tun):
    model = load_model(args.model)
    if args.bounds:
        vals = _parse_floats(args.bounds, 6, "--bounds")
        bounds = (vals[:3], vals[3:])
    else:
        span = float(model.meta.get("latent_length", 1.0))
        bounds = ([-span] * 3, [span] * 3)
    aligned_map = PoseDiffeo(PositionDiffeo(()), model.g2)
    doc = {
        "bounds": [list(bounds[0]), list(bounds[1])],
        # Orientation-only view: straight grid carrying the latent
        # orientation field, then the same grid pushed into task space.
        "aligned": grid_distortion_export(aligned_map, bounds, args.grid_n),
        "task": grid_distortion_export([aligned_map, model.phi1], bounds, args.grid_n),
    }
    with open(args.out, "w") as f:
        json.dump(doc, f)
        f.write("\n")
    print(f"wrote {args.out}: 2 views, n={args.grid_n}")
    return EXIT_OK


def cmd_serve(args, tun, explicit):
    model = load_model(args.model)
    from . import service

    # Offline integration defaults to a finer 0.005 s step; the live
    # loop runs 100 Hz unless the user pins dt themselves.
    dt = tun["dt"] if "dt" in explicit else 0.01
    try:
        service.run_service(model, port=tun["port"], dt=dt)
    except OSError as e:
        print(f"cannot bind port {tun['port']}: {e}", file=sys.stderr)
        return EXIT_PORT_BUSY
    return EXIT_OK


def _add_tunable_flags(sp):
    sp.add_argument("--config", help="JSON file with tunable defaults")
    sp.add_argument("--dt", type=float)
    sp.add_argument("--max-t", dest="max_t", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--gamma2", type=float)
    sp.add_argument("--max-layers", dest="max_layers", type=int)
    sp.add_argument("--mu", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--port", type=int)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="pose-ds",
        description="Learn and run globally stable pose dynamical systems.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="fit a model from a demo file")
    p.add_argument("demo")
    p.add_argument("model_out")
    _add_tunable_flags(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("rollout", help="integrate a trajectory to CSV")
    p.add_argument("model")
    p.add_argument("csv_out")
    p.add_argument("--start", help="x,y,z,qw,qx,qy,qz (default: demo start)")
    p.add_argument(
        "--perturb",
        action="append",
        metavar="T,DX,DY,DZ,AX,AY,AZ",
        help="world-frame jump at time T (axis-angle rotation); repeatable",
    )
    p.add_argument("--goal-schedule", help="JSON list of {t, x, q} goal updates")
    _add_tunable_flags(p)
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("eval", help="reproduction and stability metrics as JSON")
    p.add_argument("model")
    p.add_argument("demo")
    p.add_argument("--out", help="also write the JSON here")
    _add_tunable_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-grid", help="grid distortion data for plots")
    p.add_argument("model")
    p.add_argument("out")
    p.add_argument("--grid-n", dest="grid_n", type=int, default=5)
    p.add_argument("--bounds", help="x0,y0,z0,x1,y1,z1 latent box")
    _add_tunable_flags(p)
    p.set_defaults(func=cmd_export_grid)

    p = sub.add_parser("serve", help="run the realtime simulation service")
    p.add_argument("model")
    _add_tunable_flags(p)
    p.set_defaults(func=cmd_serve)

    return ap


def main(argv=None):
    level = os.environ.get("POSE_DS_LOG", "WARNING").upper()
    if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    args = build_parser().parse_args(argv)
    try:
        tun, explicit = _resolve_tunables(args)
        if args.func is cmd_serve:
            return cmd_serve(args, tun, explicit)
        return args.func(args, tun)
    except (UsageError, DemoLoadError, DegenerateDemoError, ModelFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FitNonConvergenceError as e:
        print(f"fit did not converge: {e}", file=sys.stderr)
        return EXIT_FIT


if __name__ == "__main__":
    sys.exit(main())
