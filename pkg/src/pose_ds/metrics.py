"""Model quality numbers: how well a rollout reproduces its demo, and
how reliably random starts fall into the attractor.

Reproduction error is measured geometrically. Both the demo and the
rollout path are resampled to the same number of equal-arclength
points, so the comparison is between shapes, not clocks: a rollout
that traces the demo perfectly but a little faster scores zero.
"""

import numpy as np

from . import quat
from .demo import DemoTrajectory, normalize_to_goal_frame, resample_arclength
from .ds import RolloutOptions, batch_rollout_latent, rollout

__all__ = [
    "path_deviation",
    "reproduction_metrics",
    "sample_latent_starts",
    "convergence_certificate",
    "perturbation_recovery",
]


def _rollout_as_traj(res):
    # Integration drifts quaternion norms by a few ulps per step; the
    # trajectory container insists on unit length.
    qs = res.world_q / np.linalg.norm(res.world_q, axis=1, keepdims=True)
    return DemoTrajectory(res.t, res.world_x, quat.hemisphere_align(qs))


def path_deviation(ref, run, n=200):
    """Position and orientation RMSE between two trajectories compared
    at n matched equal-arclength fractions of each. Orientation error
    is the geodesic rotation angle. Returns (pos_rmse, ori_rmse_rad).
    """
    a = resample_arclength(ref, n)
    b = resample_arclength(run, n)
    d = b.positions - a.positions
    pos_rmse = float(np.sqrt(np.mean(np.einsum("ij,ij->i", d, d))))
    ang = quat.rotation_angle(quat.product(b.quaternions, quat.conjugate(a.quaternions)))
    ori_rmse = float(np.sqrt(np.mean(ang * ang)))
    return pos_rmse, ori_rmse


def reproduction_metrics(model, demo, n=200, dt=0.005, max_t=60.0):
    """Roll out from the demo's start pose and score the path against
    the demo itself.

    Returns a dict with absolute and arclength-relative position RMSE,
    orientation RMSE in radians (geodesic angle at matched arclength
    fractions), the reference arclength, and whether the rollout
    converged.
    """
    ref_full = normalize_to_goal_frame(demo)
    res = rollout(model, ref_full.pose(0), RolloutOptions(dt=dt, max_t=max_t))
    pos_rmse, ori_rmse = path_deviation(ref_full, _rollout_as_traj(res), n)
    arclen = resample_arclength(ref_full, n).arclength()
    return {
        "pos_rmse": pos_rmse,
        "pos_rmse_rel": pos_rmse / arclen,
        "ori_rmse_rad": ori_rmse,
        "arclength": arclen,
        "converged": bool(res.converged),
    }


def sample_latent_starts(model, n, seed, ball_scale=2.0):
    """n starting states: positions uniform in a ball of ball_scale
    times the latent line length, orientations uniform on the unit
    quaternion sphere."""
    rng = np.random.default_rng(seed)
    radius = ball_scale * float(model.meta["latent_length"])
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / 3.0)
    xs = dirs * r[:, None]
    qs = rng.normal(size=(n, 4))
    qs /= np.linalg.norm(qs, axis=1, keepdims=True)
    return xs, quat.hemisphere_align(qs)


def _settle_stats(out):
    conv = out["conv_tick"]
    dt = out["dt"]
    settled = conv[conv >= 0] * dt
    rate = float(np.mean(conv >= 0))
    mean_settle = float(np.mean(settled)) if settled.size else None
    max_settle = float(np.max(settled)) if settled.size else None
    return rate, mean_settle, max_settle


def _monotone_mask(out, v_tol, start_ticks=None):
    """Per-rollout flag: both Lyapunov histories non-increasing (within
    v_tol per step) from start_ticks (default 0) up to convergence."""
    vp, vo = out["v_pos"], out["v_ori"]
    conv = out["conv_tick"]
    n, last = vp.shape[0], vp.shape[1] - 1
    ok = np.empty(n, dtype=bool)
    for i in range(n):
        lo = 0 if start_ticks is None else int(start_ticks[i])
        hi = conv[i] if conv[i] >= 0 else last
        seg_p = vp[i, lo : hi + 1]
        seg_o = vo[i, lo : hi + 1]
        ok[i] = bool(
            np.all(np.diff(seg_p) <= v_tol) and np.all(np.diff(seg_o) <= v_tol)
        )
    return ok


def convergence_certificate(
    model, n_starts=100, seed=42, ball_scale=2.0, dt=0.005, max_t=60.0, v_tol=1e-6
):
    """Empirical stability check over random starts.

    Every start is integrated in one vectorized batch; the result
    reports the fraction that converged, settle-time statistics, and
    the fraction whose V_pos and V_ori never increased by more than
    v_tol in a single step.
    """
    xs, qs = sample_latent_starts(model, n_starts, seed, ball_scale)
    out = batch_rollout_latent(model, xs, qs, dt=dt, max_t=max_t)
    rate, mean_settle, max_settle = _settle_stats(out)
    mono = _monotone_mask(out, v_tol)
    return {
        "n": int(n_starts),
        "rate": rate,
        "mean_settle_time_s": mean_settle,
        "max_settle_time_s": max_settle,
        "monotone_fraction": float(np.mean(mono)),
    }


def perturbation_recovery(
    model,
    n_starts=100,
    seed=42,
    dx_max=0.3,
    angle_max=1.0,
    dt=0.005,
    max_t=60.0,
    v_tol=1e-6,
    resume_steps=2,
):
    """Certificate for the shoved case: each rollout takes one random
    world-frame jump mid-flight, and Lyapunov decay must resume within
    resume_steps ticks after it.

    Jump times land in the first quarter of the budget so the recovery
    itself fits well inside max_t. Returns convergence stats plus the
    fraction that resumed decay in time.
    """
    rng = np.random.default_rng(seed + 1)
    xs, qs = sample_latent_starts(model, n_starts, seed)
    times = rng.uniform(0.1 * max_t, 0.25 * max_t, n_starts)
    dirs = rng.normal(size=(n_starts, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dx = dirs * (dx_max * rng.random(n_starts))[:, None]
    axes = rng.normal(size=(n_starts, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    aa = axes * (angle_max * rng.random(n_starts))[:, None]

    out = batch_rollout_latent(model, xs, qs, dt=dt, max_t=max_t, jumps=(times, dx, aa))
    rate, mean_settle, max_settle = _settle_stats(out)
    resumed = _monotone_mask(out, v_tol, start_ticks=out["jump_tick"] + resume_steps)
    return {
        "n": int(n_starts),
        "rate": rate,
        "mean_settle_time_s": mean_settle,
        "max_settle_time_s": max_settle,
        "resume_fraction": float(np.mean(resumed)),
    }
