"""Synthetic demonstration generators for tests, docs and fixtures.

All generators return a raw (un-normalized) DemoTrajectory over
``duration`` seconds. Timing follows a minimum-jerk speed bell the way
a human demonstration does: the hand accelerates from near rest,
cruises, and settles onto the target at a small fraction of cruise
speed instead of slamming into it at full rate. Starting slow keeps
reproduction rollouts gentle through the region where the fitted map's
stretch ramps up, and landing slow keeps the learned speed gain away
from its clip bounds until well inside the convergence radius.
Orientation profiles are smooth, keep adjacent-sample jumps far below
pi/2, and stay well inside the geodesic ball the orientation blending
assumes.
"""

import numpy as np

from . import quat
from .demo import DemoTrajectory


def _eased_stamps(n, duration, takeoff=0.12, landing=0.02):
    """Timestamps for n equally-spaced path samples under a minimum-jerk
    speed bell 16 u^2 (1-u)^2, floored at ``takeoff`` (fraction of peak)
    at departure, blending to ``landing`` at arrival."""
    u = np.linspace(0.0, 1.0, 4001)
    s = takeoff + (landing - takeoff) * u
    f = s + (1.0 - s) * 16.0 * u**2 * (1.0 - u) ** 2
    dt = 1.0 / f
    t = np.concatenate([[0.0], np.cumsum(0.5 * (dt[1:] + dt[:-1]) * np.diff(u))])
    t *= duration / t[-1]
    return np.interp(np.linspace(0.0, 1.0, n), u, t)


def _with_orientation(stamps, xs, axis, total_angle, wobble=0.0, seed=None):
    """Rotate about ``axis`` by an angle ramping 0 -> total_angle along the
    path, with an optional smooth axis wobble."""
    n = len(stamps)
    s = np.linspace(0.0, 1.0, n)
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.sqrt(np.dot(axis, axis))
    qs = np.empty((n, 4))
    rng = np.random.default_rng(seed if seed is not None else 0)
    tilt = rng.normal(size=3) if wobble > 0 else np.zeros(3)
    for i in range(n):
        a = axis.copy()
        if wobble > 0:
            a = a + wobble * np.sin(np.pi * s[i]) * tilt
            a = a / np.sqrt(np.dot(a, a))
        qs[i] = quat.exp_map(0.5 * total_angle * s[i] * a)
    return DemoTrajectory(stamps, xs, quat.hemisphere_align(qs))


def line_demo(n=200, duration=6.0, length=0.8):
    """Straight segment toward the origin, 100 degrees about a fixed axis."""
    stamps = _eased_stamps(n, duration)
    start = np.array([length, 0.35 * length, 0.2 * length])
    start = start / np.sqrt(np.dot(start, start)) * length
    xs = (1.0 - np.linspace(0.0, 1.0, n))[:, None] * start
    return _with_orientation(stamps, xs, [0.3, 0.8, 0.52], np.deg2rad(100))


def arc_demo(n=200, duration=6.0, radius=0.5):
    """Quarter circle in a tilted plane, 90 degrees about z."""
    stamps = _eased_stamps(n, duration)
    ang = np.linspace(np.pi / 2, 0.0, n)
    xs = np.stack(
        [radius * np.cos(ang), radius * np.sin(ang), 0.15 * radius * np.sin(2 * ang)],
        axis=1,
    )
    xs -= xs[-1]
    return _with_orientation(stamps, xs, [0.0, 0.0, 1.0], np.deg2rad(90))


def helix_demo(n=200, duration=8.0, radius=0.3, pitch=0.25, turns=2.0):
    """Descending helix, 130 degrees about a slowly wobbling axis."""
    stamps = _eased_stamps(n, duration)
    ang = np.linspace(2 * np.pi * turns, 0.0, n)
    xs = np.stack(
        [radius * np.cos(ang), radius * np.sin(ang), pitch * ang / (2 * np.pi)],
        axis=1,
    )
    xs -= xs[-1]
    return _with_orientation(stamps, xs, [0.2, 0.25, 0.95], np.deg2rad(130), wobble=0.15, seed=3)


def s_curve_demo(n=200, duration=6.0, length=0.9):
    """Planar S with a vertical dip, 80 degrees about a diagonal axis."""
    stamps = _eased_stamps(n, duration)
    s = np.linspace(1.0, 0.0, n)
    xs = np.stack(
        [length * s, 0.25 * length * np.sin(2 * np.pi * s), 0.1 * length * np.sin(np.pi * s)],
        axis=1,
    )
    return _with_orientation(stamps, xs, [0.6, -0.55, 0.58], np.deg2rad(80))


def scribble_demo(n=200, duration=8.0, scale=0.5, seed=11):
    """Smooth random 3-D curve: few low-order Fourier terms, seeded."""
    rng = np.random.default_rng(seed)
    stamps = _eased_stamps(n, duration)
    s = np.linspace(0.0, 1.0, n)
    xs = np.zeros((n, 3))
    for k in range(1, 4):
        amp = rng.normal(scale=scale / (k * k), size=3)
        phase = rng.uniform(0, 2 * np.pi, size=3)
        xs += amp * np.sin(np.pi * k * s[:, None] + phase)
    xs += np.linspace(1.0, 0.0, n)[:, None] * np.array([scale, -0.3 * scale, 0.2 * scale])
    xs -= xs[-1]
    return _with_orientation(stamps, xs, [0.1, 0.9, 0.42], np.deg2rad(110), wobble=0.2, seed=seed)


GENERATORS = {
    "line": line_demo,
    "arc": arc_demo,
    "helix": helix_demo,
    "s_curve": s_curve_demo,
    "scribble": scribble_demo,
}
