"""Coupled position/orientation dynamical system in the latent space,
plus model construction, rollouts, and serialization.

The latent position flow is x' = gamma1(x) P x with P symmetric negative
definite (default -I), where gamma1 shapes speed along the radius so the
rollout keeps the demo's pace. Orientation follows the latent field g2
with angular velocity

    omega = gamma2 * beta * log(q * conj(g2(x))) + omega_r
    omega_r = -2 * q * (d conj(g2)/dx . x') * g2(x) * conj(q)

whose feedforward part makes the orientation error decay exponentially
regardless of how fast the position moves. Everything lives in the goal
frame; moving goals and perturbations re-express the world state and
continue, so the attractor is always the origin with identity rotation.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import quat
from .demo import DemoTrajectory, Pose, make_latent_line, normalize_to_goal_frame, resample_arclength
from .diffeo import (
    OrientationField,
    PoseDiffeo,
    PositionDiffeo,
    fit_orientation_field,
    fit_position_diffeo,
    pose_diffeo_from_dict,
    pose_diffeo_to_dict,
)
from .errors import (
    DegenerateDemoError,
    FitNonConvergenceError,
    ModelFormatError,
    NumericalConsistencyError,
)

MODEL_FMT = 1
POS_TOL = 1e-3
ORI_TOL = 1e-2
MAX_DT = 0.05
_GAMMA_EPS = 1e-9


@dataclass(frozen=True)
class Twist:
    v: np.ndarray
    w: np.ndarray


@dataclass(frozen=True)
class DSState:
    x: np.ndarray
    q: np.ndarray
    t: float = 0.0


@dataclass(frozen=True)
class BuildParams:
    resample_n: int = 200
    max_layers: int = 300
    mu: float = 0.9
    tol_rel: float = 1e-3
    sigma_coarse: float = 0.5
    # Finest layer scale in units of target sample spacing. Below 1 the
    # fitter can place bumps narrower than the data can justify, which
    # shows up as velocity ripple when a rollout sweeps the map.
    sigma_fine: float = 1.0
    # Orientation field bandwidth in units of anchor spacing. Narrower
    # makes the blend wiggle between anchors, which the feedforward term
    # then has to chase; wider trades a little anchor fidelity for a
    # smooth field.
    width_factor: float = 1.5
    beta: float = -4.0
    gamma2: float = 1.0
    gamma_floor: float = 0.05
    gamma_cap: float = 20.0
    profile_samples: int = 48
    P: np.ndarray = None


@dataclass(frozen=True)
class CoupledDSModel:
    """Everything a rollout needs: latent dynamics parameters, the latent
    orientation field g2, and the fitted pose map phi1 into task space."""

    P: np.ndarray
    beta: float
    gamma2: float
    gamma_floor: float
    gamma_cap: float
    profile_r: np.ndarray
    profile_s: np.ndarray
    g2: OrientationField
    phi1: PoseDiffeo
    meta: dict = field(default_factory=dict)

    def demo_start(self):
        d = self.meta.get("demo_start")
        if d is None:
            raise ValueError("model carries no demo start pose")
        return Pose(np.array(d["x"], dtype=float), np.array(d["q"], dtype=float))


def _check_p(P):
    P = np.asarray(P, dtype=float)
    if P.shape != (3, 3):
        raise ValueError("P must be 3x3")
    if np.max(np.abs(P - P.T)) > 1e-9:
        raise ValueError("P must be symmetric")
    if np.any(np.linalg.eigvalsh(P) >= 0):
        raise ValueError("P must be negative definite")
    return P


def _speed_profile(model, r):
    """Kernel-smoothed demo speed at radius r, flat beyond the data."""
    rq = np.clip(r, model.profile_r[0], model.profile_r[-1])
    bw = 1.5 * (model.profile_r[1] - model.profile_r[0])
    d = rq[..., None] - model.profile_r
    w = np.exp(-(d * d) / (2.0 * bw * bw))
    return np.einsum("...j,j->...", w, model.profile_s) / np.einsum("...j->...", w)


def gamma1(model, x):
    """Radial speed gain, clipped to [floor, cap]. Positive everywhere."""
    x = np.asarray(x, dtype=float)
    r = np.sqrt(np.einsum("...i,...i->...", x, x))
    px = np.einsum("ij,...j->...i", model.P, x)
    pn = np.sqrt(np.einsum("...i,...i->...", px, px))
    g = _speed_profile(model, r) / np.maximum(pn, _GAMMA_EPS)
    return np.clip(g, model.gamma_floor, model.gamma_cap)


def latent_linear_velocity(model, x):
    """x' = gamma1(x) P x; exactly zero at the origin."""
    x = np.asarray(x, dtype=float)
    px = np.einsum("ij,...j->...i", model.P, x)
    return gamma1(model, x)[..., None] * px


def angular_velocity(model, x, q, xdot):
    """World-frame angular velocity command at latent state (x, q).

    Feedback pulls q toward g2(x) at rate gamma2*beta; the feedforward
    term cancels the field's drift as x moves, so the orientation error
    decays along rollouts no matter the position speed. The quaternion
    product in the feedforward term must be (numerically) pure; its
    scalar part is asserted below 1e-4 and discarded.
    """
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    g2 = model.g2.evaluate(x)
    err = quat.log_map(quat.product(q, quat.conjugate(g2)))
    dgbar = model.g2.derivative_conj(x, xdot)
    inner = quat.product_raw(
        quat.product_raw(q, dgbar), quat.product_raw(g2, quat.conjugate(q))
    )
    wr = -2.0 * inner
    if np.any(np.abs(wr[..., 0]) >= 1e-4):
        raise NumericalConsistencyError(
            f"feedforward scalar part {float(np.max(np.abs(wr[..., 0]))):.3e} >= 1e-4"
        )
    return model.gamma2 * model.beta * err + wr[..., 1:]


def lyapunov_values(model, x, q):
    """(V_pos, V_ori) = (|x|^2, |log(q * conj(g2(x)))|^2)."""
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    vpos = np.einsum("...i,...i->...", x, x)
    e = quat.log_map(quat.product(q, quat.conjugate(model.g2.evaluate(x))))
    vori = np.einsum("...i,...i->...", e, e)
    return vpos, vori


def is_converged(model, x, q, pos_tol=POS_TOL, ori_tol=ORI_TOL):
    vpos, vori = lyapunov_values(model, x, q)
    return (np.sqrt(vpos) < pos_tol) & (np.sqrt(vori) < ori_tol)


def step(model, state, dt):
    """One integration step: classic RK4 on position, midpoint rule for
    the quaternion (omega evaluated at matching stage positions).

    The position subsystem does not depend on q, so its observed order
    is four; the orientation update is locally third order.
    """
    if not 0.0 < dt <= MAX_DT:
        raise ValueError(f"dt must lie in (0, {MAX_DT}]")
    x, q = state.x, state.q
    k1 = latent_linear_velocity(model, x)
    k2 = latent_linear_velocity(model, x + (0.5 * dt) * k1)
    k3 = latent_linear_velocity(model, x + (0.5 * dt) * k2)
    k4 = latent_linear_velocity(model, x + dt * k3)
    x_new = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    w1 = angular_velocity(model, x, q, k1)
    q_half = quat.product(quat.exp_map((0.25 * dt) * w1), q)
    x_mid = x + (0.5 * dt) * k1
    w_mid = angular_velocity(model, x_mid, q_half, k2)
    q_new = quat.product(quat.exp_map((0.5 * dt) * w_mid), q)
    return DSState(x_new, q_new, state.t + dt)


def pushforward_to_task(model, x, q, xdot, omega):
    """Map latent pose and twist through phi1 into task space.

    Positions go through the layer chain with velocity J_h(x) x'.
    Orientations become g1(x) * q with
    omega' = vec(2 g1' conj(g1)) + vec(g1 * omega_hat * conj(g1)).
    Broadcasts over leading dimensions.
    """
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    xdot = np.asarray(xdot, dtype=float)
    omega = np.asarray(omega, dtype=float)
    y = model.phi1.h.apply(x)
    g1 = model.phi1.g.evaluate(x)
    qy = quat.product(g1, q)
    jac = model.phi1.h.jacobian(x)
    v = np.einsum("...ij,...j->...i", jac, xdot)
    dg1 = quat.conjugate(model.phi1.g.derivative_conj(x, xdot))
    term1 = 2.0 * quat.product_raw(dg1, quat.conjugate(g1))
    omega_q = np.concatenate([np.zeros_like(omega[..., :1]), omega], axis=-1)
    term2 = quat.product_raw(quat.product_raw(g1, omega_q), quat.conjugate(g1))
    w = (term1 + term2)[..., 1:]
    return y, qy, v, w


def goal_frame_transform(robot, goal):
    """Express a world pose in the goal frame: rotate/translate by the
    inverse goal pose, left-compose orientation with conj(goal.q)."""
    dq = quat.conjugate(goal.q)
    return Pose(quat.rotate(dq, robot.x - goal.x), quat.product(dq, robot.q))


def goal_frame_apply(goal, pose_gf):
    """Inverse of goal_frame_transform: goal-frame pose back to world."""
    return Pose(
        quat.rotate(goal.q, pose_gf.x) + goal.x, quat.product(goal.q, pose_gf.q)
    )


def to_latent(model, world_pose, goal):
    """World robot pose -> latent (x, q) through goal frame and phi1^-1."""
    gf = goal_frame_transform(world_pose, goal)
    return model.phi1.inverse(gf.x, gf.q)


def to_world(model, x, q, goal):
    """Latent (x, q) -> world robot pose through phi1 and the goal pose."""
    y, qy = model.phi1.forward(x, q)
    return goal_frame_apply(goal, Pose(y, qy))


def apply_world_jump(model, x, q, goal, dx, rot_aa):
    """Instantaneous world-frame displacement of the robot: shift the
    world pose, left-apply the axis-angle rotation, re-project to latent."""
    world = to_world(model, x, q, goal)
    dx = np.asarray(dx, dtype=float)
    rot_aa = np.asarray(rot_aa, dtype=float)
    jq = quat.exp_map(0.5 * rot_aa)
    moved = Pose(world.x + dx, quat.product(jq, world.q))
    return to_latent(model, moved, goal)


def apply_goal_change(model, x, q, old_goal, new_goal):
    """Move the goal while the robot stays put in the world; the latent
    state is re-expressed relative to the new goal."""
    world = to_world(model, x, q, old_goal)
    nx, nq = to_latent(model, world, new_goal)
    return nx, nq


@dataclass(frozen=True)
class RolloutOptions:
    dt: float = 0.005
    max_t: float = 60.0
    pos_tol: float = POS_TOL
    ori_tol: float = ORI_TOL
    # (time, dx(3,), rot_axis_angle(3,)) world-frame state jumps.
    perturbations: tuple = ()
    # (time, Pose) world goal updates, applied at their times.
    goal_schedule: tuple = ()
    record_task: bool = True


@dataclass
class RolloutResult:
    t: np.ndarray
    latent_x: np.ndarray
    latent_q: np.ndarray
    latent_v: np.ndarray
    latent_w: np.ndarray
    v_pos: np.ndarray
    v_ori: np.ndarray
    goal_x: np.ndarray
    goal_q: np.ndarray
    world_x: np.ndarray = None
    world_q: np.ndarray = None
    world_v: np.ndarray = None
    world_w: np.ndarray = None
    converged: bool = False
    reason: str = ""

    def __len__(self):
        return len(self.t)


def _merged_events(opts):
    events = [(float(t), "goal", g) for t, g in opts.goal_schedule]
    events += [
        (float(t), "jump", (np.asarray(dx, dtype=float), np.asarray(aa, dtype=float)))
        for t, dx, aa in opts.perturbations
    ]
    events.sort(key=lambda e: e[0])
    return events


def rollout(model, start, opts=RolloutOptions()):
    """Integrate from a world-frame start pose until the attractor is
    reached (|x| < pos_tol and orientation error < ori_tol), all
    scheduled events have fired, or max_t elapses.

    The trajectory is recorded at every step. Task-space images and
    twists are attached afterwards in one vectorized pass unless
    record_task is off. Samples always carry the latent state, the
    latent twist, both Lyapunov values, and the active goal pose.
    """
    if not 0.0 < opts.dt <= MAX_DT:
        raise ValueError(f"dt must lie in (0, {MAX_DT}]")
    events = _merged_events(opts)
    goal = Pose.identity()
    # Events scheduled at or before t=0 configure the initial frame.
    tick = 0
    t = 0.0
    next_evt = 0
    x, q = to_latent(model, start, goal)
    while next_evt < len(events) and events[next_evt][0] <= t + 1e-12:
        _, kind, payload = events[next_evt]
        if kind == "goal":
            x, q = apply_goal_change(model, x, q, goal, payload)
            goal = payload
        else:
            x, q = apply_world_jump(model, x, q, goal, *payload)
        next_evt += 1

    ts, xs, qs, goals_x, goals_q = [t], [x], [q], [goal.x], [goal.q]
    reason = "max_t"
    converged = False
    while True:
        if next_evt >= len(events) and bool(is_converged(model, x, q, opts.pos_tol, opts.ori_tol)):
            reason = "converged"
            converged = True
            break
        if t >= opts.max_t - 1e-12:
            break
        state = step(model, DSState(x, q, t), opts.dt)
        x, q = state.x, state.q
        tick += 1
        t = tick * opts.dt
        while next_evt < len(events) and events[next_evt][0] <= t + 1e-12:
            _, kind, payload = events[next_evt]
            if kind == "goal":
                x, q = apply_goal_change(model, x, q, goal, payload)
                goal = payload
            else:
                x, q = apply_world_jump(model, x, q, goal, *payload)
            next_evt += 1
        ts.append(t)
        xs.append(x)
        qs.append(q)
        goals_x.append(goal.x)
        goals_q.append(goal.q)

    xs = np.array(xs)
    qs = np.array(qs)
    lat_v = latent_linear_velocity(model, xs)
    lat_w = angular_velocity(model, xs, qs, lat_v)
    vpos, vori = lyapunov_values(model, xs, qs)
    result = RolloutResult(
        t=np.array(ts),
        latent_x=xs,
        latent_q=qs,
        latent_v=lat_v,
        latent_w=lat_w,
        v_pos=vpos,
        v_ori=vori,
        goal_x=np.array(goals_x),
        goal_q=np.array(goals_q),
        converged=converged,
        reason=reason,
    )
    if opts.record_task:
        ty, tq, tv, tw = pushforward_to_task(model, xs, qs, lat_v, lat_w)
        gq, gx = result.goal_q, result.goal_x
        result.world_x = quat.rotate(gq, ty) + gx
        result.world_q = quat.product(gq, tq)
        result.world_v = quat.rotate(gq, tv)
        result.world_w = quat.rotate(gq, tw)
    return result


def batch_rollout_latent(
    model,
    xs0,
    qs0,
    dt=0.005,
    max_t=60.0,
    jumps=None,
    pos_tol=POS_TOL,
    ori_tol=ORI_TOL,
):
    """Vectorized latent-space rollouts for certification and metrics.

    Integrates R starts simultaneously with the same stage arithmetic as
    ``step``. ``jumps``, if given, is (times (R,), dx (R,3), aa (R,3))
    applied as world-frame jumps, one per rollout, at the first tick at
    or past each time. Returns per-step Lyapunov histories, per-rollout
    convergence ticks (-1 where never converged), and the jump ticks.
    """
    xs = np.array(xs0, dtype=float)
    qs = np.array(qs0, dtype=float)
    n_steps = int(round(max_t / dt))
    r = len(xs)
    vpos = np.empty((r, n_steps + 1))
    vori = np.empty((r, n_steps + 1))
    conv = np.full(r, -1, dtype=int)
    jump_tick = np.full(r, -1, dtype=int)
    jt = None if jumps is None else np.asarray(jumps[0], dtype=float)

    vpos[:, 0], vori[:, 0] = lyapunov_values(model, xs, qs)
    done_mask = is_converged(model, xs, qs, pos_tol, ori_tol)
    conv[done_mask & (conv < 0)] = 0

    for k in range(1, n_steps + 1):
        t_prev = (k - 1) * dt
        k1 = latent_linear_velocity(model, xs)
        k2 = latent_linear_velocity(model, xs + (0.5 * dt) * k1)
        k3 = latent_linear_velocity(model, xs + (0.5 * dt) * k2)
        k4 = latent_linear_velocity(model, xs + dt * k3)
        x_new = xs + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        w1 = angular_velocity(model, xs, qs, k1)
        q_half = quat.product(quat.exp_map((0.25 * dt) * w1), qs)
        w_mid = angular_velocity(model, xs + (0.5 * dt) * k1, q_half, k2)
        q_new = quat.product(quat.exp_map((0.5 * dt) * w_mid), qs)
        xs, qs = x_new, q_new

        if jt is not None:
            due = (jt <= t_prev + dt + 1e-12) & (jump_tick < 0)
            if np.any(due):
                idx = np.flatnonzero(due)
                goal = Pose.identity()
                for i in idx:
                    nx, nq = apply_world_jump(
                        model, xs[i], qs[i], goal, jumps[1][i], jumps[2][i]
                    )
                    xs[i], qs[i] = nx, nq
                jump_tick[idx] = k

        vpos[:, k], vori[:, k] = lyapunov_values(model, xs, qs)
        # A rollout with its jump still ahead cannot count as converged yet.
        awaiting = np.zeros(r, dtype=bool) if jt is None else jump_tick < 0
        now = is_converged(model, xs, qs, pos_tol, ori_tol)
        conv[now & (conv < 0) & ~awaiting] = k
        if np.all(conv >= 0) and not np.any(awaiting):
            vpos = vpos[:, : k + 1]
            vori = vori[:, : k + 1]
            break

    return {
        "v_pos": vpos,
        "v_ori": vori,
        "conv_tick": conv,
        "jump_tick": jump_tick,
        "dt": dt,
        "final_x": xs,
        "final_q": qs,
    }


def _median_spacing(xs):
    seg = np.diff(xs, axis=0)
    lens = np.sqrt(np.einsum("ij,ij->i", seg, seg))
    return float(np.median(lens))


def build_model(demo, params=BuildParams()):
    """Fit the full model from one demonstration.

    The demo is normalized to its goal frame and resampled uniformly in
    arclength. The latent trajectory is the straight line / single
    geodesic construction; phi1 is fitted from it to the demo; g2 is
    anchored on the latent trajectory itself. The speed profile along
    the latent line becomes the radial gain gamma1.
    """
    if not isinstance(demo, DemoTrajectory):
        raise TypeError("build_model wants a DemoTrajectory")
    b = normalize_to_goal_frame(demo)
    if b.arclength() <= 0.0:
        raise DegenerateDemoError("demo has zero arclength")
    start_r = float(np.sqrt(np.dot(b.positions[0], b.positions[0])))
    if start_r < 1e-6:
        raise DegenerateDemoError("demo starts at the goal pose")
    jumps = quat.rotation_angle(
        quat.product(b.quaternions[1:], quat.conjugate(b.quaternions[:-1]))
    )
    if np.any(jumps > np.pi / 2):
        raise DegenerateDemoError("adjacent demo rotations jump more than pi/2")
    b = resample_arclength(b, params.resample_n)

    a = make_latent_line(b)
    width = params.width_factor * _median_spacing(a.positions)
    try:
        g2 = fit_orientation_field(a.positions, a.quaternions, width)
        rel = quat.hemisphere_align(
            quat.product(b.quaternions, quat.conjugate(a.quaternions))
        )
        g1 = fit_orientation_field(a.positions, rel, width)
    except ValueError as e:
        raise DegenerateDemoError(str(e)) from e

    arclen = b.arclength()
    tol = params.tol_rel * arclen
    # The fitter aims below the advertised tolerance so the final
    # residual keeps headroom against platform-dependent rounding.
    h1 = fit_position_diffeo(
        a.positions,
        b.positions,
        max_layers=params.max_layers,
        mu=params.mu,
        tol=0.8 * tol,
        sigma_coarse=params.sigma_coarse,
        sigma_fine=params.sigma_fine,
    )
    mapped = h1.apply(a.positions)
    res = np.sqrt(np.einsum("ij,ij->i", mapped - b.positions, mapped - b.positions))
    max_res = float(res.max())
    if max_res > tol:
        raise FitNonConvergenceError(
            f"position fit stopped at residual {max_res:.3e} > tol {tol:.3e} "
            f"with {len(h1.layers)} layers"
        )
    phi1 = PoseDiffeo(h1, g1)

    mapped_q = quat.product(g1.evaluate(a.positions), a.quaternions)
    ori_res = float(
        np.max(quat.rotation_angle(quat.product(mapped_q, quat.conjugate(b.quaternions))))
    )

    p_mat = _check_p(params.P if params.P is not None else -np.eye(3))
    if not params.beta < 0:
        raise ValueError("beta must be negative")
    if not params.gamma2 > 0:
        raise ValueError("gamma2 must be positive")

    seg = np.diff(a.positions, axis=0)
    seg_len = np.sqrt(np.einsum("ij,ij->i", seg, seg))
    seg_dt = np.diff(a.stamps)
    mids = 0.5 * (a.positions[1:] + a.positions[:-1])
    r_mid = np.sqrt(np.einsum("ij,ij->i", mids, mids))
    speeds = seg_len / seg_dt
    r_max = float(np.sqrt(np.dot(a.positions[0], a.positions[0])))
    r_grid = np.linspace(0.0, r_max, params.profile_samples)
    bw = max(0.02 * r_max, 2.0 * _median_spacing(a.positions))
    d = r_grid[:, None] - r_mid
    w = np.exp(-(d * d) / (2.0 * bw * bw))
    s_grid = (w @ speeds) / np.maximum(w.sum(axis=1), 1e-300)

    lo = b.positions.min(axis=0)
    hi = b.positions.max(axis=0)
    meta = {
        "arclength": arclen,
        "latent_length": r_max,
        "demo_duration": b.duration,
        "n_train": len(b),
        "demo_start": {
            "x": [float(v) for v in b.positions[0]],
            "q": [float(v) for v in b.quaternions[0]],
        },
        "bbox": [[float(v) for v in lo], [float(v) for v in hi]],
        "fit_max_residual": max_res,
        "fit_layer_count": len(h1.layers),
        "ori_max_residual": ori_res,
    }
    return CoupledDSModel(
        P=p_mat,
        beta=float(params.beta),
        gamma2=float(params.gamma2),
        gamma_floor=float(params.gamma_floor),
        gamma_cap=float(params.gamma_cap),
        profile_r=r_grid,
        profile_s=s_grid,
        g2=g2,
        phi1=phi1,
        meta=meta,
    )


def model_to_dict(model):
    doc = pose_diffeo_to_dict(model.phi1)
    doc["fmt"] = MODEL_FMT
    doc["P"] = [[float(v) for v in row] for row in model.P]
    doc["beta"] = float(model.beta)
    doc["gamma2"] = float(model.gamma2)
    doc["gamma1_profile"] = {
        "r": [float(v) for v in model.profile_r],
        "s": [float(v) for v in model.profile_s],
    }
    doc["floor"] = float(model.gamma_floor)
    doc["cap"] = float(model.gamma_cap)
    doc["g2"] = {
        "ori_anchors": [
            {"x": [float(v) for v in x], "r": [float(v) for v in r]}
            for x, r in zip(model.g2.anchor_xs, model.g2.anchor_rs)
        ],
        "width": float(model.g2.width),
    }
    doc["meta"] = model.meta
    return doc


def model_from_dict(doc):
    if not isinstance(doc, dict) or doc.get("fmt") != MODEL_FMT:
        raise ModelFormatError(f"unsupported model format {doc.get('fmt')!r}")
    phi1 = pose_diffeo_from_dict(doc)
    try:
        p_mat = _check_p(np.array(doc["P"], dtype=float))
        beta = float(doc["beta"])
        gamma2 = float(doc["gamma2"])
        prof = doc["gamma1_profile"]
        r_grid = np.array(prof["r"], dtype=float)
        s_grid = np.array(prof["s"], dtype=float)
        floor = float(doc["floor"])
        cap = float(doc.get("cap", 20.0))
        g2doc = doc["g2"]
        xs = np.array([a["x"] for a in g2doc["ori_anchors"]], dtype=float).reshape(-1, 3)
        rs = np.array([a["r"] for a in g2doc["ori_anchors"]], dtype=float).reshape(-1, 3)
        g2 = OrientationField(xs, rs, float(g2doc["width"]))
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"malformed model: {e}") from e
    if len(r_grid) != len(s_grid) or len(r_grid) < 2:
        raise ModelFormatError("gamma1_profile arrays malformed")
    if not beta < 0:
        raise ModelFormatError("beta must be negative")
    if not gamma2 > 0:
        raise ModelFormatError("gamma2 must be positive")
    if not 0 < floor <= cap:
        raise ModelFormatError("floor/cap must satisfy 0 < floor <= cap")
    return CoupledDSModel(
        P=p_mat,
        beta=beta,
        gamma2=gamma2,
        gamma_floor=floor,
        gamma_cap=cap,
        profile_r=r_grid,
        profile_s=s_grid,
        g2=g2,
        phi1=phi1,
        meta=dict(doc.get("meta", {})),
    )


def save_model(model, path):
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f)
        f.write("\n")


def load_model(path):
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"invalid JSON: {e}") from e
    except OSError as e:
        raise ModelFormatError(str(e)) from e
    try:
        return model_from_dict(doc)
    except ValueError as e:
        raise ModelFormatError(str(e)) from e
