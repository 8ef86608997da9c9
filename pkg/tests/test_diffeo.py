"""Locally weighted translations, greedy position fitting, orientation
fields, and pose-map serialization."""

import math

import numpy as np
import pytest

from pose_ds import quat
from pose_ds.diffeo import (
    LwtLayer,
    OrientationField,
    PoseDiffeo,
    PositionDiffeo,
    fit_orientation_field,
    fit_position_diffeo,
    grid_distortion_export,
    lwt_apply,
    lwt_inverse,
    lwt_jacobian,
    margin_cap,
    pose_diffeo_from_dict,
    pose_diffeo_to_dict,
)
from pose_ds.errors import ModelFormatError

from oracles import oracle_exp, quat_dist, random_units


def _random_layers(rng, n, span=1.0):
    layers = []
    for _ in range(n):
        sigma = float(rng.uniform(0.2, 0.8))
        v = rng.normal(size=3)
        v *= rng.uniform(0.3, 0.99) * margin_cap(sigma) / np.linalg.norm(v)
        layers.append(LwtLayer(rng.uniform(-span, span, 3), v, sigma))
    return PositionDiffeo(tuple(layers))


def test_lwt_value_at_one_sigma():
    # At x = c + sigma * e the bump is exp(-1/2), so the image is
    # x + exp(-1/2) v exactly.
    c = np.array([0.3, -0.2, 0.5])
    v = np.array([0.1, 0.05, -0.02])
    sigma = 0.4
    layer = LwtLayer(c, v, sigma)
    e = np.array([1.0, 0.0, 0.0])
    x = c + sigma * e
    got = lwt_apply(layer, x)
    expect = x + math.exp(-0.5) * v
    assert np.max(np.abs(got - expect)) < 1e-15


def test_lwt_rejects_margin_violation():
    sigma = 0.4
    cap = margin_cap(sigma)
    with pytest.raises(ValueError, match="margin"):
        LwtLayer(np.zeros(3), np.array([cap * 1.01, 0, 0]), sigma)
    # Exactly at the cap is allowed.
    LwtLayer(np.zeros(3), np.array([cap, 0, 0]), sigma)


def test_lwt_inverse_at_full_margin():
    # The hardest case: |v| right at the invertibility cap.
    rng = np.random.default_rng(7)
    sigma = 0.5
    v = rng.normal(size=3)
    v *= margin_cap(sigma) / np.linalg.norm(v)
    layer = LwtLayer(np.array([0.1, -0.3, 0.2]), v, sigma)
    pts = rng.uniform(-2, 2, (500, 3))
    y = lwt_apply(layer, pts)
    back = lwt_inverse(layer, y)
    resid = np.linalg.norm(lwt_apply(layer, back) - y, axis=1)
    assert resid.max() < 1e-9
    assert np.abs(back - pts).max() < 1e-8


def test_lwt_jacobian_matches_finite_differences():
    rng = np.random.default_rng(11)
    phi = _random_layers(rng, 4)
    h = 1e-6
    for x in rng.uniform(-1, 1, (20, 3)):
        jac = phi.jacobian(x)
        fd = np.empty((3, 3))
        for k in range(3):
            dx = np.zeros(3)
            dx[k] = h
            fd[:, k] = (phi.apply(x + dx) - phi.apply(x - dx)) / (2 * h)
        assert np.abs(jac - fd).max() < 1e-6


def test_composition_jacobian_determinant_positive():
    rng = np.random.default_rng(13)
    phi = _random_layers(rng, 12)
    pts = rng.uniform(-2, 2, (300, 3))
    dets = np.linalg.det(phi.jacobian(pts))
    assert np.all(dets > 0)


def test_single_layer_jacobian_formula():
    layer = LwtLayer([0.0, 0.0, 0.0], [0.2, 0.0, 0.0], 0.5)
    x = np.array([0.3, 0.1, -0.2])
    d = x - layer.c
    k = math.exp(-float(d @ d) / (2 * 0.5**2))
    grad = -d * k / 0.5**2
    expect = np.eye(3) + np.outer(layer.v, grad)
    assert np.abs(lwt_jacobian(layer, x) - expect).max() < 1e-15


def test_fit_line_to_quarter_circle():
    ang = np.linspace(0, np.pi / 2, 20)
    tgt = np.stack([np.cos(ang), np.sin(ang), np.zeros(20)], axis=1)
    src = np.linspace(tgt[0], tgt[-1], 20)
    phi = fit_position_diffeo(src, tgt)
    arclen = float(np.sum(np.linalg.norm(np.diff(tgt, axis=0), axis=1)))
    res = np.linalg.norm(phi.apply(src) - tgt, axis=1)
    assert res.max() < 1e-3 * arclen
    assert len(phi.layers) <= 150
    # Terminal point is pinned within the same tolerance.
    assert np.linalg.norm(phi.apply(src[-1]) - tgt[-1]) < 1e-3 * arclen


def test_fit_identity_needs_no_layers():
    pts = np.linspace([1.0, 0.0, 0.0], [0.0, 0.0, 0.0], 15)
    phi = fit_position_diffeo(pts, pts)
    assert len(phi.layers) == 0
    assert np.array_equal(phi.apply(pts), pts)


def test_fit_round_trip_everywhere():
    ang = np.linspace(0, np.pi / 2, 20)
    tgt = np.stack([np.cos(ang), np.sin(ang), np.zeros(20)], axis=1)
    src = np.linspace(tgt[0], tgt[-1], 20)
    phi = fit_position_diffeo(src, tgt)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1.5, 1.5, (500, 3))
    back = phi.invert(phi.apply(pts))
    assert np.abs(back - pts).max() < 1e-8


def test_orientation_field_identity_at_origin():
    rng = np.random.default_rng(5)
    xs = rng.uniform(-1, 1, (10, 3))
    rs = rng.uniform(-0.5, 0.5, (10, 3))
    g = OrientationField(xs, rs, 0.3)
    assert quat_dist(g.evaluate(np.zeros(3)), quat.IDENTITY) < 1e-15


def test_orientation_field_isolated_anchor():
    # Far from the origin a lone anchor dominates: only the floored goal
    # weight (1e-6) dilutes it, so at the anchor the field matches
    # exp(r) to that ratio.
    r = np.array([0.3, 0.1, -0.2])
    x = np.array([5.0, 0.0, 0.0])
    g = OrientationField(x[None, :], r[None, :], 0.1)
    assert quat_dist(g.evaluate(x), oracle_exp(r)) < 1e-6


def test_orientation_field_linear_ramp_derivative():
    # Anchors on a uniform grid encoding r(s) = (0, 0, a s): Gaussian
    # blending reproduces the linear ramp at interior points, so the
    # conjugated field along the axis is [cos(a s), 0, 0, -sin(a s)]
    # and its rate is known in closed form.
    a = 0.05
    s = np.arange(0.0, 10.0 + 1e-9, 0.1)
    xs = np.stack([s, np.zeros_like(s), np.zeros_like(s)], axis=1)
    rs = np.stack([np.zeros_like(s), np.zeros_like(s), a * s], axis=1)
    g = OrientationField(xs, rs, 0.1)
    x = np.array([5.0, 0.0, 0.0])
    xdot = np.array([2.0, 0.0, 0.0])
    got = g.derivative_conj(x, xdot)
    th = a * 5.0
    expect = np.array([-a * 2.0 * math.sin(th), 0.0, 0.0, -a * 2.0 * math.cos(th)])
    assert np.abs(got - expect).max() < 1e-4


def _helix_field():
    t = np.linspace(1.0, 0.0, 40)
    xs = np.stack([t * np.cos(4 * t), t * np.sin(4 * t), 0.5 * t], axis=1)
    xs[-1] = 0.0
    qs = np.array([quat.exp_map(np.array([0.3 * ti, -0.2 * ti, 0.5 * ti])) for ti in t])
    return fit_orientation_field(xs, qs, 0.2)


def test_derivative_conj_secant_consistency():
    # An independent secant with a different step must agree.
    g = _helix_field()
    rng = np.random.default_rng(17)
    for _ in range(20):
        x = rng.uniform(-1, 1, 3)
        xdot = rng.normal(size=3)
        got = g.derivative_conj(x, xdot)
        speed = np.linalg.norm(xdot)
        d = xdot / speed
        eps = 1e-4 * g.width
        qp = quat.conjugate(g.evaluate(x + eps * d))
        qm = quat.conjugate(g.evaluate(x - eps * d))
        if float(qp @ qm) < 0:
            qm = -qm
        ref = (qp - qm) / (2 * eps) * speed
        assert np.abs(got - ref).max() < 1e-5 * max(1.0, np.abs(ref).max())


def test_derivative_conj_orthogonal_to_value():
    g = _helix_field()
    rng = np.random.default_rng(19)
    xs = rng.uniform(-1, 1, (50, 3))
    xds = rng.normal(size=(50, 3))
    rate = g.derivative_conj(xs, xds)
    val = quat.conjugate(g.evaluate(xs))
    dots = np.einsum("ij,ij->i", rate, val)
    assert np.abs(dots).max() < 1e-5


def test_derivative_conj_zero_velocity():
    g = _helix_field()
    out = g.derivative_conj(np.array([0.3, 0.2, 0.1]), np.zeros(3))
    assert np.array_equal(out, np.zeros(4))


def test_fit_orientation_field_validation():
    xs = np.array([[1.0, 0, 0], [0.5, 0, 0], [0, 0, 0]])
    qs = np.tile(quat.IDENTITY, (3, 1))
    fit_orientation_field(xs, qs, 0.2)
    bad_end = xs.copy()
    bad_end[-1] = [0.5, 0.5, 0.5]
    with pytest.raises(ValueError, match="origin"):
        fit_orientation_field(bad_end, qs, 0.2)
    bad_q = qs.copy()
    bad_q[-1] = quat.exp_map(np.array([0.4, 0, 0]))
    with pytest.raises(ValueError, match="identity"):
        fit_orientation_field(xs, bad_q, 0.2)
    π_rot = np.array([0.0, 1.0, 0.0, 0.0])
    with pytest.raises(ValueError, match="ball"):
        fit_orientation_field(xs, np.array([π_rot, qs[1], qs[2]]), 0.2)


def test_pose_diffeo_round_trip():
    rng = np.random.default_rng(23)
    phi = PoseDiffeo(_random_layers(rng, 6), _helix_field())
    xs = rng.uniform(-1, 1, (100, 3))
    qs = random_units(rng, 100)
    ys, qys = phi.forward(xs, qs)
    xb, qb = phi.inverse(ys, qys)
    assert np.abs(xb - xs).max() < 1e-8
    assert max(quat_dist(a, b) for a, b in zip(qb, qs)) < 1e-8


def test_pose_diffeo_serialization_round_trip():
    rng = np.random.default_rng(29)
    phi = PoseDiffeo(_random_layers(rng, 5), _helix_field())
    doc = pose_diffeo_to_dict(phi)
    back = pose_diffeo_from_dict(doc)
    assert len(back.h.layers) == len(phi.h.layers)
    for la, lb in zip(phi.h.layers, back.h.layers):
        assert np.array_equal(la.c, lb.c)
        assert np.array_equal(la.v, lb.v)
        assert la.sigma == lb.sigma
    assert np.array_equal(back.g.anchor_xs, phi.g.anchor_xs)
    assert np.array_equal(back.g.anchor_rs, phi.g.anchor_rs)
    assert back.g.width == phi.g.width
    assert back.g.goal_radius == phi.g.goal_radius
    pts = rng.uniform(-1, 1, (20, 3))
    assert np.array_equal(back.h.apply(pts), phi.h.apply(pts))
    assert np.array_equal(back.g.evaluate(pts), phi.g.evaluate(pts))


def test_pose_diffeo_from_dict_rejects_bad_margin():
    doc = {
        "layers": [{"c": [0, 0, 0], "v": [10.0, 0, 0], "sigma": 0.1}],
        "ori_anchors": [],
        "width": 0.2,
    }
    with pytest.raises(ModelFormatError):
        pose_diffeo_from_dict(doc)


def test_pose_diffeo_from_dict_rejects_missing_keys():
    with pytest.raises(ModelFormatError):
        pose_diffeo_from_dict({"layers": []})


def _identity_pose_diffeo():
    g = OrientationField(np.empty((0, 3)), np.empty((0, 3)), 1.0)
    return PoseDiffeo(PositionDiffeo(()), g)


def test_grid_export_combinatorics_and_identity():
    n = 4
    out = grid_distortion_export(_identity_pose_diffeo(), ([-1, -1, -1], [1, 1, 1]), n)
    assert out["n"] == n
    assert len(out["polylines"]) == 3 * n * n
    counts = {"x": 0, "y": 0, "z": 0}
    ticks = np.linspace(-1, 1, n)
    for pl in out["polylines"]:
        counts[pl["axis"]] += 1
        assert len(pl["vertices"]) == n
        pts = np.array([v["x"] for v in pl["vertices"]])
        d = "xyz".index(pl["axis"])
        assert np.abs(pts[:, d] - ticks).max() < 1e-15
        for k in range(3):
            if k != d:
                assert np.ptp(pts[:, k]) == 0.0
        for v in pl["vertices"]:
            assert v["q"] == [1.0, 0.0, 0.0, 0.0]
    assert counts == {"x": n * n, "y": n * n, "z": n * n}


def test_grid_export_carries_field_orientation():
    # Place one strong anchor on a grid vertex and check the exported
    # orientation there stays close to the anchor rotation.
    r = np.array([0.3, 0.0, 0.0])
    anchor = np.array([1.0, 1.0, 1.0])
    g = OrientationField(anchor[None, :], r[None, :], 0.15)
    phi = PoseDiffeo(PositionDiffeo(()), g)
    out = grid_distortion_export(phi, ([-1, -1, -1], [1, 1, 1]), 3)
    hit = []
    for pl in out["polylines"]:
        for v in pl["vertices"]:
            if np.allclose(v["x"], anchor, atol=1e-12):
                hit.append(np.array(v["q"]))
    assert hit
    expect = oracle_exp(r)
    for q in hit:
        err = quat.rotation_angle(quat.product(q, quat.conjugate(expect)))
        assert err < 0.1


def test_grid_export_validation():
    phi = _identity_pose_diffeo()
    with pytest.raises(ValueError):
        grid_distortion_export(phi, ([0, 0, 0], [0, 1, 1]), 3)
    with pytest.raises(ValueError):
        grid_distortion_export(phi, ([-1, -1, -1], [1, 1, 1]), 1)
