"""Demo container, loaders, goal-frame normalization, and the latent
trajectory constructions."""

import numpy as np
import pytest

from pose_ds import (
    DemoTrajectory,
    load_demo,
    make_identity_traj,
    make_latent_line,
    normalize_to_goal_frame,
    resample_arclength,
    save_demo,
    quat,
)
from pose_ds.errors import DemoLoadError
from pose_ds.synthetic import helix_demo

from oracles import oracle_pow, quat_dist, random_units


def _write_helix_csv(path, n=100):
    demo = helix_demo(n=n)
    save_demo(demo, path)
    return demo


def test_csv_round_trip_bit_identical(tmp_path):
    p1 = tmp_path / "demo.csv"
    p2 = tmp_path / "again.csv"
    _write_helix_csv(p1)
    first = load_demo(p1)
    save_demo(first, p2)
    second = load_demo(p2)
    assert np.array_equal(first.stamps, second.stamps)
    assert np.array_equal(first.positions, second.positions)
    assert np.array_equal(first.quaternions, second.quaternions)
    # And the rewritten file is byte-identical to a third generation.
    p3 = tmp_path / "third.csv"
    save_demo(second, p3)
    assert p2.read_bytes() == p3.read_bytes()


def test_json_round_trip(tmp_path):
    demo = helix_demo(n=50)
    p = tmp_path / "demo.json"
    save_demo(demo, p)
    back = load_demo(p)
    assert np.array_equal(np.asarray(demo.stamps), back.stamps)
    assert np.array_equal(demo.positions, back.positions)
    assert np.max(np.abs(demo.quaternions - back.quaternions)) < 1e-15


def test_load_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time,x,y,z,qw,qx,qy,qz\n0,0,0,0,1,0,0,0\n1,1,0,0,1,0,0,0\n")
    with pytest.raises(DemoLoadError):
        load_demo(p)


def test_load_rejects_non_monotone_stamps(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text(
        "t,x,y,z,qw,qx,qy,qz\n0,0,0,0,1,0,0,0\n2,1,0,0,1,0,0,0\n1,2,0,0,1,0,0,0\n"
    )
    with pytest.raises(DemoLoadError, match="row 3"):
        load_demo(p)


def test_load_rejects_short_file(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,x,y,z,qw,qx,qy,qz\n0,0,0,0,1,0,0,0\n")
    with pytest.raises(DemoLoadError, match="at least 2"):
        load_demo(p)


def test_load_rejects_zero_norm_quaternion(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text(
        "t,x,y,z,qw,qx,qy,qz\n0,0,0,0,1,0,0,0\n1,1,0,0,0,0,0,0\n"
    )
    with pytest.raises(DemoLoadError, match="row 2"):
        load_demo(p)


def test_load_rejects_non_finite(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text(
        "t,x,y,z,qw,qx,qy,qz\n0,0,0,0,1,0,0,0\n1,nan,0,0,1,0,0,0\n"
    )
    with pytest.raises(DemoLoadError, match="row 2"):
        load_demo(p)


def test_load_rejects_unparseable(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text(
        "t,x,y,z,qw,qx,qy,qz\n0,0,0,0,1,0,0,0\n1,oops,0,0,1,0,0,0\n"
    )
    with pytest.raises(DemoLoadError, match="row 2"):
        load_demo(p)


def test_load_renormalizes_quaternions(tmp_path):
    p = tmp_path / "demo.csv"
    p.write_text(
        "t,x,y,z,qw,qx,qy,qz\n0,0,0,0,2,0,0,0\n1,1,0,0,0,3,0,0\n"
    )
    demo = load_demo(p)
    n = np.linalg.norm(demo.quaternions, axis=1)
    assert np.allclose(n, 1.0, atol=1e-15)


def test_normalize_final_pose_exact():
    demo = helix_demo(n=60)
    norm = normalize_to_goal_frame(demo)
    assert np.array_equal(norm.positions[-1], np.zeros(3))
    assert np.array_equal(norm.quaternions[-1], quat.IDENTITY)


def test_normalize_preserves_relative_geometry():
    demo = helix_demo(n=60)
    norm = normalize_to_goal_frame(demo)
    # Inter-pose distances unchanged.
    d_raw = np.linalg.norm(demo.positions[10] - demo.positions[40])
    d_norm = np.linalg.norm(norm.positions[10] - norm.positions[40])
    assert abs(d_raw - d_norm) < 1e-12
    # Relative rotations q_i * conj(q_j) unchanged.
    rel_raw = quat.product(demo.quaternions[10], quat.conjugate(demo.quaternions[40]))
    rel_norm = quat.product(norm.quaternions[10], quat.conjugate(norm.quaternions[40]))
    assert quat_dist(rel_raw, rel_norm) < 1e-12


def test_normalize_idempotent():
    demo = helix_demo(n=60)
    once = normalize_to_goal_frame(demo)
    twice = normalize_to_goal_frame(once)
    assert np.max(np.abs(once.positions - twice.positions)) < 1e-15
    assert np.max(np.abs(once.quaternions - twice.quaternions)) < 1e-15


def _three_pose_demo():
    q90z = np.array([np.cos(np.pi / 4), 0, 0, np.sin(np.pi / 4)])
    return DemoTrajectory(
        [0.0, 1.0, 2.0],
        [[2.0, 0.0, 0.0], [0.7, 0.3, 0.0], [0.0, 0.0, 0.0]],
        [q90z, quat.slerp(quat.IDENTITY, q90z, 0.4), quat.IDENTITY],
    )


def test_latent_line_three_pose_midpoint():
    b = _three_pose_demo()
    a = make_latent_line(b)
    # t = (1, 0.5, 0): midpoint at half the start position, half geodesic.
    assert np.allclose(a.positions[1], [1.0, 0.0, 0.0], atol=1e-12)
    expect_mid = oracle_pow(b.quaternions[0], 0.5)
    assert quat_dist(a.quaternions[1], expect_mid) < 1e-12
    assert np.allclose(a.positions[0], b.positions[0], atol=0)
    assert quat_dist(a.quaternions[0], b.quaternions[0]) < 1e-12
    assert np.array_equal(a.positions[-1], np.zeros(3))
    assert quat_dist(a.quaternions[-1], quat.IDENTITY) < 1e-15


def test_latent_line_is_single_geodesic():
    demo = normalize_to_goal_frame(helix_demo(n=80))
    a = make_latent_line(demo)
    n = len(a)
    t = np.arange(n)[::-1] / (n - 1)
    q1 = a.quaternions[0]
    for i in range(n):
        expected = quat.pow(q1, t[i])
        err = quat.log_map(quat.product(a.quaternions[i], quat.conjugate(expected)))
        assert np.linalg.norm(err) < 1e-12


def test_latent_line_positions_collinear():
    demo = normalize_to_goal_frame(helix_demo(n=80))
    a = make_latent_line(demo)
    d = a.positions[0] / np.linalg.norm(a.positions[0])
    proj = a.positions - np.outer(a.positions @ d, d)
    assert np.max(np.linalg.norm(proj, axis=1)) < 1e-12


def test_latent_line_requires_normalized_input():
    with pytest.raises(ValueError):
        make_latent_line(helix_demo(n=20))


def test_identity_traj():
    demo = normalize_to_goal_frame(helix_demo(n=30))
    a = make_latent_line(demo)
    d = make_identity_traj(a)
    assert np.array_equal(d.positions, a.positions)
    assert np.array_equal(d.stamps, a.stamps)
    assert np.all(d.quaternions == quat.IDENTITY)


def test_resample_quarter_circle_equal_chords():
    # Equal arclength spacing on a circle means equal chord lengths.
    n_in, n_out = 400, 21
    ang = np.linspace(0, np.pi / 2, n_in)
    xs = np.stack([np.cos(ang), np.sin(ang), np.zeros(n_in)], axis=1)
    qs = np.tile(quat.IDENTITY, (n_in, 1))
    traj = DemoTrajectory(np.linspace(0, 1, n_in), xs, qs)
    out = resample_arclength(traj, n_out)
    chords = np.linalg.norm(np.diff(out.positions, axis=0), axis=1)
    assert np.max(np.abs(chords - chords.mean())) < 1e-4
    assert np.allclose(out.positions[0], xs[0], atol=0)
    assert np.allclose(out.positions[-1], xs[-1], atol=0)


def test_resample_identity_on_uniform_input():
    n = 50
    xs = np.linspace([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], n)
    rng = np.random.default_rng(0)
    q0, q1 = random_units(rng, 2)
    u = np.linspace(0, 1, n)
    qs = np.array([quat.slerp(q0, q1, ui) for ui in u])
    qs = quat.hemisphere_align(qs)
    traj = DemoTrajectory(np.linspace(0, 5, n), xs, qs)
    out = resample_arclength(traj, n)
    assert np.max(np.abs(out.positions - traj.positions)) < 1e-12
    assert np.max(np.abs(out.stamps - traj.stamps)) < 1e-12
    assert np.max(np.abs(out.quaternions - traj.quaternions)) < 1e-12


def test_resample_interpolates_stamps_monotonically():
    demo = helix_demo(n=77)
    out = resample_arclength(demo, 123)
    assert np.all(np.diff(out.stamps) > 0)
    assert out.stamps[0] == demo.stamps[0]
    assert out.stamps[-1] == demo.stamps[-1]


def test_resample_rejects_zero_length():
    xs = np.zeros((5, 3))
    qs = np.tile(quat.IDENTITY, (5, 1))
    traj = DemoTrajectory(np.linspace(0, 1, 5), xs, qs)
    with pytest.raises(ValueError):
        resample_arclength(traj, 10)


def test_container_validation():
    with pytest.raises(DemoLoadError):
        DemoTrajectory([0.0], [[0, 0, 0]], [quat.IDENTITY])
    with pytest.raises(DemoLoadError):
        DemoTrajectory(
            [0.0, 0.0],
            [[0, 0, 0], [1, 0, 0]],
            [quat.IDENTITY, quat.IDENTITY],
        )
