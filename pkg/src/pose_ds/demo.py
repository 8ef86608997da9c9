"""Demonstration trajectories: containers, file I/O, goal-frame
normalization, and the latent constructions derived from a demo.

A demo is a timed sequence of poses. After ``normalize_to_goal_frame``
the last pose is exactly the origin with identity orientation, which is
the attractor every downstream component assumes.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import quat
from .errors import DemoLoadError

CSV_HEADER = ["t", "x", "y", "z", "qw", "qx", "qy", "qz"]


@dataclass(frozen=True)
class Pose:
    """Position (3,) plus unit quaternion (4,), scalar-first."""

    x: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        if self.x.shape != (3,) or self.q.shape != (4,):
            raise ValueError("Pose wants x shape (3,) and q shape (4,)")

    @staticmethod
    def identity():
        return Pose(np.zeros(3), quat.IDENTITY.copy())


class DemoTrajectory:
    """Timed pose sequence stored as arrays: stamps (N,), positions
    (N, 3), quaternions (N, 4). Quaternions are unit length; stamps are
    strictly increasing; N >= 2."""

    def __init__(self, stamps, positions, quaternions):
        self.stamps = np.asarray(stamps, dtype=float)
        self.positions = np.asarray(positions, dtype=float)
        self.quaternions = np.asarray(quaternions, dtype=float)
        n = len(self.stamps)
        if n < 2:
            raise DemoLoadError("a demo needs at least 2 poses")
        if self.positions.shape != (n, 3) or self.quaternions.shape != (n, 4):
            raise DemoLoadError("stamps, positions and quaternions disagree on N")
        if not np.all(np.isfinite(self.stamps)):
            raise DemoLoadError("non-finite timestamp")
        if not np.all(np.diff(self.stamps) > 0):
            raise DemoLoadError("timestamps must be strictly increasing")
        norms = np.sqrt(np.einsum("ij,ij->i", self.quaternions, self.quaternions))
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise DemoLoadError("quaternions must be unit length")

    def __len__(self):
        return len(self.stamps)

    def pose(self, i):
        return Pose(self.positions[i].copy(), self.quaternions[i].copy())

    @property
    def duration(self):
        return float(self.stamps[-1] - self.stamps[0])

    def arclength(self):
        seg = np.diff(self.positions, axis=0)
        return float(np.sum(np.sqrt(np.einsum("ij,ij->i", seg, seg))))

    def copy(self):
        return DemoTrajectory(
            self.stamps.copy(), self.positions.copy(), self.quaternions.copy()
        )


def _validate_rows(rows):
    """Shared tail of both loaders: rows of 8 floats -> DemoTrajectory."""
    stamps, xs, qs = [], [], []
    for i, row in enumerate(rows, start=1):
        vals = np.asarray(row, dtype=float)
        if vals.shape != (8,):
            raise DemoLoadError("expected 8 values t,x,y,z,qw,qx,qy,qz", row=i)
        if not np.all(np.isfinite(vals)):
            raise DemoLoadError("non-finite value", row=i)
        qn = float(np.sqrt(np.dot(vals[4:], vals[4:])))
        if qn < 1e-9:
            raise DemoLoadError("zero-norm quaternion", row=i)
        stamps.append(vals[0])
        xs.append(vals[1:4])
        qs.append(vals[4:] / qn)
    if len(stamps) < 2:
        raise DemoLoadError(f"need at least 2 poses, got {len(stamps)}")
    if not np.all(np.diff(stamps) > 0):
        bad = int(np.flatnonzero(np.diff(stamps) <= 0)[0]) + 2
        raise DemoLoadError("non-monotone timestamp", row=bad)
    return DemoTrajectory(stamps, xs, qs)


def load_demo(path):
    """Load a demo from CSV (t,x,y,z,qw,qx,qy,qz header) or JSON
    ({"stamps": [...], "poses": [{"x": [...], "q": [w,x,y,z]}, ...]}).

    Quaternions are renormalized on load. Parse failures, non-monotone
    stamps, short files, zero-norm quaternions and non-finite values all
    raise DemoLoadError naming the offending row where known.
    """
    path = str(path)
    if path.endswith(".json"):
        try:
            with open(path) as f:
                doc = json.load(f)
        except OSError as e:
            raise DemoLoadError(str(e)) from e
        except json.JSONDecodeError as e:
            raise DemoLoadError(f"invalid JSON: {e}") from e
        if not isinstance(doc, dict) or "stamps" not in doc or "poses" not in doc:
            raise DemoLoadError('JSON demo wants keys "stamps" and "poses"')
        stamps = doc["stamps"]
        poses = doc["poses"]
        if len(stamps) != len(poses):
            raise DemoLoadError("stamps and poses lengths differ")
        rows = []
        for i, (t, p) in enumerate(zip(stamps, poses), start=1):
            try:
                rows.append([t, *p["x"], *p["q"]])
            except (KeyError, TypeError) as e:
                raise DemoLoadError(f"malformed pose entry: {e}", row=i) from e
        return _validate_rows(rows)

    try:
        f = open(path, newline="")
    except OSError as e:
        raise DemoLoadError(str(e)) from e
    with f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DemoLoadError("empty file") from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise DemoLoadError(f"bad CSV header, expected {','.join(CSV_HEADER)}")
        rows = []
        for i, row in enumerate(reader, start=1):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as e:
                raise DemoLoadError(f"unparseable value: {e}", row=i) from e
    return _validate_rows(rows)


def save_demo(traj, path):
    """Write a demo as CSV or JSON by extension. Floats are written with
    repr precision so load/save round-trips are bit-identical."""
    path = str(path)
    if path.endswith(".json"):
        doc = {
            "stamps": [float(t) for t in traj.stamps],
            "poses": [
                {"x": [float(v) for v in x], "q": [float(v) for v in q]}
                for x, q in zip(traj.positions, traj.quaternions)
            ],
        }
        with open(path, "w") as f:
            json.dump(doc, f)
            f.write("\n")
        return
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_HEADER)
        for t, x, q in zip(traj.stamps, traj.positions, traj.quaternions):
            writer.writerow([repr(float(v)) for v in (t, *x, *q)])


def normalize_to_goal_frame(traj):
    """Re-express a demo relative to its final pose.

    Positions are translated by the final position; orientations are
    right-multiplied by the conjugate of the final quaternion, which
    preserves all relative rotations q_i * conj(q_j). The sequence is
    then hemisphere-aligned. The final pose comes out exactly
    (0, identity). Already-normalized input passes through unchanged up
    to sign alignment.
    """
    xs = traj.positions - traj.positions[-1]
    qg = quat.conjugate(traj.quaternions[-1])
    qs = quat.product(traj.quaternions, qg[None, :])
    qs = quat.hemisphere_align(qs)
    xs[-1] = 0.0
    qs[-1] = quat.IDENTITY
    return DemoTrajectory(traj.stamps.copy(), xs, qs)


def _assert_normalized(traj, what):
    if (
        float(np.sqrt(np.dot(traj.positions[-1], traj.positions[-1]))) > 1e-9
        or abs(float(np.dot(traj.quaternions[-1], quat.IDENTITY)) - 1.0) > 1e-9
    ):
        raise ValueError(f"{what} expects a goal-frame normalized trajectory")


def make_latent_line(traj):
    """Latent trajectory: straight line to the origin, single geodesic.

    With t_i = (N-i)/(N-1) over 1-based i, pose i is
    (t_i * x_1, q_1 ** t_i); stamps are kept. The input must be
    normalized, so the line and geodesic both end at the attractor.
    """
    _assert_normalized(traj, "make_latent_line")
    n = len(traj)
    t = (np.arange(n)[::-1]) / (n - 1)
    xs = t[:, None] * traj.positions[0]
    r1 = quat.log_map(traj.quaternions[0])
    qs = quat.exp_map(t[:, None] * r1)
    qs = quat.hemisphere_align(qs)
    return DemoTrajectory(traj.stamps.copy(), xs, qs)


def make_identity_traj(traj):
    """Same positions and stamps, all orientations identity."""
    qs = np.tile(quat.IDENTITY, (len(traj), 1))
    return DemoTrajectory(traj.stamps.copy(), traj.positions.copy(), qs)


def resample_arclength(traj, n):
    """Resample to n poses equally spaced in positional arclength.

    Positions and stamps interpolate linearly within the bracketing
    segment, orientations slerp. Endpoints are preserved exactly. A
    trajectory with zero total arclength cannot be resampled.
    """
    if n < 2:
        raise ValueError("resample needs n >= 2")
    seg = np.diff(traj.positions, axis=0)
    seg_len = np.sqrt(np.einsum("ij,ij->i", seg, seg))
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = float(cum[-1])
    if total <= 0.0:
        raise ValueError("zero arclength trajectory cannot be resampled")

    targets = np.linspace(0.0, total, n)
    idx = np.clip(np.searchsorted(cum, targets, side="right") - 1, 0, len(seg_len) - 1)
    local = targets - cum[idx]
    # Zero-length segments only matter if a target lands exactly on one;
    # take the left endpoint there.
    u = np.where(seg_len[idx] > 0.0, local / np.where(seg_len[idx] > 0, seg_len[idx], 1.0), 0.0)

    xs = traj.positions[idx] + u[:, None] * seg[idx]
    stamps = traj.stamps[idx] + u * np.diff(traj.stamps)[idx]
    qs = np.empty((n, 4))
    for k in range(n):
        qs[k] = quat.slerp(traj.quaternions[idx[k]], traj.quaternions[idx[k] + 1], u[k])
    # Exact endpoints, not just within interpolation rounding.
    xs[0], xs[-1] = traj.positions[0], traj.positions[-1]
    qs[0], qs[-1] = traj.quaternions[0], traj.quaternions[-1]
    stamps[0], stamps[-1] = traj.stamps[0], traj.stamps[-1]
    return DemoTrajectory(stamps, xs, quat.hemisphere_align(qs))
