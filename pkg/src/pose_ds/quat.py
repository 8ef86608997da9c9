"""Unit quaternion algebra on plain numpy arrays.

Conventions, fixed across the whole package:

* Storage is scalar-first ``[w, x, y, z]``, shape ``(..., 4)``. All
  functions broadcast over leading dimensions.
* Hamilton convention: ``i*j = k``. ``product(a, b)`` is the rotation b
  followed by a, matching matrix composition ``R(a) @ R(b)``.
* ``log_map`` / ``exp_map`` use the half-angle rotation vector: for
  ``q = (cos t, u sin t)`` with ``t`` in ``[0, pi]``, ``log_map(q) = t*u``.
  A quaternion with negative scalar part is flipped to its shortest
  representative first, so returned magnitudes never exceed ``pi/2``.
* Angular velocities are expressed in the world frame,
  ``omega = 2 * vec(dq/dt * conjugate(q))``. The factor 2 is kept explicit
  at call sites; it is never folded into the log map.

Rotation matrices never appear in this module; they are reserved for
independent test oracles.
"""

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

# Below this vector norm the sin(t)/t style series are used, and below it
# the rotation axis of a w ~ 0 quaternion is considered unrecoverable.
_EPS_AXIS = 1e-9


def _vnorm(a):
    """Euclidean norm over the last axis, summation order fixed."""
    return np.sqrt(np.einsum("...i,...i->...", a, a))


def normalize(q):
    """Scale to unit norm. Raises ValueError on (near-)zero input."""
    q = np.asarray(q, dtype=float)
    n = _vnorm(q)
    if np.any(n < _EPS_AXIS):
        raise ValueError("cannot normalize a zero-norm quaternion")
    return q / n[..., None]


def product(a, b):
    """Hamilton product a*b, renormalized to unit length.

    Inputs are assumed unit; renormalization only sheds accumulated
    rounding, it does not hide genuinely non-unit operands.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, av = a[..., 0], a[..., 1:]
    bw, bv = b[..., 0], b[..., 1:]
    w = aw * bw - np.einsum("...i,...i->...", av, bv)
    v = aw[..., None] * bv + bw[..., None] * av + np.cross(av, bv)
    return normalize(np.concatenate([w[..., None], v], axis=-1))


def product_raw(a, b):
    """Hamilton product without renormalization, for non-unit operands."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, av = a[..., 0], a[..., 1:]
    bw, bv = b[..., 0], b[..., 1:]
    w = aw * bw - np.einsum("...i,...i->...", av, bv)
    v = aw[..., None] * bv + bw[..., None] * av + np.cross(av, bv)
    return np.concatenate([w[..., None], v], axis=-1)


def conjugate(q):
    q = np.asarray(q, dtype=float)
    return np.concatenate([q[..., :1], -q[..., 1:]], axis=-1)


def rotate(q, v):
    """Rotate 3-vector(s) v by unit quaternion(s) q: vec(q * (0,v) * conj(q))."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    qv = q[..., 1:]
    qw = q[..., 0]
    # Expanded sandwich product; one cross less than the naive form.
    t = 2.0 * np.cross(qv, v)
    return v + qw[..., None] * t + np.cross(qv, t)


def log_map(q, return_boundary=False):
    """Half-angle rotation vector of q, shortest representative.

    For q with negative scalar part the sign is flipped first. Rotations
    of exactly pi (w = 0) sit on the boundary where the axis sign is
    ambiguous; the axis is taken from the vector part as stored, or
    (1, 0, 0) when even that is degenerate. With ``return_boundary=True``
    a boolean mask marking those inputs is returned alongside.
    """
    q = np.asarray(q, dtype=float)
    flip = q[..., 0] < 0.0
    q = np.where(flip[..., None], -q, q)
    w = q[..., 0]
    vec = q[..., 1:]
    vn = _vnorm(vec)
    theta = np.arctan2(vn, w)
    at_boundary = w < _EPS_AXIS

    # sin(t) = vn for unit q; the series branch covers vn -> 0 where the
    # quotient theta/vn -> 1.
    safe_vn = np.where(vn > _EPS_AXIS, vn, 1.0)
    scale = np.where(vn > _EPS_AXIS, theta / safe_vn, 1.0)
    r = vec * scale[..., None]

    degenerate = at_boundary & (vn <= _EPS_AXIS)
    if np.any(degenerate):
        fallback = np.zeros_like(r)
        fallback[..., 0] = theta
        r = np.where(degenerate[..., None], fallback, r)

    if return_boundary:
        return r, at_boundary
    return r


def exp_map(r):
    """Unit quaternion for a half-angle rotation vector, ``|r| <= pi``."""
    r = np.asarray(r, dtype=float)
    theta = _vnorm(r)
    if np.any(theta > np.pi * (1.0 + 1e-12)):
        raise ValueError("rotation vector magnitude exceeds pi")
    w = np.cos(theta)
    safe = np.where(theta > _EPS_AXIS, theta, 1.0)
    scale = np.where(theta > _EPS_AXIS, np.sin(theta) / safe, 1.0)
    return np.concatenate([w[..., None], r * scale[..., None]], axis=-1)


def pow(q, t):
    """Geodesic power q**t via exp(t * log(q)). pow(q, 1) == q up to sign."""
    t = np.asarray(t, dtype=float)
    return exp_map(log_map(q) * t[..., None])


def slerp(a, b, u):
    """Spherical interpolation from a (u=0) to b (u=1) along the short arc."""
    rel = product(conjugate(a), b)
    return product(a, pow(rel, u))


def rotation_angle(q):
    """Full rotation angle in radians, in [0, pi]."""
    return 2.0 * _vnorm(log_map(q))


def hemisphere_align(qs):
    """Flip signs along the first axis so consecutive quaternions stay
    in the same hemisphere (non-negative dot with the previous one)."""
    qs = np.array(qs, dtype=float)
    if qs.ndim != 2 or qs.shape[1] != 4:
        raise ValueError("expected an (N, 4) quaternion sequence")
    for i in range(1, len(qs)):
        if float(np.dot(qs[i], qs[i - 1])) < 0.0:
            qs[i] = -qs[i]
    return qs
