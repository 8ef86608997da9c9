"""Independent oracles used to derive expected values in tests.

Everything here goes through 3x3 rotation matrices (hand-written
conversions, cross-checked against scipy.spatial.transform.Rotation),
deliberately avoiding the quaternion algebra under test. Quaternions are
scalar-first [w, x, y, z]; scipy's xyzw order is converted at the edges.
"""

import numpy as np
from scipy.spatial.transform import Rotation


def quat_to_mat(q):
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def mat_to_quat(m):
    """Shepperd's method, returns the w >= 0 representative."""
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    q = q / np.sqrt(np.dot(q, q))
    return q if q[0] >= 0 else -q


def wxyz_to_scipy(q):
    w, x, y, z = q
    return Rotation.from_quat([x, y, z, w])


def scipy_to_wxyz(rot):
    x, y, z, w = rot.as_quat()
    q = np.array([w, x, y, z])
    return q if q[0] >= 0 else -q


def oracle_product(a, b):
    """Compose the two rotation matrices and convert back."""
    return mat_to_quat(quat_to_mat(a) @ quat_to_mat(b))


def oracle_log(q):
    """Half of the matrix rotation vector (shortest representative)."""
    return 0.5 * Rotation.from_matrix(quat_to_mat(q)).as_rotvec()


def oracle_exp(r):
    return scipy_to_wxyz(Rotation.from_rotvec(2.0 * np.asarray(r, dtype=float)))


def oracle_pow(q, t):
    rv = Rotation.from_matrix(quat_to_mat(q)).as_rotvec()
    return scipy_to_wxyz(Rotation.from_rotvec(t * rv))


def oracle_rotate(q, v):
    return quat_to_mat(q) @ np.asarray(v, dtype=float)


def quat_dist(a, b):
    """Geodesic-insensitive distance: min over the sign ambiguity."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return min(float(np.max(np.abs(a - b))), float(np.max(np.abs(a + b))))


def random_units(rng, n):
    q = rng.normal(size=(n, 4))
    return q / np.sqrt(np.einsum("ij,ij->i", q, q))[:, None]
