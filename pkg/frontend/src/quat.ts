// Just enough quaternion math to draw frame triads and turn drag
// gestures into axis-angle increments. Nothing here integrates
// dynamics; the server owns the motion.

import type { Pose, Quat, Vec3 } from "./types.js";

export const Q_IDENTITY: Quat = [1, 0, 0, 0];

export function clonePose(p: Pose): Pose {
  return { x: [p.x[0], p.x[1], p.x[2]], q: [p.q[0], p.q[1], p.q[2], p.q[3]] };
}

export function normalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function product(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return normalize([
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ]);
}

export function fromAxisAngle(axis: Vec3, angle: number): Quat {
  const n = Math.hypot(axis[0], axis[1], axis[2]);
  if (n < 1e-12) return Q_IDENTITY;
  const s = Math.sin(angle / 2) / n;
  return normalize([
    Math.cos(angle / 2),
    axis[0] * s,
    axis[1] * s,
    axis[2] * s,
  ]);
}

/** Columns of the rotation matrix: the body axes in world coordinates. */
export function axes(q: Quat): [Vec3, Vec3, Vec3] {
  const [w, x, y, z] = q;
  return [
    [1 - 2 * (y * y + z * z), 2 * (x * y + w * z), 2 * (x * z - w * y)],
    [2 * (x * y - w * z), 1 - 2 * (x * x + z * z), 2 * (y * z + w * x)],
    [2 * (x * z + w * y), 2 * (y * z - w * x), 1 - 2 * (x * x + y * y)],
  ];
}
