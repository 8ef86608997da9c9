"""Pose-space diffeomorphisms built from locally weighted translations
plus blended orientation fields.

Positions are warped by a composition of layers ``x -> x + k(x) v`` with
a Gaussian bump ``k(x) = exp(-|x - c|^2 / (2 sigma^2))``. Each layer
keeps ``|v| <= 0.9 * sigma * sqrt(e)``, which bounds the translation's
Lipschitz constant below 1 (``sup |grad k| = exp(-1/2)/sigma``) and so
guarantees global invertibility of every layer and of the composition.

Orientations are produced by normalized Gaussian blending of rotation
vectors anchored along a trajectory, with an implicit goal anchor at the
origin carrying zero rotation. The goal anchor's weight is floored and a
smooth dominance gate forces exactly the identity at the origin, so the
field is always defined and the attractor orientation is exact.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import quat
from .errors import InversionError, ModelFormatError

MARGIN_MU = 0.9
_MARGIN_SLACK = 1.0 + 1e-9
_INV_TOL = 1e-10
_INV_MAX_ITERS = 100
GOAL_WEIGHT_FLOOR = 1e-6


def margin_cap(sigma, mu=MARGIN_MU):
    """Largest translation norm a layer of scale sigma may carry."""
    return mu * sigma * math.sqrt(math.e)


@dataclass(frozen=True)
class LwtLayer:
    """One locally weighted translation: center c, translation v, scale sigma."""

    c: np.ndarray
    v: np.ndarray
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "sigma", float(self.sigma))
        if self.c.shape != (3,) or self.v.shape != (3,):
            raise ValueError("layer c and v must be 3-vectors")
        if not self.sigma > 0.0:
            raise ValueError("layer sigma must be positive")
        vn = float(np.sqrt(np.dot(self.v, self.v)))
        if vn > margin_cap(self.sigma) * _MARGIN_SLACK:
            raise ValueError(
                f"layer translation {vn:.6g} exceeds invertibility margin "
                f"{margin_cap(self.sigma):.6g}"
            )


def _bump(layer, x):
    d = x - layer.c
    return np.exp(-np.einsum("...i,...i->...", d, d) / (2.0 * layer.sigma**2))


def lwt_apply(layer, x):
    """Forward map of one layer, broadcasting over leading dims."""
    x = np.asarray(x, dtype=float)
    return x + _bump(layer, x)[..., None] * layer.v


def lwt_jacobian(layer, x):
    """d(lwt_apply)/dx = I + v (grad k)^T, shape (..., 3, 3)."""
    x = np.asarray(x, dtype=float)
    k = _bump(layer, x)
    grad = -(x - layer.c) * (k / layer.sigma**2)[..., None]
    return np.eye(3) + layer.v[..., :, None] * grad[..., None, :]


def lwt_inverse(layer, y):
    """Invert one layer to |lwt_apply(x) - y| <= 1e-10.

    Solves the fixed point x = y - k(x) v by Newton steps on the residual
    (Sherman-Morrison gives the exact Jacobian inverse cheaply), falling
    back to the plain contraction step whenever a Newton step fails to
    reduce the residual. Rows are frozen as soon as they meet tolerance,
    so a point's result does not depend on what else shares the batch.
    Raises InversionError if any point is still above tolerance after
    100 iterations.
    """
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    pts = y.reshape(-1, 3).copy()
    x = pts.copy()
    v = layer.v
    sig2 = layer.sigma**2

    def residual(xs):
        d = xs - layer.c
        k = np.exp(-np.einsum("ij,ij->i", d, d) / (2.0 * sig2))
        return xs + k[:, None] * v - pts, k

    r, k = residual(x)
    rn = np.sqrt(np.einsum("ij,ij->i", r, r))
    active = rn > _INV_TOL
    for _ in range(_INV_MAX_ITERS):
        if not np.any(active):
            break
        xa, ra, ka = x[active], r[active], k[active]
        grad = -(xa - layer.c) * (ka / sig2)[:, None]
        gv = 1.0 + np.einsum("ij,j->i", grad, v)
        gr = np.einsum("ij,ij->i", grad, ra)
        newton = xa - (ra - v * (gr / gv)[:, None])
        cand = np.where(np.abs(gv)[:, None] > 1e-12, newton, pts[active] - ka[:, None] * v)
        d = cand - layer.c
        kc = np.exp(-np.einsum("ij,ij->i", d, d) / (2.0 * sig2))
        rc = cand + kc[:, None] * v - pts[active]
        rcn = np.sqrt(np.einsum("ij,ij->i", rc, rc))
        ran = np.sqrt(np.einsum("ij,ij->i", ra, ra))
        # Contraction fallback where Newton overshot.
        fell_back = rcn > ran
        if np.any(fell_back):
            fp = pts[active] - ka[:, None] * v
            d = fp - layer.c
            kf = np.exp(-np.einsum("ij,ij->i", d, d) / (2.0 * sig2))
            rf = fp + kf[:, None] * v - pts[active]
            cand = np.where(fell_back[:, None], fp, cand)
            kc = np.where(fell_back, kf, kc)
            rc = np.where(fell_back[:, None], rf, rc)
            rcn = np.sqrt(np.einsum("ij,ij->i", rc, rc))
        x[active], r[active], k[active] = cand, rc, kc
        rn[active] = rcn
        active = rn > _INV_TOL
    if np.any(active):
        raise InversionError(
            f"layer inversion stalled at residual {float(rn.max()):.3e}"
        )
    return x[0] if single else x.reshape(y.shape)


@dataclass(frozen=True)
class PositionDiffeo:
    """Composition of locally weighted translation layers, first to last."""

    layers: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        for layer in self.layers:
            x = lwt_apply(layer, x)
        return x

    def invert(self, y):
        y = np.asarray(y, dtype=float)
        for layer in reversed(self.layers):
            y = lwt_inverse(layer, y)
        return y

    def jacobian(self, x):
        """Chain-rule Jacobian of the full composition at x, (..., 3, 3)."""
        x = np.asarray(x, dtype=float)
        jac = np.broadcast_to(np.eye(3), x.shape[:-1] + (3, 3)).copy()
        for layer in self.layers:
            jl = lwt_jacobian(layer, x)
            jac = np.einsum("...ij,...jk->...ik", jl, jac)
            x = lwt_apply(layer, x)
        return jac


def fit_position_diffeo(
    src,
    tgt,
    max_layers=300,
    mu=MARGIN_MU,
    tol=None,
    sigma_coarse=0.5,
    sigma_fine=1.0,
    n_sigma=12,
    relax=0.7,
    extend=6,
):
    """Greedy layer-by-layer matching of two point sequences.

    Each iteration maps src through the layers so far, finds the worst
    residual index, and appends a layer centered there translating it
    toward its target. The layer scale is picked by line search over a
    fixed log-spaced grid between sigma_fine * (mean target spacing)
    and sigma_coarse * arclength, scored by the total squared residual
    after the layer: coarse layers win early when whole stretches are
    off, fine ones win late.

    Two choices keep the composed map gentle between samples, where the
    residuals cannot see. Moves are under-relaxed (``relax`` of the way
    to the target, still clipped to the invertibility margin), which
    spreads a correction over neighboring layers instead of letting one
    near-margin bump carry it. And both sequences are extended past the
    start by ``extend`` virtual samples along their opening directions,
    so the map's stretch settles to its interior value at the true
    first sample rather than ramping up right where rollouts begin.

    Stops at max_layers or when the max residual drops below tol
    (default 1e-3 * target arclength). The terminal point is then
    pinned to a twentieth of tol and snapped exactly onto its target by
    one near-rigid layer (sigma of many arclengths, centered at the
    terminal image, so every other sample shifts by far less than the
    pinned residual): the composed map sends the last source point to
    the last target point to machine precision, which keeps the
    attractor's image exact no matter how coarse the fit budget.
    """
    src = np.asarray(src, dtype=float)
    tgt = np.asarray(tgt, dtype=float)
    if src.shape != tgt.shape or src.ndim != 2 or src.shape[1] != 3:
        raise ValueError("src and tgt must both be (N, 3)")
    seg = np.diff(tgt, axis=0)
    arclen = max(float(np.sum(np.sqrt(np.einsum("ij,ij->i", seg, seg)))), 1e-12)
    if tol is None:
        tol = 1e-3 * arclen
    if extend > 0 and len(src) > 1:
        steps = np.arange(1, extend + 1)[:, None]
        src = np.vstack([(src[0] + steps * (src[0] - src[1]))[::-1], src])
        tgt = np.vstack([(tgt[0] + steps * (tgt[0] - tgt[1]))[::-1], tgt])
    n = len(src)
    sig_lo = max(sigma_fine * arclen / max(n - 1, 1), 1e-9 * arclen)
    sig_hi = max(sigma_coarse * arclen, sig_lo * (1 + 1e-12))
    sigmas = np.geomspace(sig_lo, sig_hi, n_sigma)

    def best_layer(cur, j):
        res_j = (tgt[j] - cur[j]) * relax
        rn = float(np.sqrt(np.dot(res_j, res_j)))
        best = None
        for sigma in sigmas:
            cap = margin_cap(sigma, mu)
            v = res_j if rn <= cap else res_j * (cap / rn)
            d = cur - cur[j]
            k = np.exp(-np.einsum("ij,ij->i", d, d) / (2.0 * sigma * sigma))
            new = cur + k[:, None] * v
            err = float(np.sum((tgt - new) ** 2))
            if best is None or err < best[0]:
                best = (err, LwtLayer(cur[j], v, sigma), new)
        return best[1], best[2]

    layers = []
    cur = src.copy()
    for _ in range(max_layers):
        rn = np.sqrt(np.einsum("ij,ij->i", tgt - cur, tgt - cur))
        j = int(np.argmax(rn))
        if rn[j] < tol:
            break
        layer, cur = best_layer(cur, j)
        layers.append(layer)

    for _ in range(25):
        if float(np.sqrt(np.sum((tgt[-1] - cur[-1]) ** 2))) <= 0.05 * tol:
            break
        layer, cur = best_layer(cur, n - 1)
        layers.append(layer)

    # Exact terminal snap: a layer this wide is a near-rigid shift, and
    # centering it on the terminal image makes that one point land on
    # its target exactly while the rest move by under the pinned
    # residual. Skipped when the fit is already exact there.
    snap_v = tgt[-1] - cur[-1]
    if float(np.sqrt(np.dot(snap_v, snap_v))) > 1e-12 * arclen:
        layers.append(LwtLayer(cur[-1], snap_v, 64.0 * arclen))

    return PositionDiffeo(tuple(layers))


def _polyline_length(xs):
    if len(xs) < 2:
        return 0.0
    seg = np.diff(xs, axis=0)
    return float(np.sum(np.sqrt(np.einsum("ij,ij->i", seg, seg))))


@dataclass(frozen=True)
class OrientationField:
    """Smooth unit-quaternion field from anchored rotation vectors.

    g(x) = exp(gate(|x|) * sum_i w_i r_i / (sum_i w_i + w_goal)) with
    Gaussian weights w_i of a common width. The goal anchor at the
    origin contributes zero rotation with weight
    max(exp(-|x|^2 / (2 width^2)), 1e-6), and the gate (a C1 smoothstep
    over the dominance radius) takes the field exactly to identity at
    the origin. The dominance radius is derived from the anchors, so
    serialization does not need to carry it.
    """

    anchor_xs: np.ndarray
    anchor_rs: np.ndarray
    width: float
    goal_radius: float = field(init=False)

    def __post_init__(self):
        xs = np.asarray(self.anchor_xs, dtype=float).reshape(-1, 3)
        rs = np.asarray(self.anchor_rs, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "anchor_xs", xs)
        object.__setattr__(self, "anchor_rs", rs)
        object.__setattr__(self, "width", float(self.width))
        if len(xs) != len(rs):
            raise ValueError("anchor positions and rotation vectors disagree")
        if not self.width > 0.0:
            raise ValueError("field width must be positive")
        rho = max(0.02 * _polyline_length(xs), 0.1 * self.width)
        object.__setattr__(self, "goal_radius", rho)

    def _blend(self, x):
        """Gated rotation-vector blend at x, shape (..., 3)."""
        x = np.asarray(x, dtype=float)
        r2 = np.einsum("...i,...i->...", x, x)
        wg = np.maximum(np.exp(-r2 / (2.0 * self.width**2)), GOAL_WEIGHT_FLOOR)
        if len(self.anchor_xs):
            d = x[..., None, :] - self.anchor_xs
            d2 = np.einsum("...mi,...mi->...m", d, d)
            w = np.exp(-d2 / (2.0 * self.width**2))
            num = np.einsum("...m,mi->...i", w, self.anchor_rs)
            den = np.einsum("...m->...", w) + wg
        else:
            num = np.zeros(x.shape)
            den = wg
        rbar = num / den[..., None]
        u = np.sqrt(r2) / self.goal_radius
        gate = np.where(u < 1.0, u * u * (3.0 - 2.0 * u), 1.0)
        return rbar * gate[..., None]

    def evaluate(self, x):
        """Field quaternion(s) at x, exactly identity at the origin."""
        return quat.exp_map(self._blend(x))

    def derivative_conj(self, x, xdot):
        """Rate of the conjugated field along xdot, as a 4-vector.

        Central differences along the unit direction of xdot with step
        1e-5 * width, hemisphere-aligned between the two samples, scaled
        by |xdot|. Zero velocity gives a zero rate. The result is
        orthogonal to the conjugated field value (unit-norm curve).
        """
        x = np.asarray(x, dtype=float)
        xdot = np.asarray(xdot, dtype=float)
        speed = np.sqrt(np.einsum("...i,...i->...", xdot, xdot))
        safe = np.where(speed > 0.0, speed, 1.0)
        d = xdot / safe[..., None]
        eps = 1e-5 * self.width
        qp = quat.conjugate(self.evaluate(x + eps * d))
        qm = quat.conjugate(self.evaluate(x - eps * d))
        sign = np.where(np.einsum("...i,...i->...", qp, qm) < 0.0, -1.0, 1.0)
        rate = (qp - sign[..., None] * qm) / (2.0 * eps) * speed[..., None]
        return np.where(speed[..., None] > 0.0, rate, 0.0)


def fit_orientation_field(positions, quaternions, width):
    """Anchor an orientation field along a trajectory.

    Anchors are (position, log_map(q)) pairs after hemisphere alignment.
    The trajectory must end at the origin with identity orientation (the
    goal anchor), and every aligned quaternion must stay in the w > 0
    hemisphere: rotation-vector blending is only valid inside that
    geodesic ball.
    """
    xs = np.asarray(positions, dtype=float).reshape(-1, 3)
    qs = quat.hemisphere_align(np.asarray(quaternions, dtype=float).reshape(-1, 4))
    if qs[-1, 0] < 0:
        qs = -qs
    scale = max(_polyline_length(xs), 1.0)
    if float(np.sqrt(np.dot(xs[-1], xs[-1]))) > 1e-6 * scale:
        raise ValueError("orientation anchors must end at the origin")
    if quat.rotation_angle(qs[-1]) > 1e-6:
        raise ValueError("orientation anchors must end at identity")
    if np.any(qs[:, 0] <= 0.0):
        raise ValueError("anchor rotations leave the supported geodesic ball")
    return OrientationField(xs, quat.log_map(qs), float(width))


@dataclass(frozen=True)
class PoseDiffeo:
    """Position diffeomorphism paired with an orientation field:
    forward pose map (x, q) -> (h(x), g(x) * q)."""

    h: PositionDiffeo
    g: OrientationField

    def forward(self, x, q):
        x = np.asarray(x, dtype=float)
        q = np.asarray(q, dtype=float)
        return self.h.apply(x), quat.product(self.g.evaluate(x), q)

    def inverse(self, y, qy):
        y = np.asarray(y, dtype=float)
        qy = np.asarray(qy, dtype=float)
        x = self.h.invert(y)
        return x, quat.product(quat.conjugate(self.g.evaluate(x)), qy)


def pose_diffeo_to_dict(pd):
    return {
        "layers": [
            {
                "c": [float(v) for v in layer.c],
                "v": [float(v) for v in layer.v],
                "sigma": float(layer.sigma),
            }
            for layer in pd.h.layers
        ],
        "ori_anchors": [
            {"x": [float(v) for v in x], "r": [float(v) for v in r]}
            for x, r in zip(pd.g.anchor_xs, pd.g.anchor_rs)
        ],
        "width": float(pd.g.width),
    }


def pose_diffeo_from_dict(doc):
    try:
        layers = tuple(
            LwtLayer(np.array(d["c"], dtype=float), np.array(d["v"], dtype=float), d["sigma"])
            for d in doc["layers"]
        )
        anchors = doc["ori_anchors"]
        xs = np.array([a["x"] for a in anchors], dtype=float).reshape(-1, 3)
        rs = np.array([a["r"] for a in anchors], dtype=float).reshape(-1, 3)
        width = float(doc["width"])
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"malformed pose map: {e}") from e
    return PoseDiffeo(PositionDiffeo(layers), OrientationField(xs, rs, width))


def grid_distortion_export(phis, bounds, n):
    """Map a regular grid of axis-aligned lines through a chain of pose
    maps for visualization.

    For each of the three axis directions there are n*n polylines of n
    vertices each (3 n^2 polylines, 3 n^3 vertices total). Every vertex
    carries the mapped position and the composed field orientation
    applied to identity. With no maps (or all-identity maps) the lines
    come out straight.
    """
    if isinstance(phis, PoseDiffeo):
        phis = [phis]
    lo = np.asarray(bounds[0], dtype=float)
    hi = np.asarray(bounds[1], dtype=float)
    if lo.shape != (3,) or hi.shape != (3,) or np.any(hi <= lo):
        raise ValueError("bounds must be a (lo, hi) box with hi > lo")
    if n < 2:
        raise ValueError("grid export needs n >= 2")
    axes = [np.linspace(lo[d], hi[d], n) for d in range(3)]

    polylines = []
    for d in range(3):
        others = [k for k in range(3) if k != d]
        for a in axes[others[0]]:
            for b in axes[others[1]]:
                pts = np.empty((n, 3))
                pts[:, d] = axes[d]
                pts[:, others[0]] = a
                pts[:, others[1]] = b
                qs = np.tile(quat.IDENTITY, (n, 1))
                for phi in phis:
                    pts, qs = phi.forward(pts, qs)
                polylines.append(
                    {
                        "axis": "xyz"[d],
                        "vertices": [
                            {"x": [float(v) for v in p], "q": [float(v) for v in q]}
                            for p, q in zip(pts, qs)
                        ],
                    }
                )
    return {"n": int(n), "polylines": polylines}
