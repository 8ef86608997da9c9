// Canvas view of the workspace: ground grid, trailing path, robot and
// goal frame triads. Plain 2D canvas with a fixed oblique projection;
// the scene is small enough that a real 3D stack would be dead weight.

import { axes } from "./quat.js";
import type { Pose, Vec3 } from "./types.js";
import type { UiStore } from "./store.js";

const AXIS_COLORS = ["#e05c4b", "#58b368", "#4b83e0"]; // x, y, z

interface ViewBasis {
  right: Vec3;
  up: Vec3;
  /** Unit vector toward the camera; drag rotations spin about it. */
  normal: Vec3;
  pxPerUnit: number;
}

export class SceneView {
  // Azimuth/elevation of the fixed camera, radians.
  private az = -0.75;
  private el = 0.42;

  constructor(private readonly canvas: HTMLCanvasElement) {}

  private basisVectors(): { fwd: Vec3; right: Vec3; up: Vec3 } {
    const ca = Math.cos(this.az);
    const sa = Math.sin(this.az);
    const ce = Math.cos(this.el);
    const se = Math.sin(this.el);
    const fwd: Vec3 = [ce * ca, ce * sa, -se];
    const right: Vec3 = [-sa, ca, 0];
    const up: Vec3 = [
      fwd[1] * right[2] - fwd[2] * right[1],
      fwd[2] * right[0] - fwd[0] * right[2],
      fwd[0] * right[1] - fwd[1] * right[0],
    ];
    return { fwd, right, up };
  }

  private extent(store: UiStore): number {
    const meta = store.hello?.model_meta as
      | { meta?: { bbox?: number[][] } }
      | undefined;
    const bbox = meta?.meta?.bbox;
    if (bbox && bbox.length === 2) {
      let m = 0.05;
      for (let i = 0; i < 3; i++) {
        m = Math.max(m, Math.abs(bbox[0][i]), Math.abs(bbox[1][i]));
      }
      return m * 1.6;
    }
    return 0.5;
  }

  /** Screen mapping the gizmo needs to turn pixel deltas into world
   * deltas in the view plane. */
  view(store: UiStore): ViewBasis {
    const { fwd, right, up } = this.basisVectors();
    const half = Math.min(this.canvas.width, this.canvas.height) / 2;
    return {
      right,
      up,
      normal: [-fwd[0], -fwd[1], -fwd[2]],
      pxPerUnit: half / this.extent(store),
    };
  }

  project(store: UiStore, p: Vec3): [number, number] {
    const { right, up } = this.basisVectors();
    const s = this.view(store).pxPerUnit;
    const cx = this.canvas.width / 2;
    const cy = this.canvas.height / 2;
    const px = p[0] * right[0] + p[1] * right[1] + p[2] * right[2];
    const py = p[0] * up[0] + p[1] * up[1] + p[2] * up[2];
    return [cx + px * s, cy - py * s];
  }

  render(store: UiStore): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width: w, height: h } = this.canvas;
    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#11141a";
    ctx.fillRect(0, 0, w, h);

    this.drawGrid(ctx, store);
    this.drawTrail(ctx, store);

    const st = store.last;
    if (st) {
      const goal: Pose = store.dragPose ?? st.goal;
      this.drawTriad(ctx, store, goal, 0.45, store.dragPose !== null);
      this.drawTriad(ctx, store, { x: st.x, q: st.q }, 1.0, false);
      if (st.converged) this.drawConvergedRing(ctx, store, st.goal.x);
    }

    if (store.status === "closed") {
      ctx.fillStyle = "rgba(17, 20, 26, 0.55)";
      ctx.fillRect(0, 0, w, h);
      ctx.fillStyle = "#aab3c0";
      ctx.font = "14px system-ui, sans-serif";
      ctx.textAlign = "center";
      ctx.fillText("disconnected: motion frozen", w / 2, h / 2);
      ctx.textAlign = "left";
    } else if (st?.paused) {
      ctx.fillStyle = "#d8b24a";
      ctx.font = "13px system-ui, sans-serif";
      ctx.fillText("paused", 12, 22);
    }
  }

  private drawGrid(ctx: CanvasRenderingContext2D, store: UiStore): void {
    const ext = this.extent(store);
    const step = ext / 4;
    ctx.strokeStyle = "#232a36";
    ctx.lineWidth = 1;
    for (let i = -4; i <= 4; i++) {
      const a = this.project(store, [i * step, -ext, 0]);
      const b = this.project(store, [i * step, ext, 0]);
      const c = this.project(store, [-ext, i * step, 0]);
      const d = this.project(store, [ext, i * step, 0]);
      ctx.beginPath();
      ctx.moveTo(a[0], a[1]);
      ctx.lineTo(b[0], b[1]);
      ctx.moveTo(c[0], c[1]);
      ctx.lineTo(d[0], d[1]);
      ctx.stroke();
    }
  }

  private drawTrail(ctx: CanvasRenderingContext2D, store: UiStore): void {
    if (store.trail.length < 2) return;
    ctx.strokeStyle = "#3d9ac2";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    let first = true;
    store.trail.forEach((p) => {
      const [sx, sy] = this.project(store, p);
      if (first) {
        ctx.moveTo(sx, sy);
        first = false;
      } else {
        ctx.lineTo(sx, sy);
      }
    });
    ctx.stroke();
  }

  private drawTriad(
    ctx: CanvasRenderingContext2D,
    store: UiStore,
    pose: Pose,
    alpha: number,
    dashed: boolean,
  ): void {
    const len = this.extent(store) * 0.22;
    const cols = axes(pose.q);
    const o = this.project(store, pose.x);
    ctx.save();
    ctx.globalAlpha = alpha;
    ctx.setLineDash(dashed ? [4, 3] : []);
    ctx.lineWidth = 2;
    for (let i = 0; i < 3; i++) {
      const tip: Vec3 = [
        pose.x[0] + cols[i][0] * len,
        pose.x[1] + cols[i][1] * len,
        pose.x[2] + cols[i][2] * len,
      ];
      const e = this.project(store, tip);
      ctx.strokeStyle = AXIS_COLORS[i];
      ctx.beginPath();
      ctx.moveTo(o[0], o[1]);
      ctx.lineTo(e[0], e[1]);
      ctx.stroke();
    }
    ctx.restore();
  }

  private drawConvergedRing(
    ctx: CanvasRenderingContext2D,
    store: UiStore,
    at: Vec3,
  ): void {
    const [sx, sy] = this.project(store, at);
    ctx.strokeStyle = "#58b368";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(sx, sy, 14, 0, 2 * Math.PI);
    ctx.stroke();
  }
}
