// Drag-to-move goal widget. A plain drag on the goal triad translates
// it in the camera plane; holding Shift turns vertical pointer motion
// into a rotation about the view axis (one axis-angle increment per
// move event). Frames leave through a 30 Hz throttle; pointer-up
// flushes the final pose so the goal lands exactly where the user let
// go. While disconnected, gestures are swallowed with a notice; the
// widget never moves, because the server echo is what moves it.

import { GestureThrottle } from "./throttle.js";
import { clonePose, fromAxisAngle, product } from "./quat.js";
import type { Pose, Vec3 } from "./types.js";
import type { SceneView } from "./scene.js";
import type { UiStore } from "./store.js";

export const DRAG_HZ = 30;
const GRAB_RADIUS_PX = 28;

export class GoalGizmo {
  private throttle: GestureThrottle<Pose>;
  private grabbed = false;
  private lastPx = 0;
  private lastPy = 0;

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly scene: SceneView,
    private readonly store: UiStore,
    send: (pose: Pose) => boolean,
    private readonly notify: (text: string) => void,
  ) {
    this.throttle = new GestureThrottle<Pose>(1000 / DRAG_HZ, (pose) => {
      if (!send(pose)) this.notify("offline: goal drag dropped");
    });
  }

  attach(): void {
    this.canvas.addEventListener("pointerdown", (e) => this.down(e));
    this.canvas.addEventListener("pointermove", (e) => this.move(e));
    this.canvas.addEventListener("pointerup", (e) => this.up(e));
    this.canvas.addEventListener("pointercancel", (e) => this.up(e));
  }

  /** Called from the render loop; emits a queued pose when due. */
  pump(now: number): void {
    this.throttle.pump(now);
  }

  private down(e: PointerEvent): void {
    const st = this.store.last;
    if (!st) return;
    if (this.store.status === "closed") {
      this.notify("offline: goal drag dropped");
      return;
    }
    const [gx, gy] = this.scene.project(this.store, st.goal.x);
    const r = Math.hypot(e.offsetX - gx, e.offsetY - gy);
    if (r > GRAB_RADIUS_PX) return;
    this.grabbed = true;
    this.store.dragging = true;
    this.store.dragPose = clonePose(st.goal);
    this.lastPx = e.offsetX;
    this.lastPy = e.offsetY;
    this.canvas.setPointerCapture(e.pointerId);
  }

  private move(e: PointerEvent): void {
    if (!this.grabbed || this.store.dragPose === null) return;
    const dx = e.offsetX - this.lastPx;
    const dy = e.offsetY - this.lastPy;
    this.lastPx = e.offsetX;
    this.lastPy = e.offsetY;
    const view = this.scene.view(this.store);
    const p = this.store.dragPose;
    if (e.shiftKey) {
      // Rotation handle: pixels of vertical motion to radians.
      const angle = -dy * 0.01;
      p.q = product(fromAxisAngle(view.normal, angle), p.q);
    } else {
      const s = 1 / view.pxPerUnit;
      const wx: Vec3 = [
        (dx * view.right[0] - dy * view.up[0]) * s,
        (dx * view.right[1] - dy * view.up[1]) * s,
        (dx * view.right[2] - dy * view.up[2]) * s,
      ];
      p.x = [p.x[0] + wx[0], p.x[1] + wx[1], p.x[2] + wx[2]];
    }
    this.throttle.push(clonePose(p), performance.now());
  }

  private up(e: PointerEvent): void {
    if (!this.grabbed) return;
    this.grabbed = false;
    this.store.dragging = false;
    if (this.store.status === "closed") {
      this.throttle.drop();
      this.store.dragPose = null;
      return;
    }
    if (this.store.dragPose !== null) {
      this.throttle.push(clonePose(this.store.dragPose), performance.now());
    }
    this.throttle.flush(performance.now());
    this.canvas.releasePointerCapture(e.pointerId);
  }
}
