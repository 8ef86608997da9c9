// Single source of truth for rendering. Only two things mutate it:
// server messages and the goal widget. There is no timer and no
// physics in here, so when the socket dies the picture simply stops.

import { Ring } from "./ring.js";
import { serverProblem } from "./validate.js";
import type { HelloMsg, Pose, ServerMsg, StateMsg, Vec3 } from "./types.js";

export const CHART_WINDOW_S = 60;

// 60 s at the 30 Hz broadcast rate, with headroom for event-forced
// extra frames.
const SAMPLE_CAP = 2400;

export type Status = "connecting" | "live" | "closed";

export interface Sample {
  t: number;
  y: number;
}

export interface Annotation {
  t: number;
  label: string;
}

export interface Toast {
  text: string;
  until: number;
}

function closePose(a: Pose, b: Pose): boolean {
  const dp = Math.hypot(a.x[0] - b.x[0], a.x[1] - b.x[1], a.x[2] - b.x[2]);
  const dot = Math.abs(
    a.q[0] * b.q[0] + a.q[1] * b.q[1] + a.q[2] * b.q[2] + a.q[3] * b.q[3],
  );
  return dp < 1e-6 && dot > 1 - 1e-9;
}

export class UiStore {
  status: Status = "connecting";
  hello: HelloMsg | null = null;
  last: StateMsg | null = null;
  /** Frames that failed validation; anything above zero is a bug. */
  violations = 0;

  vPos = new Ring<Sample>(SAMPLE_CAP);
  vOri = new Ring<Sample>(SAMPLE_CAP);
  posErr = new Ring<Sample>(SAMPLE_CAP);
  trail = new Ring<Vec3>(SAMPLE_CAP);

  annotations: Annotation[] = [];
  toasts: Toast[] = [];

  /** Optimistic goal while a drag is in flight, cleared by the echo. */
  dragPose: Pose | null = null;
  dragging = false;

  applyServer(m: unknown): void {
    const bad = serverProblem(m);
    if (bad !== null) {
      this.violations += 1;
      this.toast(`dropped a malformed frame: ${bad}`);
      return;
    }
    const msg = m as ServerMsg;
    switch (msg.type) {
      case "Hello":
        this.hello = msg;
        this.status = "live";
        break;
      case "Error":
        this.toast(`server ${msg.code}: ${msg.text}`);
        // Snap the widget back; the server refused or never saw it.
        this.dragPose = null;
        this.dragging = false;
        break;
      case "State":
        this.last = msg;
        this.vPos.push({ t: msg.t, y: msg.V_pos });
        this.vOri.push({ t: msg.t, y: msg.V_ori });
        this.posErr.push({
          t: msg.t,
          y: Math.hypot(
            msg.x[0] - msg.goal.x[0],
            msg.x[1] - msg.goal.x[1],
            msg.x[2] - msg.goal.x[2],
          ),
        });
        this.trail.push(msg.x);
        this.pruneAnnotations(msg.t);
        if (
          !this.dragging &&
          this.dragPose !== null &&
          closePose(msg.goal, this.dragPose)
        ) {
          this.dragPose = null;
        }
        break;
    }
  }

  markClosed(): void {
    this.status = "closed";
    this.dragging = false;
  }

  /** Pin a chart annotation at the current sim time. */
  annotate(label: string): void {
    if (this.last !== null) {
      this.annotations.push({ t: this.last.t, label });
    }
  }

  toast(text: string, wallNow = Date.now()): void {
    this.toasts.push({ text, until: wallNow + 4000 });
    if (this.toasts.length > 6) this.toasts.shift();
  }

  liveToasts(wallNow = Date.now()): Toast[] {
    this.toasts = this.toasts.filter((t) => t.until > wallNow);
    return this.toasts;
  }

  private pruneAnnotations(now: number): void {
    const cutoff = now - CHART_WINDOW_S;
    while (this.annotations.length > 0 && this.annotations[0].t < cutoff) {
      this.annotations.shift();
    }
  }
}
