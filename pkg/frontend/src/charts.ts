// Three stacked strip charts over the last 60 s of sim time: V_pos,
// V_ori, and task-space position error. Log scale, because all three
// decay exponentially between events and the interesting part is how
// many decades down the state is. Event annotations draw as vertical
// dashes with a label.

import { CHART_WINDOW_S } from "./store.js";
import type { Sample, UiStore } from "./store.js";
import type { Ring } from "./ring.js";

const FLOOR = 1e-12;
const ROWS: Array<{ title: string; pick: (s: UiStore) => Ring<Sample> }> = [
  { title: "V_pos", pick: (s) => s.vPos },
  { title: "V_ori", pick: (s) => s.vOri },
  { title: "|x - goal| m", pick: (s) => s.posErr },
];

export class ChartStack {
  constructor(private readonly canvas: HTMLCanvasElement) {}

  render(store: UiStore): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width: w, height: h } = this.canvas;
    ctx.clearRect(0, 0, w, h);
    ctx.fillStyle = "#11141a";
    ctx.fillRect(0, 0, w, h);
    const now = store.last?.t;
    if (now === undefined) return;
    const t0 = Math.max(0, now - CHART_WINDOW_S);

    const rowH = h / ROWS.length;
    ROWS.forEach((row, i) => {
      this.renderRow(ctx, store, row.pick(store), row.title,
                     i * rowH, rowH, t0, now);
    });
  }

  private renderRow(
    ctx: CanvasRenderingContext2D,
    store: UiStore,
    series: Ring<Sample>,
    title: string,
    top: number,
    rowH: number,
    t0: number,
    t1: number,
  ): void {
    const w = this.canvas.width;
    const pad = 6;
    const span = Math.max(t1 - t0, 1e-6);
    const xOf = (t: number) => ((t - t0) / span) * (w - 2 * pad) + pad;

    // Log range from the visible data, at least four decades tall.
    let lo = Infinity;
    let hi = -Infinity;
    series.forEach((s) => {
      if (s.t < t0) return;
      const v = Math.log10(Math.max(s.y, FLOOR));
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    });
    if (!Number.isFinite(lo)) {
      lo = -6;
      hi = 0;
    }
    if (hi - lo < 4) lo = hi - 4;
    const yOf = (y: number) => {
      const v = Math.log10(Math.max(y, FLOOR));
      return top + pad + (1 - (v - lo) / (hi - lo)) * (rowH - 2 * pad - 12);
    };

    ctx.strokeStyle = "#232a36";
    ctx.strokeRect(pad, top + pad, w - 2 * pad, rowH - 2 * pad);

    for (const a of store.annotations) {
      if (a.t < t0) continue;
      const x = xOf(a.t);
      ctx.strokeStyle = "#d8b24a";
      ctx.setLineDash([3, 3]);
      ctx.beginPath();
      ctx.moveTo(x, top + pad);
      ctx.lineTo(x, top + rowH - pad);
      ctx.stroke();
      ctx.setLineDash([]);
      if (title === ROWS[0].title) {
        ctx.fillStyle = "#d8b24a";
        ctx.font = "10px system-ui, sans-serif";
        ctx.fillText(a.label, x + 3, top + pad + 10);
      }
    }

    ctx.strokeStyle = "#6fc2e8";
    ctx.lineWidth = 1.4;
    ctx.beginPath();
    let first = true;
    series.forEach((s) => {
      if (s.t < t0) return;
      const x = xOf(s.t);
      const y = yOf(s.y);
      if (first) {
        ctx.moveTo(x, y);
        first = false;
      } else {
        ctx.lineTo(x, y);
      }
    });
    ctx.stroke();

    ctx.fillStyle = "#aab3c0";
    ctx.font = "11px system-ui, sans-serif";
    ctx.fillText(title, pad + 4, top + rowH - pad - 4);
    const lastY = series.last()?.y;
    if (lastY !== undefined) {
      ctx.fillText(lastY.toExponential(2), w - 80, top + rowH - pad - 4);
    }
  }
}
