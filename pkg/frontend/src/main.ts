// Entry point: wire the socket to the store, the store to the canvases,
// and the controls to the socket. Everything visual runs off one
// requestAnimationFrame loop that only reads.

import { ChartStack } from "./charts.js";
import { GoalGizmo } from "./gizmo.js";
import { SceneView } from "./scene.js";
import { SocketClient } from "./socket.js";
import { UiStore } from "./store.js";
import { perturbProblem } from "./validate.js";
import type { Pose, Vec3 } from "./types.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function wsUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws`;
}

function readVec(ids: string[]): Vec3 | null {
  const out: number[] = [];
  for (const id of ids) {
    const v = Number.parseFloat(el<HTMLInputElement>(id).value);
    if (!Number.isFinite(v)) return null;
    out.push(v);
  }
  return out as Vec3;
}

function main(): void {
  const store = new UiStore();
  const sceneCanvas = el<HTMLCanvasElement>("scene");
  const chartCanvas = el<HTMLCanvasElement>("charts");
  const scene = new SceneView(sceneCanvas);
  const charts = new ChartStack(chartCanvas);
  const statusEl = el<HTMLSpanElement>("status");
  const toastsEl = el<HTMLDivElement>("toasts");

  const sock = new SocketClient(wsUrl(), {
    onMessage: (m) => store.applyServer(m),
    onClose: () => store.markClosed(),
  });

  fetch("/model")
    .then((r) => r.json())
    .then((card: { beta: number; gamma2: number; meta?: { arclength?: number } }) => {
      el<HTMLSpanElement>("model-card").textContent =
        `beta ${card.beta}  gamma2 ${card.gamma2}` +
        (card.meta?.arclength !== undefined
          ? `  path ${card.meta.arclength.toFixed(3)} m`
          : "");
    })
    .catch(() => store.toast("could not fetch /model"));

  const gizmo = new GoalGizmo(
    sceneCanvas,
    scene,
    store,
    (pose: Pose) => {
      if (!sock.open) return false;
      sock.setTarget(pose);
      return true;
    },
    (text) => store.toast(text),
  );
  gizmo.attach();

  el<HTMLButtonElement>("btn-pause").onclick = () => sock.open && sock.pause();
  el<HTMLButtonElement>("btn-resume").onclick = () =>
    sock.open && sock.resume();
  el<HTMLButtonElement>("btn-reset").onclick = () => {
    const meta = store.hello?.model_meta as
      | { meta?: { demo_start?: { x: number[]; q: number[] } } }
      | undefined;
    const start = meta?.meta?.demo_start;
    if (!sock.open || !start) return;
    sock.reset({ x: start.x as Vec3, q: start.q as Pose["q"] });
    store.annotate("reset");
    store.trail.clear();
  };

  el<HTMLButtonElement>("btn-perturb").onclick = () => {
    const dx = readVec(["px", "py", "pz"]);
    const dq = readVec(["rx", "ry", "rz"]);
    if (!dx || !dq) {
      store.toast("perturbation fields must be numbers");
      return;
    }
    const bad = perturbProblem(dx, dq);
    if (bad !== null) {
      store.toast(bad);
      return;
    }
    if (!sock.open) {
      store.toast("offline: perturbation dropped");
      return;
    }
    sock.perturb(dx, dq);
    store.annotate("shove");
  };

  function fitCanvas(c: HTMLCanvasElement): void {
    const r = c.getBoundingClientRect();
    const dpr = window.devicePixelRatio || 1;
    const w = Math.round(r.width * dpr);
    const h = Math.round(r.height * dpr);
    if (c.width !== w || c.height !== h) {
      c.width = w;
      c.height = h;
    }
  }

  function frame(): void {
    fitCanvas(sceneCanvas);
    fitCanvas(chartCanvas);
    gizmo.pump(performance.now());
    scene.render(store);
    charts.render(store);

    statusEl.textContent = store.status;
    statusEl.className = `pill ${store.status}`;
    const conv = store.last?.converged ? " converged" : "";
    el<HTMLSpanElement>("sim-time").textContent = store.last
      ? `t = ${store.last.t.toFixed(2)} s${conv}`
      : "";

    toastsEl.replaceChildren(
      ...store.liveToasts().map((t) => {
        const d = document.createElement("div");
        d.className = "toast";
        d.textContent = t.text;
        return d;
      }),
    );
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

main();
