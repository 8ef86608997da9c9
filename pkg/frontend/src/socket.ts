// Thin WebSocket wrapper: parses, hands frames to the store, and stamps
// the strictly increasing seq the server demands. Outbound frames run
// through the same structural validator as inbound ones; a frame that
// fails it is a programming error, so it throws instead of sending.

import { clientProblem } from "./validate.js";
import type { ClientMsg, Pose, Vec3 } from "./types.js";

export interface SocketHandlers {
  onMessage(m: unknown): void;
  onClose(): void;
}

export class SocketClient {
  private ws: WebSocket;
  private seq = 0;

  constructor(url: string, handlers: SocketHandlers) {
    this.ws = new WebSocket(url);
    this.ws.onmessage = (ev) => {
      let doc: unknown;
      try {
        doc = JSON.parse(String(ev.data));
      } catch {
        doc = { unparseable: true };
      }
      handlers.onMessage(doc);
    };
    this.ws.onclose = () => handlers.onClose();
    this.ws.onerror = () => {
      // onclose follows; nothing useful in the event object.
    };
  }

  get open(): boolean {
    return this.ws.readyState === WebSocket.OPEN;
  }

  close(): void {
    this.ws.close();
  }

  private send(m: ClientMsg): void {
    const bad = clientProblem(m);
    if (bad !== null) throw new Error(`refusing to send: ${bad}`);
    this.ws.send(JSON.stringify(m));
  }

  setTarget(pose: Pose): void {
    this.send({ type: "SetTarget", seq: this.seq++, pose });
  }

  perturb(dx: Vec3, dq: Vec3): void {
    this.send({ type: "Perturb", seq: this.seq++, dx, dq });
  }

  reset(start: Pose): void {
    this.send({ type: "Reset", seq: this.seq++, start });
  }

  pause(): void {
    this.send({ type: "Pause", seq: this.seq++ });
  }

  resume(): void {
    this.send({ type: "Resume", seq: this.seq++ });
  }
}
