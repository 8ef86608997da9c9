// The UI computes no dynamics: every pixel of motion comes from a
// received State. So when the socket drops, the store must hold its
// last picture indefinitely, and replaying the same frames must
// reconstruct the same store, byte for byte.

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { UiStore } from "../src/store.js";

const fixture = JSON.parse(
  readFileSync(new URL("./fixture_session.json", import.meta.url), "utf8"),
);

function snapshot(store: UiStore): string {
  return JSON.stringify({
    status: store.status,
    last: store.last,
    vPos: store.vPos.toArray(),
    vOri: store.vOri.toArray(),
    posErr: store.posErr.toArray(),
    trail: store.trail.toArray(),
    annotations: store.annotations,
  });
}

function replay(n: number): UiStore {
  const store = new UiStore();
  store.applyServer(fixture.hello);
  for (const fr of fixture.frames.slice(0, n)) store.applyServer(fr);
  return store;
}

describe("disconnect freezes motion", () => {
  it("state advances only while frames arrive", () => {
    const store = new UiStore();
    store.applyServer(fixture.hello);
    store.applyServer(fixture.frames[0]);
    const t0 = store.last!.t;
    for (const fr of fixture.frames.slice(1, 100)) store.applyServer(fr);
    expect(store.last!.t).toBeGreaterThan(t0);
  });

  it("nothing moves after the socket closes", async () => {
    const store = replay(200);
    store.dragging = true;
    store.markClosed();
    expect(store.status).toBe("closed");
    expect(store.dragging).toBe(false);
    const frozen = snapshot(store);
    await new Promise((r) => setTimeout(r, 60));
    expect(snapshot(store)).toBe(frozen);
  });

  it("the store is a pure function of the message sequence", () => {
    expect(snapshot(replay(500))).toBe(snapshot(replay(500)));
  });

  it("trail length is capped by the ring, not the session length", () => {
    const store = replay(fixture.frames.length);
    expect(store.trail.length).toBeLessThanOrEqual(store.trail.capacity);
    expect(store.vPos.length).toBeLessThanOrEqual(store.vPos.capacity);
  });
});
