// The recorded five-minute session must replay with zero schema
// violations, through both the hand-written validators the UI ships
// and the wire schema file itself. Hand-rolled and schema-derived
// verdicts must also agree on a pile of broken frames, so the two
// cannot drift apart silently.

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { clientProblem, serverProblem } from "../src/validate.js";
import { UiStore } from "../src/store.js";
import { conforms } from "./schema_lite.js";

const fixture = JSON.parse(
  readFileSync(new URL("./fixture_session.json", import.meta.url), "utf8"),
);
const schema = JSON.parse(
  readFileSync(
    new URL(
      "../../src/pose_ds/schema/wire_messages.schema.json",
      import.meta.url,
    ),
    "utf8",
  ),
);

const schemaOk = (doc: unknown): boolean => conforms(doc, schema, schema);

describe("recorded session replay", () => {
  it("covers five minutes of sim time", () => {
    const frames = fixture.frames as Array<{ t?: number }>;
    const last = frames[frames.length - 1];
    expect(frames.length).toBeGreaterThan(8000);
    expect(last.t).toBeGreaterThanOrEqual(300);
  });

  it("every inbound frame passes the UI validator and the schema", () => {
    let uiBad = 0;
    let schemaBad = 0;
    const all = [fixture.hello, ...fixture.frames];
    for (const fr of all) {
      if (serverProblem(fr) !== null) uiBad++;
      if (!schemaOk(fr)) schemaBad++;
    }
    expect(uiBad).toBe(0);
    expect(schemaBad).toBe(0);
  });

  it("every outbound frame passes the UI validator and the schema", () => {
    for (const m of fixture.outbound) {
      expect(clientProblem(m)).toBeNull();
      expect(schemaOk(m)).toBe(true);
    }
  });

  it("the store accepts the whole stream without a violation", () => {
    const store = new UiStore();
    store.applyServer(fixture.hello);
    for (const fr of fixture.frames) store.applyServer(fr);
    expect(store.violations).toBe(0);
    expect(store.status).toBe("live");
    expect(store.last?.t).toBeGreaterThanOrEqual(300);
  });
});

describe("validator/schema agreement on malformed frames", () => {
  const state = fixture.frames.find(
    (f: { type: string }) => f.type === "State",
  );
  const target = fixture.outbound.find(
    (m: { type: string }) => m.type === "SetTarget",
  );

  const serverMutants: Array<[string, (f: Record<string, unknown>) => void]> = [
    ["missing t", (f) => delete f.t],
    ["extra key", (f) => (f.extra = 1)],
    ["short quaternion", (f) => (f.q = [1, 0, 0])],
    ["negative seq", (f) => (f.seq = -1)],
    ["fractional seq", (f) => (f.seq = 1.5)],
    ["unknown tag", (f) => (f.type = "Stat")],
    ["stringly V_pos", (f) => (f.V_pos = "0.1")],
    ["goal missing q", (f) => delete (f.goal as Record<string, unknown>).q],
    ["stringly paused", (f) => (f.paused = "yes")],
  ];

  it.each(serverMutants)("server frame with %s is rejected by both", (_, mutate) => {
    const broken = structuredClone(state) as Record<string, unknown>;
    mutate(broken);
    expect(serverProblem(broken)).not.toBeNull();
    expect(schemaOk(broken)).toBe(false);
  });

  const clientMutants: Array<[string, (f: Record<string, unknown>) => void]> = [
    ["missing pose", (f) => delete f.pose],
    ["pose with extra key", (f) => ((f.pose as Record<string, unknown>).z = 0)],
    ["negative at", (f) => (f.at = -2)],
    ["unknown tag", (f) => (f.type = "SetGoal")],
  ];

  it.each(clientMutants)("client frame with %s is rejected by both", (_, mutate) => {
    const broken = structuredClone(target) as Record<string, unknown>;
    mutate(broken);
    expect(clientProblem(broken)).not.toBeNull();
    expect(schemaOk(broken)).toBe(false);
  });

  it("a Perturb with a 2-vector dx is rejected by both", () => {
    const bad = { type: "Perturb", seq: 0, dx: [0.1, 0.2], dq: [0, 0, 0] };
    expect(clientProblem(bad)).not.toBeNull();
    expect(schemaOk(bad)).toBe(false);
  });

  it("a Reset without start is rejected by both", () => {
    const bad = { type: "Reset", seq: 0 };
    expect(clientProblem(bad)).not.toBeNull();
    expect(schemaOk(bad)).toBe(false);
  });
});
