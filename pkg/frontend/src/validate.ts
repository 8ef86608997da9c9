// Structural checks mirroring wire_messages.schema.json, written out by
// hand so the bundle carries no validator dependency. The test suite
// cross-checks these against the schema file itself, so a drift between
// the two fails CI rather than surfacing as a confusing runtime toast.

const num = (v: unknown): v is number =>
  typeof v === "number" && Number.isFinite(v);

const vecN = (v: unknown, n: number): boolean =>
  Array.isArray(v) && v.length === n && v.every(num);

const seqOk = (v: unknown): boolean =>
  typeof v === "number" && Number.isInteger(v) && v >= 0;

const atOk = (v: unknown): boolean => num(v) && v >= 0;

function poseProblem(v: unknown): string | null {
  if (typeof v !== "object" || v === null || Array.isArray(v)) {
    return "pose must be an object";
  }
  const o = v as Record<string, unknown>;
  for (const k of Object.keys(o)) {
    if (k !== "x" && k !== "q") return `pose has unknown key '${k}'`;
  }
  if (!vecN(o.x, 3)) return "pose.x must be 3 numbers";
  if (!vecN(o.q, 4)) return "pose.q must be 4 numbers";
  return null;
}

// Exact-key check: the schema closes every object with
// additionalProperties: false, so unknown keys are violations, not noise.
function keyProblem(
  o: Record<string, unknown>,
  required: string[],
  optional: string[],
): string | null {
  for (const k of required) {
    if (!(k in o)) return `missing '${k}'`;
  }
  for (const k of Object.keys(o)) {
    if (!required.includes(k) && !optional.includes(k)) {
      return `unknown key '${k}'`;
    }
  }
  return null;
}

function headerProblem(
  o: Record<string, unknown>,
  required: string[],
  withAt: boolean,
): string | null {
  const bad = keyProblem(o, ["type", "seq", ...required], withAt ? ["at"] : []);
  if (bad) return bad;
  if (!seqOk(o.seq)) return "seq must be a non-negative integer";
  if (withAt && "at" in o && !atOk(o.at)) return "at must be >= 0";
  return null;
}

/** Why a client frame is malformed, or null when it conforms. */
export function clientProblem(m: unknown): string | null {
  if (typeof m !== "object" || m === null || Array.isArray(m)) {
    return "frame must be an object";
  }
  const o = m as Record<string, unknown>;
  switch (o.type) {
    case "SetTarget": {
      return headerProblem(o, ["pose"], true) ?? poseProblem(o.pose);
    }
    case "Perturb": {
      const bad = headerProblem(o, ["dx", "dq"], true);
      if (bad) return bad;
      if (!vecN(o.dx, 3)) return "dx must be 3 numbers";
      if (!vecN(o.dq, 3)) return "dq must be 3 numbers";
      return null;
    }
    case "Reset": {
      return headerProblem(o, ["start"], true) ?? poseProblem(o.start);
    }
    case "Pause":
    case "Resume":
      return headerProblem(o, [], true);
    default:
      return `unknown client type '${String(o.type)}'`;
  }
}

/** Why a server frame is malformed, or null when it conforms. */
export function serverProblem(m: unknown): string | null {
  if (typeof m !== "object" || m === null || Array.isArray(m)) {
    return "frame must be an object";
  }
  const o = m as Record<string, unknown>;
  switch (o.type) {
    case "Hello": {
      const bad = headerProblem(
        o,
        ["session_id", "observer", "dt", "model_meta"],
        false,
      );
      if (bad) return bad;
      if (typeof o.session_id !== "string" || o.session_id.length === 0) {
        return "session_id must be a non-empty string";
      }
      if (typeof o.observer !== "boolean") return "observer must be boolean";
      if (!num(o.dt) || o.dt <= 0) return "dt must be > 0";
      if (
        typeof o.model_meta !== "object" ||
        o.model_meta === null ||
        Array.isArray(o.model_meta)
      ) {
        return "model_meta must be an object";
      }
      return null;
    }
    case "State": {
      const bad = headerProblem(
        o,
        ["t", "x", "q", "v", "w", "goal", "V_pos", "V_ori",
         "converged", "paused", "pacing"],
        false,
      );
      if (bad) return bad;
      if (!num(o.t) || o.t < 0) return "t must be >= 0";
      if (!vecN(o.x, 3)) return "x must be 3 numbers";
      if (!vecN(o.q, 4)) return "q must be 4 numbers";
      if (!vecN(o.v, 3)) return "v must be 3 numbers";
      if (!vecN(o.w, 3)) return "w must be 3 numbers";
      const badPose = poseProblem(o.goal);
      if (badPose) return `goal: ${badPose}`;
      if (!num(o.V_pos) || o.V_pos < 0) return "V_pos must be >= 0";
      if (!num(o.V_ori) || o.V_ori < 0) return "V_ori must be >= 0";
      if (typeof o.converged !== "boolean") return "converged must be boolean";
      if (typeof o.paused !== "boolean") return "paused must be boolean";
      if (!num(o.pacing) || o.pacing < 0) return "pacing must be >= 0";
      return null;
    }
    case "Error": {
      const bad = headerProblem(o, ["code", "text"], false);
      if (bad) return bad;
      if (typeof o.code !== "number" || !Number.isInteger(o.code)) {
        return "code must be an integer";
      }
      if (typeof o.text !== "string") return "text must be a string";
      return null;
    }
    default:
      return `unknown server type '${String(o.type)}'`;
  }
}

// Same limits the server enforces with a 422; checking here means an
// oversized shove is refused before a frame ever leaves the browser.
export const MAX_JUMP_M = 1.0;
export const MAX_JUMP_RAD = Math.PI;

export function perturbProblem(dx: number[], dq: number[]): string | null {
  if (!vecN(dx, 3) || !vecN(dq, 3)) return "need 3 finite numbers per field";
  const dxNorm = Math.hypot(dx[0], dx[1], dx[2]);
  const dqNorm = Math.hypot(dq[0], dq[1], dq[2]);
  if (dxNorm > MAX_JUMP_M) {
    return `|dx| = ${dxNorm.toFixed(3)} m exceeds the ${MAX_JUMP_M} m limit`;
  }
  if (dqNorm > MAX_JUMP_RAD) {
    return `rotation ${dqNorm.toFixed(3)} rad exceeds the pi limit`;
  }
  return null;
}
