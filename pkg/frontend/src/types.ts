// Wire types, one-to-one with wire_messages.schema.json. The server is
// the source of truth; nothing here is computed client-side.

export type Vec3 = [number, number, number];

/** (w, x, y, z), unit norm. */
export type Quat = [number, number, number, number];

export interface Pose {
  x: Vec3;
  q: Quat;
}

export interface HelloMsg {
  type: "Hello";
  seq: number;
  session_id: string;
  observer: boolean;
  dt: number;
  model_meta: Record<string, unknown>;
}

export interface StateMsg {
  type: "State";
  seq: number;
  t: number;
  x: Vec3;
  q: Quat;
  v: Vec3;
  w: Vec3;
  goal: Pose;
  V_pos: number;
  V_ori: number;
  converged: boolean;
  paused: boolean;
  pacing: number;
}

export interface ErrorMsg {
  type: "Error";
  seq: number;
  code: number;
  text: string;
}

export type ServerMsg = HelloMsg | StateMsg | ErrorMsg;

export interface SetTargetMsg {
  type: "SetTarget";
  seq: number;
  at?: number;
  pose: Pose;
}

export interface PerturbMsg {
  type: "Perturb";
  seq: number;
  at?: number;
  dx: Vec3;
  /** Axis-angle, radians; magnitude is the rotation angle. */
  dq: Vec3;
}

export interface ResetMsg {
  type: "Reset";
  seq: number;
  at?: number;
  start: Pose;
}

export interface PauseMsg {
  type: "Pause";
  seq: number;
  at?: number;
}

export interface ResumeMsg {
  type: "Resume";
  seq: number;
  at?: number;
}

export type ClientMsg =
  | SetTargetMsg
  | PerturbMsg
  | ResetMsg
  | PauseMsg
  | ResumeMsg;
