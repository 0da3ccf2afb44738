// Wire protocol (version 1): JSON text frames over a WebSocket.
// The cockpit renders only what snapshots carry; nothing is computed
// client-side beyond coordinate transforms.

export const PROTOCOL_VERSION = 1;

export type Vec3 = [number, number, number];

export interface TargetState {
  id: number;
  center: Vec3;
  radius: number;
  lit: boolean;
}

export interface ArmPoints {
  d: Vec3;
  e: Vec3;
  w: Vec3;
}

export interface TrialState {
  active: boolean;
  kind: string;
  hits_done: number;
  hits_required: number;
  mean: number | null;
  sd: number | null;
}

export interface Snapshot {
  type: "snapshot";
  protocol: number;
  tick: number;
  mapping: "joint" | "task" | "hidden";
  blind: boolean;
  theta_H: number[];
  theta_cmd: number[];
  phi: number[];
  pw_robot: Vec3;
  pw_human: Vec3;
  arm_human: ArmPoints;
  arm_robot: ArmPoints;
  targets: TargetState[];
  trial: TrialState | null;
  last_reaction: number | null;
}

export interface ServerEvent {
  type: "event";
  kind: string;
  tick?: number;
  target?: number;
  index?: number;
  reaction_time?: number;
  reaction_times?: number[];
  trial_id?: number;
  trial_kind?: string;
  mean?: number | null;
  sd?: number | null;
  message?: string;
}

export interface Welcome {
  type: "welcome";
  role: "pilot" | "observer";
  protocol: number;
  config: {
    human: { l1: number; l2: number; l3: number; arm_length: number };
    robot: { l1: number; l2: number; l3: number; arm_length: number };
    tick_rate: number;
    board: { id: number; center: Vec3; radius: number }[];
    home_pose: number[];
    max_joint_speed: number;
  };
}

export type ServerMessage = Snapshot | ServerEvent | Welcome;

export function parseServerMessage(text: string): ServerMessage | null {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const m = obj as Record<string, unknown>;
  if (m.type === "snapshot" && Array.isArray(m.targets) && Array.isArray(m.theta_H)) {
    return m as unknown as Snapshot;
  }
  if (m.type === "event" && typeof m.kind === "string") {
    return m as unknown as ServerEvent;
  }
  if (m.type === "welcome" && (m.role === "pilot" || m.role === "observer")) {
    return m as unknown as Welcome;
  }
  return null;
}

export function pilotInput(eeFrontal: [number, number], depth: number): string {
  return JSON.stringify({ type: "pilot_input", ee_frontal: eeFrontal, depth });
}

export function setMapping(mode: "joint" | "task" | "toggle" | null, blind?: boolean): string {
  const msg: Record<string, unknown> = { type: "set_mapping" };
  if (mode !== null) msg.mode = mode;
  if (blind !== undefined) msg.blind = blind;
  return JSON.stringify(msg);
}

export function trialControl(action: "start" | "stop", kind?: string, seed?: number): string {
  const msg: Record<string, unknown> = { type: "trial_control", action };
  if (action === "start") {
    msg.kind = kind ?? "rxns";
    msg.seed = seed ?? 0;
  }
  return JSON.stringify(msg);
}

export function mappingLabel(mapping: Snapshot["mapping"]): string {
  return mapping === "hidden" ? "mapping: hidden" : `mapping: ${mapping}`;
}
