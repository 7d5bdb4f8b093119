// Wire protocol (proto 1) spoken by the simulator's serve mode.

export const PROTO = 1;

export interface RowGroupMeta {
  origin_m: [number, number];
  heading_rad: number;
  length_m: number;
  row_offsets_m: number[];
}

export interface PlotMeta {
  name: string;
  polygon_m: [number, number][];
  crop: string;
}

export interface ScenarioMeta {
  name: string;
  dt_s: number;
  track_width_m: number;
  wheel_width_m: number;
  clearance_m: number;
  row_groups: RowGroupMeta[];
  plots: PlotMeta[];
  start_pose: { x_m?: number; y_m?: number; theta_deg?: number };
}

export interface HelloMessage {
  type: "hello";
  proto: number;
  role: "driver" | "spectator";
  scenario: ScenarioMeta;
}

export interface TelemetryMessage {
  type: "telemetry";
  t_ms: number;
  enc: [number, number];
  speed_cps: [number, number];
  batt_v: number;
  relays: number[];
  pose?: [number, number, number];
  link_ok: boolean;
}

export interface EventMessage {
  type: "event";
  t_ms: number;
  ev: string;
  [key: string]: unknown;
}

export interface ErrorMessage {
  type: "error";
  error: string;
}

export interface ByeMessage {
  type: "bye";
  reason: string;
}

export type ServerMessage =
  | HelloMessage
  | TelemetryMessage
  | EventMessage
  | ErrorMessage
  | ByeMessage;

export function parseServerMessage(data: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(data);
  } catch {
    return null;
  }
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as { type?: unknown };
  switch (msg.type) {
    case "hello":
    case "telemetry":
    case "event":
    case "error":
    case "bye":
      return raw as ServerMessage;
    default:
      return null;
  }
}

export function sticksMessage(channels: number[]): string {
  return JSON.stringify({ type: "sticks", channels });
}

export function takeoverMessage(): string {
  return JSON.stringify({ type: "takeover" });
}
