// Session state: the render loop reads immutable snapshots that message
// ingest replaces (latest-snapshot pattern). Rendered pose always comes from
// the newest received telemetry; the client never dead-reckons on its own.

import type {
  EventMessage,
  HelloMessage,
  ScenarioMeta,
  ServerMessage,
  TelemetryMessage,
} from "./protocol.js";

export type ConnectionState = "connecting" | "connected" | "stale" | "closed";

export interface TelemetrySample {
  tMs: number;
  wallMs: number;
  speedCps: [number, number];
  battV: number;
  relays: number[];
  pose: [number, number, number] | null;
  linkOk: boolean;
}

export interface TrailPoint {
  left: [number, number];
  right: [number, number];
  spraying: boolean;
}

export const STALE_AFTER_MS = 1000;
export const TELEMETRY_WINDOW_MS = 60_000;
const MAX_EVENTS = 250;
const MAX_TRAIL = 4000;

export class SessionStore {
  role: "driver" | "spectator" | null = null;
  scenario: ScenarioMeta | null = null;
  latest: TelemetrySample | null = null;
  events: EventMessage[] = [];
  /** rolling samples for the charts, pruned to TELEMETRY_WINDOW_MS */
  window: TelemetrySample[] = [];
  trail: TrailPoint[] = [];
  sprayedPlots = new Set<string>();
  /** plot the robot is currently over, from plot_enter/plot_exit events */
  currentPlot: string | null = null;
  byeReason: string | null = null;
  errors = 0;
  private closedByPeer = false;

  ingest(msg: ServerMessage, wallMs: number): void {
    switch (msg.type) {
      case "hello":
        this.onHello(msg);
        break;
      case "telemetry":
        this.onTelemetry(msg, wallMs);
        break;
      case "event":
        this.onEvent(msg);
        break;
      case "error":
        this.errors += 1;
        break;
      case "bye":
        this.byeReason = msg.reason;
        this.closedByPeer = true;
        break;
    }
  }

  private onHello(msg: HelloMessage): void {
    this.role = msg.role;
    this.scenario = msg.scenario;
  }

  private onTelemetry(msg: TelemetryMessage, wallMs: number): void {
    const sample: TelemetrySample = {
      tMs: msg.t_ms,
      wallMs,
      speedCps: msg.speed_cps,
      battV: msg.batt_v,
      relays: msg.relays,
      pose: msg.pose ?? null,
      linkOk: msg.link_ok,
    };
    this.latest = sample;
    this.window.push(sample);
    const cutoff = wallMs - TELEMETRY_WINDOW_MS;
    while (this.window.length > 0 && this.window[0].wallMs < cutoff) {
      this.window.shift();
    }
    this.pushTrail(sample);
    if (this.currentPlot !== null && sample.relays.some((r) => r !== 0)) {
      this.sprayedPlots.add(this.currentPlot);
    }
  }

  private pushTrail(sample: TelemetrySample): void {
    if (!sample.pose || !this.scenario) return;
    const [x, y, theta] = sample.pose;
    const half = this.scenario.track_width_m / 2;
    const nx = -Math.sin(theta);
    const ny = Math.cos(theta);
    this.trail.push({
      left: [x + half * nx, y + half * ny],
      right: [x - half * nx, y - half * ny],
      spraying: sample.relays.some((r) => r !== 0),
    });
    if (this.trail.length > MAX_TRAIL) {
      this.trail.splice(0, this.trail.length - MAX_TRAIL);
    }
  }

  private onEvent(msg: EventMessage): void {
    this.events.push(msg);
    if (this.events.length > MAX_EVENTS) {
      this.events.splice(0, this.events.length - MAX_EVENTS);
    }
    if (msg.ev === "plot_enter") {
      this.currentPlot = String(msg.plot);
      if (this.latest?.relays.some((r) => r !== 0)) {
        this.sprayedPlots.add(this.currentPlot);
      }
    } else if (msg.ev === "plot_exit" && this.currentPlot === String(msg.plot)) {
      this.currentPlot = null;
    }
  }

  connection(nowMs: number): ConnectionState {
    if (this.byeReason !== null || this.closedByPeer) return "closed";
    if (this.scenario === null) return "connecting";
    if (this.latest === null) return "connected";
    return nowMs - this.latest.wallMs > STALE_AFTER_MS ? "stale" : "connected";
  }

  markClosed(): void {
    this.closedByPeer = true;
  }
}
