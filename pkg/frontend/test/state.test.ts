import { describe, expect, it } from "vitest";

import type { HelloMessage, TelemetryMessage } from "../src/protocol.js";
import { SessionStore, STALE_AFTER_MS, TELEMETRY_WINDOW_MS } from "../src/state.js";

const hello: HelloMessage = {
  type: "hello",
  proto: 1,
  role: "driver",
  scenario: {
    name: "unit",
    dt_s: 0.02,
    track_width_m: 1.42,
    wheel_width_m: 0.36,
    clearance_m: 0.94,
    row_groups: [],
    plots: [{ name: "plot01", polygon_m: [[0, 0], [1, 0], [1, 1], [0, 1]], crop: "flax" }],
    start_pose: {},
  },
};

function telemetry(tMs: number, overrides: Partial<TelemetryMessage> = {}): TelemetryMessage {
  return {
    type: "telemetry",
    t_ms: tMs,
    enc: [0, 0],
    speed_cps: [0, 0],
    batt_v: 24,
    relays: [0, 0, 0, 0],
    pose: [0, 0, 0],
    link_ok: true,
    ...overrides,
  };
}

describe("session store", () => {
  it("rendered pose always comes from the latest telemetry", () => {
    const store = new SessionStore();
    store.ingest(hello, 0);
    store.ingest(telemetry(20, { pose: [1, 2, 0.5] }), 20);
    store.ingest(telemetry(40, { pose: [3, 4, 0.6] }), 40);
    expect(store.latest?.pose).toEqual([3, 4, 0.6]);
    expect(store.window).toHaveLength(2);
  });

  it("prunes the chart window to 60 s", () => {
    const store = new SessionStore();
    store.ingest(hello, 0);
    for (let t = 0; t <= TELEMETRY_WINDOW_MS + 5000; t += 1000) {
      store.ingest(telemetry(t), t);
    }
    const oldest = store.window[0];
    const newest = store.window[store.window.length - 1];
    expect(newest.wallMs - oldest.wallMs).toBeLessThanOrEqual(TELEMETRY_WINDOW_MS);
    expect(store.window.length).toBeGreaterThan(50);
  });

  it("reports stale after one second without telemetry", () => {
    const store = new SessionStore();
    store.ingest(hello, 0);
    store.ingest(telemetry(20), 1000);
    expect(store.connection(1500)).toBe("connected");
    expect(store.connection(1000 + STALE_AFTER_MS + 1)).toBe("stale");
  });

  it("tracks connection lifecycle", () => {
    const store = new SessionStore();
    expect(store.connection(0)).toBe("connecting");
    store.ingest(hello, 0);
    expect(store.connection(0)).toBe("connected");
    store.ingest({ type: "bye", reason: "scenario complete" }, 10);
    expect(store.connection(10)).toBe("closed");
    expect(store.byeReason).toBe("scenario complete");
  });

  it("builds wheel trails from pose and track width", () => {
    const store = new SessionStore();
    store.ingest(hello, 0);
    store.ingest(telemetry(20, { pose: [0, 0, 0] }), 20);
    expect(store.trail).toHaveLength(1);
    const point = store.trail[0];
    expect(point.left[1]).toBeCloseTo(0.71, 6);
    expect(point.right[1]).toBeCloseTo(-0.71, 6);
    expect(point.spraying).toBe(false);
  });

  it("shades plots as covered when sprayed inside", () => {
    const store = new SessionStore();
    store.ingest(hello, 0);
    // enter dry, then open the boom while inside: plot shades
    store.ingest(telemetry(20), 20);
    store.ingest({ type: "event", t_ms: 40, ev: "plot_enter", plot: "plot01" }, 40);
    expect(store.sprayedPlots.has("plot01")).toBe(false);
    store.ingest(telemetry(60, { relays: [1, 1, 1, 1] }), 60);
    expect(store.sprayedPlots.has("plot01")).toBe(true);
    // after exit, spraying no longer attributes to the plot
    store.ingest({ type: "event", t_ms: 80, ev: "plot_exit", plot: "plot01" }, 80);
    expect(store.currentPlot).toBeNull();
  });

  it("bounds the event feed", () => {
    const store = new SessionStore();
    store.ingest(hello, 0);
    for (let i = 0; i < 500; i += 1) {
      store.ingest({ type: "event", t_ms: i, ev: "violation" }, i);
    }
    expect(store.events.length).toBeLessThanOrEqual(250);
    expect(store.events[store.events.length - 1].t_ms).toBe(499);
  });
});
