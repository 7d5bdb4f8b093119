// Rolling telemetry charts on a single canvas: wheel speeds and battery
// voltage over the retained 60 s window.

import type { SessionStore } from "./state.js";
import { TELEMETRY_WINDOW_MS } from "./state.js";

const SPEED_COLORS = ["#d8a23a", "#6ab0f3"];
const BATT_COLOR = "#7ddf7d";
const GRID = "#2a3328";

export class TelemetryCharts {
  constructor(private readonly canvas: HTMLCanvasElement) {}

  render(store: SessionStore, nowMs: number): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const w = this.canvas.width;
    const h = this.canvas.height;
    ctx.fillStyle = "#10150d";
    ctx.fillRect(0, 0, w, h);
    const samples = store.window;
    if (samples.length < 2) return;

    const speedMax = Math.max(1, ...samples.map((s) =>
      Math.max(Math.abs(s.speedCps[0]), Math.abs(s.speedCps[1]))));
    const half = h / 2;
    const toX = (wallMs: number) =>
      w - ((nowMs - wallMs) / TELEMETRY_WINDOW_MS) * w;

    ctx.strokeStyle = GRID;
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(0, half / 2);
    ctx.lineTo(w, half / 2);
    ctx.stroke();

    // wheel speeds (top half, symmetric about its midline)
    for (const motor of [0, 1]) {
      ctx.strokeStyle = SPEED_COLORS[motor];
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      samples.forEach((s, i) => {
        const x = toX(s.wallMs);
        const y = half / 2 - (s.speedCps[motor] / speedMax) * (half / 2 - 4);
        if (i === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      ctx.stroke();
    }

    // battery (bottom half, 20-26 V span)
    ctx.strokeStyle = BATT_COLOR;
    ctx.beginPath();
    samples.forEach((s, i) => {
      const x = toX(s.wallMs);
      const frac = (s.battV - 20) / 6;
      const y = h - Math.min(Math.max(frac, 0), 1) * (half - 8) - 4;
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();

    ctx.fillStyle = "#9ba48f";
    ctx.font = "10px monospace";
    const latest = samples[samples.length - 1];
    ctx.fillText(
      `speed L ${latest.speedCps[0].toFixed(0)} / R ${latest.speedCps[1].toFixed(0)} counts/s`,
      6, 12);
    ctx.fillText(`battery ${latest.battV.toFixed(2)} V`, 6, half + 14);
  }
}
