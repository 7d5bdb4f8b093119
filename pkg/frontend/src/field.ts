// Top-down field view: crop rows and plots to scale, the robot footprint at
// its telemetry pose, trailing wheel paths, spray shading while solenoids
// are open, and markers where events fired.

import type { EventMessage, ScenarioMeta } from "./protocol.js";
import type { SessionStore } from "./state.js";

const COLORS = {
  background: "#15200f",
  row: "#3e7d32",
  plot: "#2b4422",
  plotSprayed: "rgba(80, 170, 255, 0.35)",
  robot: "#e8e4d8",
  wheel: "#d8a23a",
  trail: "rgba(216, 162, 58, 0.5)",
  spray: "rgba(80, 170, 255, 0.75)",
  violation: "#ff5544",
  stall: "#ffaa00",
  failsafe: "#ff2222",
};

interface Viewport {
  scale: number;
  cx: number;
  cy: number;
  w: number;
  h: number;
}

export class FieldView {
  private follow = true;

  constructor(private readonly canvas: HTMLCanvasElement) {}

  setFollow(on: boolean): void {
    this.follow = on;
  }

  render(store: SessionStore): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx || !store.scenario) return;
    const vp = this.viewport(store);
    ctx.fillStyle = COLORS.background;
    ctx.fillRect(0, 0, vp.w, vp.h);
    this.drawPlots(ctx, vp, store);
    this.drawRows(ctx, vp, store.scenario);
    this.drawTrail(ctx, vp, store);
    this.drawEvents(ctx, vp, store.events);
    this.drawRobot(ctx, vp, store);
  }

  private viewport(store: SessionStore): Viewport {
    const w = this.canvas.width;
    const h = this.canvas.height;
    const pose = store.latest?.pose;
    const scale = 40; // px per meter
    if (this.follow && pose) {
      return { scale, cx: pose[0], cy: pose[1], w, h };
    }
    const sp = store.scenario?.start_pose ?? {};
    return { scale, cx: sp.x_m ?? 0, cy: sp.y_m ?? 0, w, h };
  }

  private toPx(vp: Viewport, x: number, y: number): [number, number] {
    return [vp.w / 2 + (x - vp.cx) * vp.scale, vp.h / 2 - (y - vp.cy) * vp.scale];
  }

  private drawRows(ctx: CanvasRenderingContext2D, vp: Viewport, meta: ScenarioMeta): void {
    ctx.strokeStyle = COLORS.row;
    ctx.lineWidth = 2;
    for (const group of meta.row_groups) {
      const [ox, oy] = group.origin_m;
      const c = Math.cos(group.heading_rad);
      const s = Math.sin(group.heading_rad);
      for (const offset of group.row_offsets_m) {
        const x0 = ox - s * offset;
        const y0 = oy + c * offset;
        const [px0, py0] = this.toPx(vp, x0, y0);
        const [px1, py1] = this.toPx(vp, x0 + c * group.length_m, y0 + s * group.length_m);
        ctx.beginPath();
        ctx.moveTo(px0, py0);
        ctx.lineTo(px1, py1);
        ctx.stroke();
      }
    }
  }

  private drawPlots(ctx: CanvasRenderingContext2D, vp: Viewport, store: SessionStore): void {
    if (!store.scenario) return;
    for (const plot of store.scenario.plots) {
      ctx.beginPath();
      plot.polygon_m.forEach(([x, y], i) => {
        const [px, py] = this.toPx(vp, x, y);
        if (i === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.closePath();
      ctx.fillStyle = store.sprayedPlots.has(plot.name) ? COLORS.plotSprayed : COLORS.plot;
      ctx.fill();
      ctx.strokeStyle = COLORS.row;
      ctx.lineWidth = 1;
      ctx.stroke();
    }
  }

  private drawTrail(ctx: CanvasRenderingContext2D, vp: Viewport, store: SessionStore): void {
    ctx.lineWidth = Math.max(1, (store.scenario?.wheel_width_m ?? 0.36) * vp.scale * 0.5);
    for (const side of ["left", "right"] as const) {
      let prev: [number, number] | null = null;
      for (const point of store.trail) {
        const cur = this.toPx(vp, point[side][0], point[side][1]);
        if (prev) {
          ctx.strokeStyle = point.spraying ? COLORS.spray : COLORS.trail;
          ctx.beginPath();
          ctx.moveTo(prev[0], prev[1]);
          ctx.lineTo(cur[0], cur[1]);
          ctx.stroke();
        }
        prev = cur;
      }
    }
  }

  private drawRobot(ctx: CanvasRenderingContext2D, vp: Viewport, store: SessionStore): void {
    const pose = store.latest?.pose;
    const meta = store.scenario;
    if (!pose || !meta) return;
    const [x, y, theta] = pose;
    const half = meta.track_width_m / 2;
    const body = 1.2; // drawn chassis length, meters
    ctx.save();
    const [px, py] = this.toPx(vp, x, y);
    ctx.translate(px, py);
    ctx.rotate(-theta);
    ctx.strokeStyle = COLORS.robot;
    ctx.lineWidth = 2;
    ctx.strokeRect(-body * vp.scale, -half * vp.scale, body * vp.scale * 1.2, 2 * half * vp.scale);
    // driven wheels at the front axle
    ctx.fillStyle = COLORS.wheel;
    const ww = (meta.wheel_width_m * vp.scale) / 2;
    for (const side of [-1, 1]) {
      ctx.fillRect(-0.15 * vp.scale, side * half * vp.scale - ww / 2, 0.3 * vp.scale, ww);
    }
    // heading arrow
    ctx.beginPath();
    ctx.moveTo(0.25 * vp.scale, 0);
    ctx.lineTo(0.05 * vp.scale, -0.1 * vp.scale);
    ctx.lineTo(0.05 * vp.scale, 0.1 * vp.scale);
    ctx.closePath();
    ctx.fillStyle = COLORS.robot;
    ctx.fill();
    // spray footprint behind the axle while any section is open
    if (store.latest?.relays.some((r) => r !== 0)) {
      ctx.fillStyle = COLORS.spray;
      ctx.fillRect(-0.9 * vp.scale, -half * vp.scale, 0.5 * vp.scale, 2 * half * vp.scale);
    }
    ctx.restore();
  }

  private drawEvents(ctx: CanvasRenderingContext2D, vp: Viewport, events: EventMessage[]): void {
    for (const ev of events) {
      if (ev.ev !== "violation" && ev.ev !== "stall" && ev.ev !== "failsafe") continue;
      const color = ev.ev === "violation" ? COLORS.violation
        : ev.ev === "stall" ? COLORS.stall : COLORS.failsafe;
      const x = typeof ev.x === "number" ? ev.x : null;
      const y = typeof ev.y === "number" ? ev.y : null;
      if (x === null || y === null) continue;
      const [px, py] = this.toPx(vp, x, y);
      ctx.strokeStyle = color;
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(px, py, 6, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
}
