// Console wiring: one WebSocket, one uplink sender, a render loop decoupled
// from message ingest via the session store's latest-snapshot pattern.

import { TelemetryCharts } from "./charts.js";
import { FieldView } from "./field.js";
import { Joystick } from "./joystick.js";
import { attachKeyboard } from "./keyboard.js";
import { parseServerMessage, takeoverMessage } from "./protocol.js";
import { SessionStore } from "./state.js";
import { Uplink, UplinkPort } from "./uplink.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function defaultUri(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("server") ?? "ws://127.0.0.1:8765";
}

class SocketPort implements UplinkPort {
  socket: WebSocket | null = null;

  get ready(): boolean {
    return this.socket !== null && this.socket.readyState === WebSocket.OPEN;
  }

  send(data: string): void {
    this.socket?.send(data);
  }
}

function main(): void {
  const store = new SessionStore();
  const port = new SocketPort();
  const uplink = new Uplink(port);
  const field = new FieldView(el<HTMLCanvasElement>("field"));
  const charts = new TelemetryCharts(el<HTMLCanvasElement>("charts"));
  const banner = el<HTMLDivElement>("banner");
  const eventFeed = el<HTMLUListElement>("events");
  const switchBox = el<HTMLDivElement>("switches");

  const joystick = new Joystick(el("pad"), el("knob"),
    (throttle, steering) => uplink.setSticks(throttle, steering));

  const switchButtons: HTMLButtonElement[] = [];
  for (let i = 0; i < 4; i += 1) {
    const button = document.createElement("button");
    button.textContent = `boom ${i + 1}`;
    button.addEventListener("click", () => {
      uplink.toggleSwitch(i);
      paintSwitches();
    });
    switchBox.appendChild(button);
    switchButtons.push(button);
  }
  const paintSwitches = () => {
    uplink.switches.forEach((on, i) => {
      switchButtons[i].classList.toggle("on", on);
    });
  };
  attachKeyboard(joystick, uplink, paintSwitches);
  el<HTMLButtonElement>("takeover").addEventListener("click", () => {
    if (port.ready) port.send(takeoverMessage());
  });
  el<HTMLInputElement>("follow").addEventListener("change", (e) => {
    field.setFollow((e.target as HTMLInputElement).checked);
  });

  const uri = defaultUri();
  el<HTMLSpanElement>("server-uri").textContent = uri;
  const socket = new WebSocket(uri);
  port.socket = socket;
  socket.addEventListener("message", (event) => {
    const msg = parseServerMessage(String(event.data));
    if (msg) store.ingest(msg, performance.now());
  });
  socket.addEventListener("open", () => uplink.start());
  socket.addEventListener("close", () => {
    uplink.stop();
    store.markClosed();
  });
  socket.addEventListener("error", () => store.markClosed());

  let renderedEvents = 0;
  const paintEvents = () => {
    while (renderedEvents < store.events.length) {
      const ev = store.events[renderedEvents];
      renderedEvents += 1;
      const item = document.createElement("li");
      item.className = `ev-${ev.ev}`;
      item.textContent = `${(ev.t_ms / 1000).toFixed(2)}s ${ev.ev} ` +
        Object.entries(ev)
          .filter(([k]) => !["type", "k", "t_ms", "ev"].includes(k))
          .map(([k, v]) => `${k}=${typeof v === "number" ? v.toFixed(2) : v}`)
          .join(" ");
      eventFeed.prepend(item);
      while (eventFeed.children.length > 40) {
        eventFeed.removeChild(eventFeed.lastChild as Node);
      }
    }
  };

  const paintBanner = () => {
    const state = store.connection(performance.now());
    banner.dataset.state = state;
    const role = store.role ?? "-";
    const link = store.latest?.linkOk ? "link ok" : "FAILSAFE";
    switch (state) {
      case "connecting":
        banner.textContent = "connecting...";
        break;
      case "connected":
        banner.textContent = `${store.scenario?.name ?? ""} | ${role} | ${link}`;
        break;
      case "stale":
        banner.textContent = "STALE LINK: no telemetry for 1 s (controls still armed)";
        break;
      case "closed":
        banner.textContent = store.byeReason
          ? `session over: ${store.byeReason}`
          : "disconnected";
        break;
    }
  };

  const frame = () => {
    field.render(store);
    charts.render(store, performance.now());
    paintEvents();
    paintBanner();
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

main();
