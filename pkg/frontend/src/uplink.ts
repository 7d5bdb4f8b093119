// The single write path to the simulator: a fixed-cadence sender that
// holds-and-repeats the last stick values, keeping the server-side link
// watchdog fed even when the operator is idle.

import { sticksToChannels } from "./channels.js";
import { sticksMessage } from "./protocol.js";

export const DEFAULT_UPLINK_HZ = 25;

export interface UplinkPort {
  send(data: string): void;
  readonly ready: boolean;
}

export class Uplink {
  throttle = 0;
  steering = 0;
  switches: boolean[] = [false, false, false, false];
  sent = 0;
  dropped = 0;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly port: UplinkPort,
    readonly hz: number = DEFAULT_UPLINK_HZ,
  ) {}

  setSticks(throttle: number, steering: number): void {
    this.throttle = throttle;
    this.steering = steering;
  }

  setSwitch(index: number, on: boolean): void {
    this.switches[index] = on;
  }

  toggleSwitch(index: number): boolean {
    this.switches[index] = !this.switches[index];
    return this.switches[index];
  }

  allSwitches(on: boolean): void {
    this.switches = this.switches.map(() => on);
  }

  channels(): number[] {
    return sticksToChannels(this.throttle, this.steering, this.switches);
  }

  /** Send one frame immediately (also used by the cadence timer). */
  pump(): void {
    if (!this.port.ready) {
      this.dropped += 1;
      return;
    }
    this.port.send(sticksMessage(this.channels()));
    this.sent += 1;
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => this.pump(), 1000 / this.hz);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
