// Virtual joystick: a circular pad driven by pointer events. Vertical is
// throttle (up = forward), horizontal is steering. Snaps back to center on
// release.

export class Joystick {
  private active = false;
  private pointerId: number | null = null;
  x = 0; // steering, [-1, 1]
  y = 0; // throttle, [-1, 1]

  constructor(
    private readonly pad: HTMLElement,
    private readonly knob: HTMLElement,
    private readonly onChange: (throttle: number, steering: number) => void,
  ) {
    pad.addEventListener("pointerdown", (e) => this.grab(e));
    pad.addEventListener("pointermove", (e) => this.drag(e));
    pad.addEventListener("pointerup", (e) => this.release(e));
    pad.addEventListener("pointercancel", (e) => this.release(e));
    this.render();
  }

  private grab(e: PointerEvent): void {
    this.active = true;
    this.pointerId = e.pointerId;
    this.pad.setPointerCapture(e.pointerId);
    this.drag(e);
  }

  private drag(e: PointerEvent): void {
    if (!this.active || e.pointerId !== this.pointerId) return;
    const rect = this.pad.getBoundingClientRect();
    const cx = rect.left + rect.width / 2;
    const cy = rect.top + rect.height / 2;
    const span = rect.width / 2;
    let sx = (e.clientX - cx) / span;
    let sy = (cy - e.clientY) / span;
    const mag = Math.hypot(sx, sy);
    if (mag > 1) {
      sx /= mag;
      sy /= mag;
    }
    this.set(sx, sy);
  }

  private release(e: PointerEvent): void {
    if (e.pointerId !== this.pointerId) return;
    this.active = false;
    this.pointerId = null;
    this.set(0, 0);
  }

  /** Programmatic set, also used by the keyboard fallback. */
  set(steering: number, throttle: number): void {
    this.x = steering;
    this.y = throttle;
    this.onChange(this.y, this.x);
    this.render();
  }

  private render(): void {
    const span = this.pad.clientWidth / 2;
    this.knob.style.transform =
      `translate(${this.x * span * 0.75}px, ${-this.y * span * 0.75}px)`;
  }
}
