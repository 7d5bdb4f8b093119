// Keyboard fallback: arrows or WASD map to the stick axes, keys 1-4 toggle
// the boom-section switches, space releases everything.

export interface KeyboardTarget {
  set(steering: number, throttle: number): void;
}

export interface SwitchTarget {
  toggleSwitch(index: number): boolean;
  allSwitches(on: boolean): void;
}

const AXIS_KEYS: Record<string, [number, number]> = {
  ArrowUp: [0, 1],
  ArrowDown: [0, -1],
  ArrowLeft: [-1, 0],
  ArrowRight: [1, 0],
  w: [0, 1],
  s: [0, -1],
  a: [-1, 0],
  d: [1, 0],
};

export function attachKeyboard(
  stick: KeyboardTarget,
  switches: SwitchTarget,
  onSwitchChange: () => void,
  target: Pick<Document, "addEventListener"> = document,
): void {
  const held = new Set<string>();

  const apply = () => {
    let sx = 0;
    let sy = 0;
    for (const key of held) {
      const axis = AXIS_KEYS[key];
      if (axis) {
        sx += axis[0];
        sy += axis[1];
      }
    }
    stick.set(Math.min(1, Math.max(-1, sx)), Math.min(1, Math.max(-1, sy)));
  };

  target.addEventListener("keydown", (e: Event) => {
    const key = (e as KeyboardEvent).key;
    if (key in AXIS_KEYS) {
      held.add(key);
      apply();
      (e as KeyboardEvent).preventDefault();
    } else if (key >= "1" && key <= "4") {
      switches.toggleSwitch(Number(key) - 1);
      onSwitchChange();
    } else if (key === " ") {
      held.clear();
      switches.allSwitches(false);
      apply();
      onSwitchChange();
      (e as KeyboardEvent).preventDefault();
    }
  });
  target.addEventListener("keyup", (e: Event) => {
    const key = (e as KeyboardEvent).key;
    if (held.delete(key)) apply();
  });
}
