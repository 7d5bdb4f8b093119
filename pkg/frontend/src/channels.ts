// RC channel mapping shared with the simulator: raw 11-bit values in
// [172, 1811], center 992, steering on channel 1 and throttle on channel 2
// (1-based), switch channels 5-8 driving the boom solenoids.

export const CH_MIN = 172;
export const CH_MID = 992;
export const CH_MAX = 1811;
export const N_CHANNELS = 16;

export const STEERING_INDEX = 0;
export const THROTTLE_INDEX = 1;
export const SWITCH_INDICES = [4, 5, 6, 7] as const;

export function clampUnit(v: number): number {
  return Math.min(1, Math.max(-1, v));
}

/** Map a normalized command in [-1, 1] to a raw channel value; the two
 * half-ranges have slightly different spans, matching the decoder. */
export function toRaw(v: number): number {
  const u = clampUnit(v);
  if (u >= 0) {
    return CH_MID + Math.round(u * (CH_MAX - CH_MID));
  }
  return CH_MID + Math.round(u * (CH_MID - CH_MIN));
}

/** Inverse of toRaw, handy for echoing state back into UI widgets. */
export function fromRaw(raw: number): number {
  const r = Math.min(CH_MAX, Math.max(CH_MIN, Math.round(raw)));
  return r >= CH_MID ? (r - CH_MID) / (CH_MAX - CH_MID) : (r - CH_MID) / (CH_MID - CH_MIN);
}

export function switchRaw(on: boolean): number {
  return on ? CH_MAX : CH_MIN;
}

/** Build the full 16-channel vector for one uplink message. */
export function sticksToChannels(
  throttle: number,
  steering: number,
  switches: readonly boolean[],
): number[] {
  const channels = new Array<number>(N_CHANNELS).fill(CH_MID);
  channels[STEERING_INDEX] = toRaw(steering);
  channels[THROTTLE_INDEX] = toRaw(throttle);
  SWITCH_INDICES.forEach((ch, i) => {
    channels[ch] = switchRaw(Boolean(switches[i]));
  });
  return channels;
}
