"""Bit-exact codec and link state for the RC control channel.

Frame layout (public CRSF convention):

    [sync 0xC8] [length] [type] [payload ...] [crc]

where length = len(payload) + 2 (it counts the type and crc bytes) and crc
is CRC-8/DVB-S2 (poly 0xD5, init 0x00) over type + payload. The RC frame
type 0x16 packs 16 channels of 11 bits each, little-endian, into a 22-byte
payload. Raw channel values live in [172, 1811] with 992 as center.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

SYNC = 0xC8
TYPE_RC_CHANNELS = 0x16
MAX_FRAME_LEN = 64          # sync + length + type + payload + crc, total bytes
N_CHANNELS = 16

CH_MIN = 172
CH_MID = 992
CH_MAX = 1811

DEFAULT_DEADZONE = 0.03
DEFAULT_FAILSAFE_MS = 500


class CrsfError(Exception):
    """Base for framing/codec errors."""


class TruncatedFrame(CrsfError):
    """More bytes are needed to complete the frame."""


class CrcMismatch(CrsfError):
    def __init__(self, offset: int):
        super().__init__(f"crc mismatch for frame candidate at offset {offset}")
        self.offset = offset


class OversizeFrame(CrsfError):
    def __init__(self, offset: int, length: int):
        super().__init__(f"invalid frame length {length} at offset {offset}")
        self.offset = offset
        self.length = length


def _crc8_table(poly: int = 0xD5) -> list[int]:
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = ((crc << 1) ^ poly) & 0xFF if crc & 0x80 else (crc << 1) & 0xFF
        table.append(crc)
    return table


_CRC8 = _crc8_table()


def crc8(data: bytes) -> int:
    """CRC-8/DVB-S2 over the given bytes."""
    crc = 0
    for b in data:
        crc = _CRC8[crc ^ b]
    return crc


@dataclass(frozen=True)
class CrsfFrame:
    frame_type: int
    payload: bytes

    @property
    def length(self) -> int:
        return len(self.payload) + 2

    @property
    def crc(self) -> int:
        return crc8(bytes([self.frame_type]) + self.payload)

    def to_bytes(self) -> bytes:
        if self.length + 2 > MAX_FRAME_LEN:
            raise ValueError(f"frame too large: {self.length + 2} bytes")
        return bytes([SYNC, self.length, self.frame_type]) + self.payload + bytes([self.crc])


def pack_channels(channels) -> bytes:
    """Pack 16 11-bit channel values little-endian into 22 bytes."""
    if len(channels) != N_CHANNELS:
        raise ValueError(f"expected {N_CHANNELS} channels, got {len(channels)}")
    acc = 0
    nbits = 0
    out = bytearray()
    for value in channels:
        acc |= (int(value) & 0x7FF) << nbits
        nbits += 11
        while nbits >= 8:
            out.append(acc & 0xFF)
            acc >>= 8
            nbits -= 8
    return bytes(out)


def unpack_channels(payload: bytes) -> tuple[int, ...]:
    if len(payload) != 22:
        raise ValueError(f"RC payload must be 22 bytes, got {len(payload)}")
    acc = 0
    nbits = 0
    values = []
    it = iter(payload)
    for b in it:
        acc |= b << nbits
        nbits += 8
        while nbits >= 11 and len(values) < N_CHANNELS:
            values.append(acc & 0x7FF)
            acc >>= 11
            nbits -= 11
    return tuple(values)


def encode_rc_channels(channels) -> bytes:
    """Build a full RC-channels frame from 16 raw values in [172, 1811]."""
    for i, value in enumerate(channels):
        if not CH_MIN <= value <= CH_MAX:
            raise ValueError(f"channel {i} value {value} outside [{CH_MIN}, {CH_MAX}]")
    return CrsfFrame(TYPE_RC_CHANNELS, pack_channels(channels)).to_bytes()


def parse_frame(data: bytes, start: int = 0) -> tuple[CrsfFrame, int]:
    """Parse the first frame found at or after `start`, skipping garbage.

    Returns (frame, next_offset). Raises TruncatedFrame when more bytes are
    needed, CrcMismatch / OversizeFrame when the candidate at the sync byte
    is invalid (the offset on the error lets callers resync past it).
    """
    i = data.find(SYNC, start) if isinstance(data, (bytes, bytearray)) else -1
    if i < 0:
        raise TruncatedFrame("no sync byte in buffer")
    if len(data) - i < 2:
        raise TruncatedFrame("sync found, length byte missing")
    length = data[i + 1]
    if length < 2 or length + 2 > MAX_FRAME_LEN:
        raise OversizeFrame(i, length)
    end = i + 2 + length
    if len(data) < end:
        raise TruncatedFrame("frame body incomplete")
    body = bytes(data[i + 2:end - 1])
    if crc8(body) != data[end - 1]:
        raise CrcMismatch(i)
    return CrsfFrame(body[0], body[1:]), end


@dataclass
class LinkStats:
    frames_ok: int = 0
    crc_errors: int = 0
    framing_errors: int = 0
    bytes_discarded: int = 0
    clamped_values: int = 0
    failsafes: int = 0


class CrsfDecoder:
    """Streaming frame extractor with resynchronization.

    Garbage before a valid frame never corrupts that frame's decode: on any
    bad candidate the scan resumes one byte past the offending sync byte.
    """

    def __init__(self):
        self.stats = LinkStats()
        self._buf = bytearray()

    def push(self, data: bytes) -> list[CrsfFrame]:
        self._buf.extend(data)
        frames = []
        pos = 0
        while True:
            try:
                frame, end = parse_frame(self._buf, pos)
            except TruncatedFrame:
                break
            except CrcMismatch as err:
                self.stats.crc_errors += 1
                pos = err.offset + 1
                continue
            except OversizeFrame as err:
                self.stats.framing_errors += 1
                pos = err.offset + 1
                continue
            self.stats.bytes_discarded += (end - 2 - frame.length) - pos
            frames.append(frame)
            self.stats.frames_ok += 1
            pos = end
        # Keep at most one partial frame worth of tail; everything before the
        # last possible sync is dead garbage.
        if pos:
            del self._buf[:pos]
        if len(self._buf) > 2 * MAX_FRAME_LEN:
            drop = len(self._buf) - 2 * MAX_FRAME_LEN
            self.stats.bytes_discarded += drop
            del self._buf[:drop]
        return frames


@dataclass(frozen=True)
class ChannelState:
    """Decoded RC link state: 16 raw channel values plus link health."""

    channels: tuple[int, ...] = (CH_MID,) * N_CHANNELS
    timestamp_ms: int = 0
    link_ok: bool = False

    def command(self, index: int, deadzone: float = DEFAULT_DEADZONE) -> float:
        """Normalized command for a zero-based channel index; 0 when the link is down."""
        if not self.link_ok:
            return 0.0
        return normalize_channel(self.channels[index], deadzone)

    def switch(self, index: int) -> bool:
        """Boolean switch reading; off when the link is down."""
        return self.link_ok and normalize_channel(self.channels[index], 0.0) > 0.5


def normalize_channel(raw: int, deadzone: float = DEFAULT_DEADZONE) -> float:
    """Map a raw channel value to [-1, 1] with deadzone snapping.

    172 -> -1, 992 -> 0, 1811 -> +1, linear per side of center. Values with
    |v| below the deadzone read 0; the remainder is rescaled so the output
    stays continuous and still reaches +/-1 at the extremes. Out-of-range
    raw values are clamped.
    """
    if not 0.0 <= deadzone < 0.5:
        raise ValueError(f"deadzone must be in [0, 0.5), got {deadzone}")
    raw = min(max(int(raw), CH_MIN), CH_MAX)
    if raw >= CH_MID:
        value = (raw - CH_MID) / (CH_MAX - CH_MID)
    else:
        value = (raw - CH_MID) / (CH_MID - CH_MIN)
    if deadzone > 0.0:
        if abs(value) < deadzone:
            return 0.0
        sign = 1.0 if value > 0.0 else -1.0
        value = sign * (abs(value) - deadzone) / (1.0 - deadzone)
    return value


def link_watchdog(state: ChannelState, now_ms: int,
                  failsafe_ms: int = DEFAULT_FAILSAFE_MS) -> ChannelState:
    """Force link_ok=false once the last frame is older than the failsafe window."""
    if state.link_ok and now_ms - state.timestamp_ms > failsafe_ms:
        return replace(state, link_ok=False)
    return state


@dataclass(frozen=True)
class ChannelMap:
    """Which channel drives what; indices are 1-based like transmitter menus."""

    steering: int = 1
    throttle: int = 2
    switches: tuple[int, ...] = (5, 6, 7, 8)

    def steering_cmd(self, state: ChannelState, deadzone: float = DEFAULT_DEADZONE) -> float:
        return state.command(self.steering - 1, deadzone)

    def throttle_cmd(self, state: ChannelState, deadzone: float = DEFAULT_DEADZONE) -> float:
        return state.command(self.throttle - 1, deadzone)

    def switch_states(self, state: ChannelState) -> tuple[bool, ...]:
        return tuple(state.switch(ch - 1) for ch in self.switches)


class CrsfLink:
    """Single-writer link-state holder: feed bytes in, snapshot ChannelState out.

    The watchdog timestamp only advances on valid RC frames, so interleaved
    garbage cannot keep a dead link alive. Snapshots are immutable and safe
    to hand to other threads.
    """

    def __init__(self, failsafe_ms: int = DEFAULT_FAILSAFE_MS):
        self.failsafe_ms = failsafe_ms
        self.decoder = CrsfDecoder()
        self._state = ChannelState()

    @property
    def stats(self) -> LinkStats:
        return self.decoder.stats

    def ingest(self, data: bytes, now_ms: int) -> list[tuple[int, ...]]:
        """Feed raw bytes; returns the channel vectors of any RC frames decoded."""
        decoded = []
        for frame in self.decoder.push(data):
            if frame.frame_type != TYPE_RC_CHANNELS or len(frame.payload) != 22:
                continue
            raw = unpack_channels(frame.payload)
            clamped = tuple(min(max(v, CH_MIN), CH_MAX) for v in raw)
            self.decoder.stats.clamped_values += sum(1 for a, b in zip(raw, clamped) if a != b)
            self._state = ChannelState(clamped, now_ms, True)
            decoded.append(clamped)
        return decoded

    def snapshot(self, now_ms: int) -> ChannelState:
        state = link_watchdog(self._state, now_ms, self.failsafe_ms)
        if state is not self._state and not state.link_ok:
            self.decoder.stats.failsafes += 1
            self._state = state
        return state


def write_capture(path, records) -> None:
    """Write length-prefixed frames with millisecond timestamps.

    Each record is <u32 timestamp_ms><u16 length><length bytes>, little-endian.
    """
    with open(path, "wb") as fh:
        for t_ms, data in records:
            fh.write(struct.pack("<IH", int(t_ms), len(data)))
            fh.write(data)


def read_capture(path) -> list[tuple[int, bytes]]:
    records = []
    with open(path, "rb") as fh:
        while True:
            header = fh.read(6)
            if not header:
                break
            if len(header) < 6:
                raise CrsfError("truncated capture record header")
            t_ms, n = struct.unpack("<IH", header)
            data = fh.read(n)
            if len(data) < n:
                raise CrsfError("truncated capture record body")
            records.append((t_ms, data))
    return records
