"""Parsing of captured 802.15.4 frames into analysis records.

Everything here works on encrypted traffic: no payload byte is ever
interpreted beyond the clear-text MAC and network headers (plus the security
auxiliary header, which is itself unencrypted). The one derived quantity the
rest of the pipeline leans on is the plaintext-equivalent application payload
length: for a secured network frame the ciphertext is as long as the
plaintext, so

    apl_payload_len = network payload length - auxiliary header - 32-bit MIC

For the common Zigbee configuration (network key, extended nonce) the
auxiliary header is 14 bytes and the integrity code 4, e.g. a 29-byte network
payload carries an 11-byte application frame.
"""

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterable

from .errors import MalformedMacHeader, NegativeLength
from .pcapio import LINKTYPE_IEEE802_15_4_WITHFCS, RawFrame
from .util import BROADCAST_FLOOR


class MacFrameType(IntEnum):
    BEACON = 0
    DATA = 1
    ACK = 2
    COMMAND = 3


class MacCommand(Enum):
    DATA_REQUEST = "data_request"
    OTHER = "other"


class NwkFrameType(IntEnum):
    DATA = 0
    COMMAND = 1


@dataclass(slots=True)
class NwkMeta:
    """Clear-text network-layer metadata of one frame."""

    frame_type: NwkFrameType
    src: int
    dst: int
    radius: int
    seq: int
    security_enabled: bool
    frame_counter: int | None = None
    ext_src: int | None = None
    has_source_route: bool = False
    aux_len: int = 0
    nwk_payload_len: int = 0
    # Plaintext-equivalent payload length; None when absent or invalid.
    # Populated for secured command frames too (used for length-keyed
    # command recognition), though it is only an *application* length for
    # data frames.
    apl_payload_len: int | None = None
    command_id: int | None = None

    @property
    def is_broadcast(self) -> bool:
        return self.dst >= BROADCAST_FLOOR


@dataclass(slots=True)
class FrameRecord:
    """One parsed frame; metadata only, payload content is never retained."""

    index: int
    timestamp: float
    mac_frame_type: MacFrameType
    mac_seq: int
    mac_command: MacCommand | None = None
    dst_pan: int | None = None
    src_pan: int | None = None
    mac_dst: int | None = None
    mac_src: int | None = None
    mac_dst_ext: int | None = None
    mac_src_ext: int | None = None
    nwk: NwkMeta | None = None
    frame_len: int = 0
    frame_hash: int = 0


@dataclass
class ParseStats:
    total: int = 0
    parsed: int = 0
    skipped: int = 0
    invalid_length: int = 0
    diagnostics: list[tuple[int, str]] = field(default_factory=list)

    MAX_DIAGNOSTICS = 50

    def note(self, index: int, message: str) -> None:
        if len(self.diagnostics) < self.MAX_DIAGNOSTICS:
            self.diagnostics.append((index, message))


def compute_apl_payload_len(nwk_payload_len: int, aux_len: int, *,
                            mic_len: int = 4, len_offset: int = 0) -> int:
    """Plaintext-equivalent application payload length of a secured frame.

    Raises NegativeLength when the overheads exceed the payload (corrupt or
    foreign traffic), or when a configured length offset drives the result
    below zero.
    """
    value = nwk_payload_len - aux_len - mic_len + len_offset
    if value < 0:
        raise NegativeLength(
            f"application length {value} < 0 "
            f"(payload {nwk_payload_len}, aux {aux_len}, mic {mic_len}, "
            f"offset {len_offset:+d})")
    return value


def _parse_nwk(data: bytes, o: int, n: int, len_offset: int) -> NwkMeta | None:
    fcf = data[o] | data[o + 1] << 8
    ftype = fcf & 0x3
    if ftype > 1:
        return None
    if (fcf >> 2) & 0xF not in (1, 2, 3):  # not a plausible protocol version
        return None
    if n - o < 8:
        return None
    dst = data[o + 2] | data[o + 3] << 8
    src = data[o + 4] | data[o + 5] << 8
    radius = data[o + 6]
    seq = data[o + 7]
    p = o + 8
    ext_src = None
    if fcf & 0x0800:  # destination IEEE address
        p += 8
    if fcf & 0x1000:  # source IEEE address
        if p + 8 > n:
            return None
        ext_src = int.from_bytes(data[p:p + 8], "little")
        p += 8
    if fcf & 0x0100:  # multicast control
        p += 1
    has_source_route = False
    if fcf & 0x0400:
        if p + 2 > n:
            return None
        relay_count = data[p]
        p += 2 + 2 * relay_count
        has_source_route = ftype == NwkFrameType.DATA
    if p > n:
        return None

    secured = bool(fcf & 0x0200)
    nwk_payload_len = n - p
    frame_counter = None
    aux_len = 0
    apl = None
    command_id = None
    if secured:
        if nwk_payload_len >= 5:
            secctl = data[p]
            frame_counter = int.from_bytes(data[p + 1:p + 5], "little")
            aux_len = 5
            if secctl & 0x20:  # extended nonce: 64-bit source in the aux header
                if p + 13 > n:
                    return None
                aux_src = int.from_bytes(data[p + 5:p + 13], "little")
                aux_len += 8
                if ext_src is None:
                    ext_src = aux_src
            if (secctl >> 3) & 0x3 == 1:  # network key: key sequence byte
                aux_len += 1
            try:
                apl = compute_apl_payload_len(nwk_payload_len, aux_len,
                                              len_offset=len_offset)
            except NegativeLength:
                apl = None
    elif ftype == NwkFrameType.COMMAND and nwk_payload_len >= 1:
        command_id = data[p]

    return NwkMeta(NwkFrameType(ftype), src, dst, radius, seq, secured,
                   frame_counter, ext_src, has_source_route, aux_len,
                   nwk_payload_len, apl, command_id)


def parse_frame(raw: RawFrame, len_offset: int = 0) -> FrameRecord:
    """Parse one frame. Raises MalformedMacHeader when the bytes are shorter
    than the addressing the frame control field declares."""
    data = raw.data
    if raw.link_type == LINKTYPE_IEEE802_15_4_WITHFCS:
        if len(data) < 2:
            raise MalformedMacHeader(f"frame {raw.index}: no room for FCS")
        data = data[:-2]
    n = len(data)
    if n < 3:
        raise MalformedMacHeader(f"frame {raw.index}: {n} bytes")

    fcf = data[0] | data[1] << 8
    ftype = fcf & 0x7
    if ftype > 3:
        raise MalformedMacHeader(f"frame {raw.index}: reserved frame type {ftype}")
    dmode = (fcf >> 10) & 0x3
    smode = (fcf >> 14) & 0x3
    if dmode == 1 or smode == 1:
        raise MalformedMacHeader(f"frame {raw.index}: reserved addressing mode")

    rec = FrameRecord(raw.index, raw.timestamp, MacFrameType(ftype), data[2],
                      frame_len=n, frame_hash=hash(data))
    o = 3
    if dmode:
        if o + 2 > n:
            raise MalformedMacHeader(f"frame {raw.index}: truncated dst PAN")
        rec.dst_pan = data[o] | data[o + 1] << 8
        o += 2
        width = 2 if dmode == 2 else 8
        if o + width > n:
            raise MalformedMacHeader(f"frame {raw.index}: truncated dst address")
        if dmode == 2:
            rec.mac_dst = data[o] | data[o + 1] << 8
        else:
            rec.mac_dst_ext = int.from_bytes(data[o:o + 8], "little")
        o += width
    if smode:
        if fcf & 0x40 and dmode:  # PAN id compression
            rec.src_pan = rec.dst_pan
        else:
            if o + 2 > n:
                raise MalformedMacHeader(f"frame {raw.index}: truncated src PAN")
            rec.src_pan = data[o] | data[o + 1] << 8
            o += 2
        width = 2 if smode == 2 else 8
        if o + width > n:
            raise MalformedMacHeader(f"frame {raw.index}: truncated src address")
        if smode == 2:
            rec.mac_src = data[o] | data[o + 1] << 8
        else:
            rec.mac_src_ext = int.from_bytes(data[o:o + 8], "little")
        o += width

    mac_secured = bool(fcf & 0x8)
    if ftype == MacFrameType.COMMAND and not mac_secured and o < n:
        rec.mac_command = (MacCommand.DATA_REQUEST if data[o] == 0x04
                           else MacCommand.OTHER)
    elif ftype == MacFrameType.DATA and not mac_secured and n - o >= 8:
        rec.nwk = _parse_nwk(data, o, n, len_offset)
    return rec


def parse_capture(source: str | Iterable[RawFrame],
                  len_offset: int = 0) -> tuple[list[FrameRecord], ParseStats]:
    """Parse a capture (path or RawFrame iterable) into FrameRecords.

    Malformed frames are skipped with a diagnostic, never fatal; the stats
    always reconcile (total = parsed + skipped).
    """
    if isinstance(source, str):
        from .pcapio import iter_capture
        source = iter_capture(source)
    records: list[FrameRecord] = []
    stats = ParseStats()
    for raw in source:
        stats.total += 1
        try:
            rec = parse_frame(raw, len_offset)
        except MalformedMacHeader as exc:
            stats.skipped += 1
            stats.note(raw.index, str(exc))
            continue
        if (rec.nwk is not None and rec.nwk.security_enabled
                and rec.nwk.apl_payload_len is None):
            stats.invalid_length += 1
        records.append(rec)
        stats.parsed += 1
    return records, stats
