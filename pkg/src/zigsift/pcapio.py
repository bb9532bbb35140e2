"""Classic pcap file reading and writing for IEEE 802.15.4 captures.

Only the original (microsecond-timestamp) pcap format is handled, in either
byte order. Link types 195 (802.15.4 with trailing FCS) and 230 (without)
are accepted; everything else is refused up front.
"""

import struct
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import TruncatedFile, UnsupportedLinkType

PCAP_MAGIC = 0xA1B2C3D4
PCAP_MAGIC_SWAPPED = 0xD4C3B2A1

# magic, version major/minor, thiszone, sigfigs, snaplen, network
GLOBAL_HEADER_FMT = "IHHiIII"
GLOBAL_HEADER_LEN = struct.calcsize("<" + GLOBAL_HEADER_FMT)

# ts_sec, ts_usec, incl_len, orig_len
RECORD_HEADER_FMT = "IIII"
RECORD_HEADER_LEN = struct.calcsize("<" + RECORD_HEADER_FMT)

LINKTYPE_IEEE802_15_4_WITHFCS = 195
LINKTYPE_IEEE802_15_4_NOFCS = 230
SUPPORTED_LINK_TYPES = (LINKTYPE_IEEE802_15_4_WITHFCS, LINKTYPE_IEEE802_15_4_NOFCS)

MAX_FRAME_LEN = 127  # 802.15.4 PHY ceiling, FCS included


@dataclass(slots=True)
class RawFrame:
    """One captured frame, exactly as stored in the file."""

    index: int
    ts_sec: int
    ts_usec: int
    data: bytes
    link_type: int

    @property
    def timestamp(self) -> float:
        return self.ts_sec + self.ts_usec / 1_000_000.0


def _header_structs(magic_bytes: bytes) -> tuple[struct.Struct, struct.Struct]:
    magic_le = struct.unpack("<I", magic_bytes)[0]
    if magic_le == PCAP_MAGIC:
        endian = "<"
    elif magic_le == PCAP_MAGIC_SWAPPED:
        endian = ">"
    else:
        raise TruncatedFile(f"not a pcap file (magic 0x{magic_le:08x})")
    return (struct.Struct(endian + GLOBAL_HEADER_FMT),
            struct.Struct(endian + RECORD_HEADER_FMT))


def iter_capture(path: str) -> Iterator[RawFrame]:
    """Yield frames from a pcap file in file order.

    Raises UnsupportedLinkType for non-802.15.4 captures and TruncatedFile
    when the file stops mid-header or mid-record.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < GLOBAL_HEADER_LEN:
        raise TruncatedFile(f"file too short for pcap header: {len(blob)} bytes")
    ghdr, rhdr = _header_structs(blob[:4])
    _, _, _, _, _, _, network = ghdr.unpack_from(blob, 0)
    if network not in SUPPORTED_LINK_TYPES:
        raise UnsupportedLinkType(network)

    offset = GLOBAL_HEADER_LEN
    index = 0
    total = len(blob)
    while offset < total:
        if offset + RECORD_HEADER_LEN > total:
            raise TruncatedFile(f"record header truncated at byte {offset}")
        ts_sec, ts_usec, incl_len, _orig_len = rhdr.unpack_from(blob, offset)
        offset += RECORD_HEADER_LEN
        if offset + incl_len > total:
            raise TruncatedFile(f"record {index} truncated "
                                f"(want {incl_len} bytes at {offset})")
        yield RawFrame(index, ts_sec, ts_usec, blob[offset:offset + incl_len], network)
        offset += incl_len
        index += 1


def read_capture(path: str) -> list[RawFrame]:
    """Read a whole capture into memory. Empty captures give an empty list."""
    return list(iter_capture(path))


def write_capture(frames: Iterable[RawFrame], path: str,
                  link_type: int | None = None, snaplen: int = 256) -> int:
    """Write frames to a classic little-endian pcap file.

    Frames must already be in timestamp order. Returns the frame count.
    """
    frames = list(frames)
    if link_type is None:
        link_type = frames[0].link_type if frames else LINKTYPE_IEEE802_15_4_NOFCS
    if link_type not in SUPPORTED_LINK_TYPES:
        raise UnsupportedLinkType(link_type)

    ghdr = struct.Struct("<" + GLOBAL_HEADER_FMT)
    rhdr = struct.Struct("<" + RECORD_HEADER_FMT)
    last = (-1, -1)
    with open(path, "wb") as fh:
        fh.write(ghdr.pack(PCAP_MAGIC, 2, 4, 0, 0, snaplen, link_type))
        for frame in frames:
            stamp = (frame.ts_sec, frame.ts_usec)
            if stamp < last:
                raise ValueError(f"frames out of order at index {frame.index}")
            last = stamp
            if len(frame.data) > MAX_FRAME_LEN:
                raise ValueError(f"frame {frame.index} exceeds the 127-byte "
                                 f"802.15.4 limit ({len(frame.data)} bytes)")
            fh.write(rhdr.pack(frame.ts_sec, frame.ts_usec,
                               len(frame.data), len(frame.data)))
            fh.write(frame.data)
    return len(frames)
