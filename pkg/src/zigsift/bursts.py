"""Duplicate removal and burst segmentation.

A "burst" is the unit every higher layer reasons about: the frames a single
node exchanged with the rest of the network, split wherever traffic pauses
for at least `burst_gap` seconds.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .frames import FrameRecord, MacFrameType, NwkFrameType

DEFAULT_BURST_GAP = 1.0
MAC_DUP_WINDOW = 1.0


class Direction(Enum):
    TO_NODE = "to"
    FROM_NODE = "from"


def dedup(frames: Iterable[FrameRecord]) -> list[FrameRecord]:
    """Drop MAC retransmissions and network-layer duplicates, keeping order.

    A MAC retransmission repeats source, sequence number and bytes within a
    one-second window of the kept original. Mesh forwarding shows up as the
    same network source + frame counter arriving again on a different hop.
    Acknowledgments carry no source address, so they are never candidates.
    The operation is idempotent.
    """
    out: list[FrameRecord] = []
    last_kept: dict[tuple, float] = {}
    seen_nwk: set[tuple[int, int]] = set()
    for f in frames:
        src = f.mac_src if f.mac_src is not None else f.mac_src_ext
        if src is not None and f.mac_frame_type != MacFrameType.ACK:
            key = (src, f.mac_seq, f.frame_hash, f.frame_len)
            kept_at = last_kept.get(key)
            if kept_at is not None and f.timestamp - kept_at <= MAC_DUP_WINDOW:
                continue
            nwk = f.nwk
            if nwk is not None and nwk.frame_counter is not None:
                nkey = (nwk.src, nwk.frame_counter)
                if nkey in seen_nwk:
                    continue
                seen_nwk.add(nkey)
            last_kept[key] = f.timestamp
        out.append(f)
    return out


def filter_apl(frames: Iterable[FrameRecord], node: int,
               node_map=None) -> list[FrameRecord]:
    """Keep the encrypted application traffic touching one node.

    Only secured network data frames with a usable payload length survive;
    acknowledgments, polls and network commands are dropped. Broadcast data
    frames count for their source node only. The node map parameter exists
    for pipeline symmetry; roles are not needed to filter.
    """
    kept = []
    for f in frames:
        nwk = f.nwk
        if (nwk is None or nwk.frame_type != NwkFrameType.DATA
                or not nwk.security_enabled or nwk.apl_payload_len is None):
            continue
        if nwk.src == node or (nwk.dst == node and not nwk.is_broadcast):
            kept.append(f)
    return kept


def direction_of(frame: FrameRecord, node: int) -> Direction:
    return (Direction.FROM_NODE if frame.nwk is not None and frame.nwk.src == node
            else Direction.TO_NODE)


@dataclass
class Burst:
    """A gap-delimited run of one node's application frames."""

    node: int
    frames: list[FrameRecord]
    directions: list[Direction]

    @property
    def start(self) -> float:
        return self.frames[0].timestamp

    @property
    def end(self) -> float:
        return self.frames[-1].timestamp

    def __len__(self) -> int:
        return len(self.frames)

    def pattern(self) -> tuple[tuple[Direction, int], ...]:
        """The burst's shape: (direction, application length) per frame."""
        return tuple((d, f.nwk.apl_payload_len)
                     for d, f in zip(self.directions, self.frames))

    def lengths(self) -> list[int]:
        return [f.nwk.apl_payload_len for f in self.frames]

    def indices(self) -> list[int]:
        return [f.index for f in self.frames]


def segment_bursts(frames: Sequence[FrameRecord], node: int,
                   burst_gap: float = DEFAULT_BURST_GAP) -> list[Burst]:
    """Partition one node's time-ordered frames into bursts.

    Consecutive frames less than `burst_gap` apart share a burst; every frame
    lands in exactly one burst.
    """
    bursts: list[Burst] = []
    current: list[FrameRecord] = []
    for f in frames:
        if current and f.timestamp - current[-1].timestamp >= burst_gap:
            bursts.append(Burst(node, current,
                                [direction_of(x, node) for x in current]))
            current = [f]
        else:
            current.append(f)
    if current:
        bursts.append(Burst(node, current,
                            [direction_of(x, node) for x in current]))
    return bursts
