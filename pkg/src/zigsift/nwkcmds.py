"""Recognition of Zigbee network-layer commands in encrypted traffic.

Post-commissioning Zigbee encrypts command payloads, so the command id byte
is unreadable. A handful of management commands are still recognizable from
their fixed (or arithmetically regular) payload sizes together with whether
the frame was broadcast; the table lives in a data file so it can be adjusted
without code changes.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import RuleParseError
from .frames import FrameRecord, NwkFrameType

DEFAULT_TABLE = Path(__file__).parent / "data" / "nwk_commands.csv"

ROUTE_REQUEST = "route_request"


@dataclass(frozen=True)
class NwkCommandShape:
    name: str
    command_id: int
    base_len: int
    repeat_unit: int
    max_repeats: int
    broadcast: bool
    router_evidence: bool

    def matches_len(self, length: int) -> bool:
        if self.repeat_unit == 0:
            return length == self.base_len
        if length < self.base_len:
            return False
        k, rem = divmod(length - self.base_len, self.repeat_unit)
        return rem == 0 and k <= self.max_repeats


def load_command_table(path: str | Path = DEFAULT_TABLE) -> list[NwkCommandShape]:
    shapes = []
    with open(path, newline="") as fh:
        rows = [(i + 1, line) for i, line in enumerate(fh)
                if line.strip() and not line.lstrip().startswith("#")]
    header, *body = rows
    reader = csv.DictReader([header[1]] + [line for _, line in body])
    for (lineno, _), row in zip(body, reader):
        try:
            shapes.append(NwkCommandShape(
                name=row["name"].strip(),
                command_id=int(row["command_id"], 0),
                base_len=int(row["base_len"]),
                repeat_unit=int(row["repeat_unit"]),
                max_repeats=int(row["max_repeats"]),
                broadcast=row["broadcast"].strip().lower() in ("yes", "true", "1"),
                router_evidence=row["router_evidence"].strip().lower()
                in ("yes", "true", "1"),
            ))
        except (KeyError, ValueError) as exc:
            raise RuleParseError(f"bad network-command row: {exc}", lineno)
    return shapes


def classify_nwk_command(frame: FrameRecord,
                         table: list[NwkCommandShape]) -> NwkCommandShape | None:
    """Name the network command a frame carries, when that is inferable.

    Unencrypted commands are matched on their id byte; encrypted ones on
    plaintext-equivalent length plus the broadcast flag. Ambiguous lengths
    yield None.
    """
    nwk = frame.nwk
    if nwk is None or nwk.frame_type != NwkFrameType.COMMAND:
        return None
    if not nwk.security_enabled:
        if nwk.command_id is None:
            return None
        for shape in table:
            if shape.command_id == nwk.command_id:
                return shape
        return None
    length = nwk.apl_payload_len
    if length is None:
        return None
    hits = [s for s in table
            if s.broadcast == nwk.is_broadcast and s.matches_len(length)]
    return hits[0] if len(hits) == 1 else None
