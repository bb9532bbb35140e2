"""Inferring device roles (coordinator / router / end device) from traffic.

Roles fall out of behavior that encryption cannot hide:

  * logical address 0x0000 is the coordinator;
  * a MAC Data Request marks its sender as a sleepy end device and its
    (non-coordinator) destination as the router parenting it;
  * senders of router-only network commands (link status, rejoin response,
    network report) are routers;
  * the destination of a source-routed frame is a router, unless that node
    is known to poll with Data Requests.

Evidence is recorded per node; when rules disagree the higher-priority rule
wins and the conflict is kept for reporting.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .frames import FrameRecord, MacCommand, NwkFrameType
from .nwkcmds import NwkCommandShape, classify_nwk_command, load_command_table
from .util import format_addr16, format_addr64, is_broadcast, parse_addr16, parse_addr64

logger = logging.getLogger(__name__)


class LogicalType(Enum):
    ZC = "ZC"
    ZR = "ZR"
    ZED = "ZED"
    UNKNOWN = "?"


RULE_ZC_ADDR = "zc-addr"
RULE_DATA_REQUEST_SRC = "data-request-src"
RULE_DATA_REQUEST_DST = "data-request-dst"
RULE_NWK_COMMAND_SRC = "nwk-command-src"
RULE_SOURCE_ROUTE_DST = "source-route-dst"

# smaller rank wins
_RULE_RANK = {
    RULE_ZC_ADDR: 0,
    RULE_DATA_REQUEST_SRC: 1,
    RULE_DATA_REQUEST_DST: 2,
    RULE_NWK_COMMAND_SRC: 3,
    RULE_SOURCE_ROUTE_DST: 4,
}
_RULE_TYPE = {
    RULE_ZC_ADDR: LogicalType.ZC,
    RULE_DATA_REQUEST_SRC: LogicalType.ZED,
    RULE_DATA_REQUEST_DST: LogicalType.ZR,
    RULE_NWK_COMMAND_SRC: LogicalType.ZR,
    RULE_SOURCE_ROUTE_DST: LogicalType.ZR,
}


@dataclass
class NodeEntry:
    logical_addr: int
    extended_addr: int | None = None
    ltype: LogicalType = LogicalType.UNKNOWN
    evidence: list[tuple[str, int]] = field(default_factory=list)  # (rule, frame)

    def rules(self) -> list[str]:
        seen: list[str] = []
        for rule, _ in self.evidence:
            if rule not in seen:
                seen.append(rule)
        return seen


class NodeMap:
    """Mutable directory of observed nodes, keyed by 16-bit logical address."""

    def __init__(self) -> None:
        self.entries: dict[int, NodeEntry] = {}
        self.conflicts: list[str] = []

    def __contains__(self, addr: int) -> bool:
        return addr in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def observe(self, addr: int | None) -> NodeEntry | None:
        if addr is None or is_broadcast(addr):
            return None
        entry = self.entries.get(addr)
        if entry is None:
            entry = NodeEntry(addr)
            self.entries[addr] = entry
            if addr == 0x0000:
                entry.ltype = LogicalType.ZC
                entry.evidence.append((RULE_ZC_ADDR, -1))
        return entry

    def add_evidence(self, addr: int | None, rule: str, frame_index: int) -> None:
        entry = self.observe(addr)
        if entry is None:
            return
        entry.evidence.append((rule, frame_index))

    def bind_extended(self, addr: int | None, extended: int | None,
                      frame_index: int) -> None:
        entry = self.observe(addr)
        if entry is None or extended is None:
            return
        if entry.extended_addr is not None and entry.extended_addr != extended:
            msg = (f"address conflict at frame {frame_index}: "
                   f"{format_addr16(addr)} was {format_addr64(entry.extended_addr)}, "
                   f"now {format_addr64(extended)} (keeping the newer binding)")
            self.conflicts.append(msg)
            logger.warning(msg)
        entry.extended_addr = extended

    def resolve(self) -> None:
        """Settle each node's type from its best-ranked evidence."""
        for entry in self.entries.values():
            if not entry.evidence:
                continue
            best = min(entry.evidence, key=lambda ev: _RULE_RANK[ev[0]])
            decided = _RULE_TYPE[best[0]]
            others = {_RULE_TYPE[r] for r, _ in entry.evidence}
            if len(others - {decided}) > 0:
                self.conflicts.append(
                    f"{format_addr16(entry.logical_addr)}: rules disagree "
                    f"({', '.join(sorted(t.value for t in others))}); "
                    f"keeping {decided.value} from {best[0]}")
            entry.ltype = decided

    def ltype_of(self, addr: int | None) -> LogicalType:
        if addr is None:
            return LogicalType.UNKNOWN
        entry = self.entries.get(addr)
        return entry.ltype if entry else LogicalType.UNKNOWN

    def extended_of(self, addr: int) -> int | None:
        entry = self.entries.get(addr)
        return entry.extended_addr if entry else None

    def nodes(self) -> list[NodeEntry]:
        return [self.entries[a] for a in sorted(self.entries)]


def map_network(frames: Iterable[FrameRecord],
                command_table: list[NwkCommandShape] | None = None) -> NodeMap:
    """Build a NodeMap from parsed frames (single deterministic pass)."""
    if command_table is None:
        command_table = load_command_table()
    nmap = NodeMap()
    data_request_senders: set[int] = set()
    source_route_dsts: dict[int, int] = {}  # addr -> first frame index

    for f in frames:
        if f.mac_command is MacCommand.DATA_REQUEST:
            if f.mac_src is not None:
                nmap.add_evidence(f.mac_src, RULE_DATA_REQUEST_SRC, f.index)
                data_request_senders.add(f.mac_src)
            nmap.observe(f.mac_dst)  # 0x0000 gets its coordinator label
            if f.mac_dst is not None and f.mac_dst != 0x0000 \
                    and not is_broadcast(f.mac_dst):
                nmap.add_evidence(f.mac_dst, RULE_DATA_REQUEST_DST, f.index)
            continue
        nwk = f.nwk
        if nwk is None:
            continue
        nmap.observe(nwk.src)
        nmap.observe(nwk.dst)
        if nwk.ext_src is not None and not is_broadcast(nwk.src):
            nmap.bind_extended(nwk.src, nwk.ext_src, f.index)
        if nwk.frame_type == NwkFrameType.COMMAND:
            shape = classify_nwk_command(f, command_table)
            if shape is not None and shape.router_evidence and nwk.src != 0x0000:
                nmap.add_evidence(nwk.src, RULE_NWK_COMMAND_SRC, f.index)
        elif nwk.has_source_route and not is_broadcast(nwk.dst):
            source_route_dsts.setdefault(nwk.dst, f.index)

    for addr, first_index in source_route_dsts.items():
        if addr not in data_request_senders and addr != 0x0000:
            nmap.add_evidence(addr, RULE_SOURCE_ROUTE_DST, first_index)

    nmap.resolve()
    return nmap


def save_map(nmap: NodeMap, path: str) -> None:
    """Write the map as one tab-separated record per node."""
    with open(path, "w") as fh:
        fh.write("# addr\textended\ttype\trules\n")
        for entry in nmap.nodes():
            ext = (format_addr64(entry.extended_addr)
                   if entry.extended_addr is not None else "-")
            fh.write(f"{format_addr16(entry.logical_addr)}\t{ext}\t"
                     f"{entry.ltype.value}\t{','.join(entry.rules()) or '-'}\n")


def load_map(path: str) -> NodeMap:
    nmap = NodeMap()
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            addr_s, ext_s, type_s, rules_s = line.split("\t")
            entry = NodeEntry(parse_addr16(addr_s))
            if ext_s != "-":
                entry.extended_addr = parse_addr64(ext_s)
            entry.ltype = LogicalType(type_s)
            if rules_s != "-":
                entry.evidence = [(r, -1) for r in rules_s.split(",")]
            nmap.entries[entry.logical_addr] = entry
    return nmap
