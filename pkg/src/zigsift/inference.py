"""Inference of issued commands from encrypted application bursts.

A burst is examined for a *candidate* frame: the first frame in the burst's
initial half whose application payload length sits in the rule table's
candidate range. That single frame is tested against every rule whose
direction (by mapped roles) and exact length match; side conditions look at
the rest of the burst (later opposite-direction frames as responses, the
immediately preceding frame, an accompanying route-discovery broadcast) and,
for sensor-status rules, at how many status frames the burst holds and
whether the whole burst repeats shortly after.

Exactly one rule may claim a burst. Two claiming rules mean the burst is
genuinely ambiguous between different commands; that is reported as a
diagnostic carrying an "uncertain" knowledge level, never resolved by fiat.
"""

import math
from bisect import bisect_left
from dataclasses import dataclass, field

from .bursts import Burst, Direction, segment_bursts, filter_apl
from .errors import AmbiguousMatch
from .frames import FrameRecord
from .netmap import LogicalType, NodeMap
from .nwkcmds import ROUTE_REQUEST, NwkCommandShape, classify_nwk_command
from .oui import OuiClass, OuiTable, lookup_manufacturer
from .rules import (CANDIDATE_MAX_LEN, CANDIDATE_MIN_LEN, DeviceType,
                    InferenceRule, RuleDirection)
from .scoring import Resolution, ScoreBreakdown, score
from .util import format_addr16

DEFAULT_REPEAT_WINDOW = 10.0


@dataclass
class Identification:
    """One inferred command, anchored to the burst that produced it."""

    time: float
    node: int
    rule_id: str
    command: str
    device: DeviceType
    event: str
    score: ScoreBreakdown
    manufacturer: str | None
    oui_class: OuiClass
    candidate_index: int
    evidence: list[int]

    def as_dict(self) -> dict:
        return {
            "time": round(self.time, 6),
            "node": format_addr16(self.node),
            "rule": self.rule_id,
            "command": self.command,
            "device": self.device.value,
            "event": self.event,
            "manufacturer": self.manufacturer,
            "oui_class": self.oui_class.value,
            "m": self.score.manufacturer,
            "dt": self.score.device_type,
            "et": self.score.event_type,
            "score": self.score.total,
            "candidate": self.candidate_index,
            "evidence": self.evidence,
        }


@dataclass
class Diagnostic:
    kind: str  # "ambiguous-match" | "unknown-sensor" | "address-conflict" | ...
    time: float
    node: int | None
    detail: str
    candidates: list[str] = field(default_factory=list)
    score: ScoreBreakdown | None = None
    evidence: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "time": round(self.time, 6),
               "node": format_addr16(self.node) if self.node is not None else None,
               "detail": self.detail}
        if self.candidates:
            out["candidates"] = self.candidates
        if self.score is not None:
            out["score"] = self.score.total
        if self.evidence:
            out["evidence"] = self.evidence
        return out


@dataclass
class BurstVerdict:
    kind: str                      # "match" | "none" | "unknown-sensor"
    rule: InferenceRule | None = None
    candidate_pos: int | None = None


def find_candidate(burst: Burst) -> int | None:
    """Position of the burst's candidate frame, or None.

    Only the first ⌈n/2⌉ frames are searched — a functionality-specific
    command opens its burst; matches deeper in are follow-up chatter.
    """
    half = math.ceil(len(burst) / 2)
    for pos in range(half):
        length = burst.frames[pos].nwk.apl_payload_len
        if CANDIDATE_MIN_LEN <= length <= CANDIDATE_MAX_LEN:
            return pos
    return None


def _direction_ok(rule: InferenceRule, frame: FrameRecord, nmap: NodeMap) -> bool:
    src_t = nmap.ltype_of(frame.nwk.src)
    dst_t = nmap.ltype_of(frame.nwk.dst)
    if rule.direction is RuleDirection.ZC_TO_ZED:
        return src_t is LogicalType.ZC and dst_t is LogicalType.ZED
    if rule.direction is RuleDirection.ZC_TO_DEVICE:
        return (src_t is LogicalType.ZC
                and dst_t in (LogicalType.ZED, LogicalType.ZR))
    return src_t is LogicalType.ZED and dst_t is LogicalType.ZC


def _conditions_ok(rule: InferenceRule, burst: Burst, pos: int,
                   discovery: bool) -> bool:
    if rule.requires_discovery and not discovery:
        return False
    cand_dir = burst.directions[pos]
    responses = [f.nwk for f, d in zip(burst.frames[pos + 1:],
                                       burst.directions[pos + 1:])
                 if d is not cand_dir]
    lens = {r.apl_payload_len for r in responses}
    if rule.response_in is not None and not (lens & rule.response_in):
        return False
    if rule.response_not_in is not None and (lens & rule.response_not_in):
        return False
    if rule.response_not_broadcast is not None and any(
            r.is_broadcast and r.apl_payload_len == rule.response_not_broadcast
            for r in responses):
        return False
    if pos > 0:
        prev = burst.frames[pos - 1].nwk
        if (rule.preceding_not is not None
                and prev.apl_payload_len == rule.preceding_not):
            return False
        if (rule.preceding_not_broadcast is not None and prev.is_broadcast
                and prev.apl_payload_len == rule.preceding_not_broadcast):
            return False
    return True


def zone_status_count(burst: Burst) -> int:
    """Sensor-status frames (node→network, candidate length) in the burst."""
    return sum(1 for f, d in zip(burst.frames, burst.directions)
               if d is Direction.FROM_NODE
               and f.nwk.apl_payload_len == CANDIDATE_MAX_LEN)


def burst_repeats(burst: Burst, node_bursts: list[Burst],
                  repeat_window: float = DEFAULT_REPEAT_WINDOW) -> bool:
    """True when an identical-shape burst of the node recurs nearby in time."""
    pattern = burst.pattern()
    for other in node_bursts:
        if other is burst:
            continue
        if abs(other.start - burst.start) <= repeat_window \
                and other.pattern() == pattern:
            return True
    return False


def infer_command(burst: Burst, node_bursts: list[Burst], nmap: NodeMap,
                  rules: list[InferenceRule], *, discovery: bool = False,
                  repeat_window: float = DEFAULT_REPEAT_WINDOW) -> BurstVerdict:
    """Test one burst against the rule table.

    Returns a verdict; raises AmbiguousMatch when more than one rule is
    satisfied (the exception carries the contending rules).
    """
    pos = find_candidate(burst)
    if pos is None:
        return BurstVerdict("none")
    length = burst.frames[pos].nwk.apl_payload_len
    fired: list[InferenceRule] = []
    zone_overflow = False
    zcount = None
    zreps = None
    for rule in rules:
        if rule.target_len != length:
            continue
        if not _direction_ok(rule, burst.frames[pos], nmap):
            continue
        if not _conditions_ok(rule, burst, pos, discovery):
            continue
        if rule.is_zone_rule:
            if zcount is None:
                zcount = zone_status_count(burst)
            if zcount > 3:
                zone_overflow = True
                continue
            if zcount != rule.zone_count:
                continue
            if zreps is None:
                zreps = burst_repeats(burst, node_bursts, repeat_window)
            if rule.burst_repeats != zreps:
                continue
        fired.append(rule)
    if len(fired) > 1:
        exc = AmbiguousMatch(
            f"burst at {burst.start:.6f} for {format_addr16(burst.node)} "
            f"satisfies rules {', '.join(r.rule_id for r in fired)}")
        exc.rules = fired
        exc.candidate_pos = pos
        raise exc
    if fired:
        return BurstVerdict("match", fired[0], pos)
    if zone_overflow:
        return BurstVerdict("unknown-sensor", None, pos)
    return BurstVerdict("none")


def burst_has_command_activity(burst: Burst, node_bursts: list[Burst],
                               nmap: NodeMap, rules: list[InferenceRule], *,
                               discovery: bool = False,
                               repeat_window: float = DEFAULT_REPEAT_WINDOW) -> bool:
    """Would the rule engine claim this burst? (Used to reject non-idle input.)"""
    try:
        verdict = infer_command(burst, node_bursts, nmap, rules,
                                discovery=discovery, repeat_window=repeat_window)
    except AmbiguousMatch:
        return True
    return verdict.kind != "none"


def discovery_times(frames, command_table: list[NwkCommandShape]) -> list[float]:
    """Timestamps of route-discovery broadcasts, sorted."""
    times = []
    for f in frames:
        nwk = f.nwk
        if nwk is None or not nwk.is_broadcast:
            continue
        shape = classify_nwk_command(f, command_table)
        if shape is not None and shape.name == ROUTE_REQUEST:
            times.append(f.timestamp)
    times.sort()
    return times


def has_discovery(times: list[float], lo: float, hi: float) -> bool:
    i = bisect_left(times, lo)
    return i < len(times) and times[i] <= hi


def identify_events(frames: list[FrameRecord], nmap: NodeMap,
                    rules: list[InferenceRule], oui_table: OuiTable,
                    command_table: list[NwkCommandShape], *,
                    burst_gap: float = 1.0,
                    repeat_window: float = DEFAULT_REPEAT_WINDOW,
                    ) -> tuple[list[Identification], list[Diagnostic],
                               dict[int, list[Burst]]]:
    """Run rule inference over every mapped (non-coordinator) node.

    `frames` must already be deduplicated. Returns identifications sorted by
    time then node, diagnostics, and each node's segmented bursts.
    """
    rr_times = discovery_times(frames, command_table)
    identifications: list[Identification] = []
    diagnostics: list[Diagnostic] = []
    node_bursts: dict[int, list[Burst]] = {}

    for addr in sorted(nmap.entries):
        entry = nmap.entries[addr]
        if entry.ltype is LogicalType.ZC:
            continue
        apl = filter_apl(frames, addr)
        if not apl:
            continue
        bursts = segment_bursts(apl, addr, burst_gap)
        node_bursts[addr] = bursts
        manufacturer, klass = lookup_manufacturer(entry.extended_addr, oui_table)
        node_ids: list[Identification] = []
        saw_bulb = False
        for burst in bursts:
            discovery = has_discovery(rr_times, burst.start - burst_gap, burst.end)
            try:
                verdict = infer_command(burst, bursts, nmap, rules,
                                        discovery=discovery,
                                        repeat_window=repeat_window)
            except AmbiguousMatch as exc:
                pos = exc.candidate_pos
                diagnostics.append(Diagnostic(
                    "ambiguous-match", burst.frames[pos].timestamp, addr,
                    str(exc),
                    candidates=[r.rule_id for r in exc.rules],
                    score=ScoreBreakdown(
                        1 if klass is OuiClass.REAL else 0,
                        Resolution.UNCERTAIN.points,
                        Resolution.UNCERTAIN.points),
                    evidence=burst.indices()))
                continue
            if verdict.kind == "unknown-sensor":
                pos = verdict.candidate_pos
                diagnostics.append(Diagnostic(
                    "unknown-sensor", burst.frames[pos].timestamp, addr,
                    f"{zone_status_count(burst)} sensor-status frames in one "
                    f"burst; no known device reports that many",
                    evidence=burst.indices()))
                continue
            if verdict.kind != "match":
                continue
            rule = verdict.rule
            pos = verdict.candidate_pos
            if rule.device is DeviceType.BULB:
                saw_bulb = True
            node_ids.append(Identification(
                time=burst.frames[pos].timestamp,
                node=addr,
                rule_id=rule.rule_id,
                command=rule.command,
                device=rule.device,
                event=rule.event,
                score=score(rule.command, rule.device_resolution,
                            rule.event_resolution, klass),
                manufacturer=manufacturer,
                oui_class=klass,
                candidate_index=burst.frames[pos].index,
                evidence=burst.indices()))
        if saw_bulb:
            # A level/color command pins the node as a bulb; earlier or later
            # on/off matches for the same node narrow accordingly. Knowledge
            # levels (and the score) of those matches are untouched: the
            # command itself is still the indistinct one.
            for ident in node_ids:
                if ident.device is DeviceType.OUTLET_OR_BULB:
                    ident.device = DeviceType.BULB
        identifications.extend(node_ids)

    identifications.sort(key=lambda i: (i.time, i.node))
    diagnostics.sort(key=lambda d: (d.time, d.node if d.node is not None else -1))
    return identifications, diagnostics, node_bursts
