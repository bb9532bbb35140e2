"""Periodic reporting signatures: extraction, storage, and correlation.

Even with every payload encrypted, most devices report attribute state on a
fixed timer. The shape of one reporting burst (per-frame source role,
destination role, payload length) plus the interval at which it recurs is
stable enough to act as a fingerprint. This module extracts such signatures
from captures of a known, otherwise-idle device, stores them as JSON lines,
and matches unknown captures against a store.
"""

import json
import statistics
from dataclasses import dataclass, field

from .bursts import Burst, Direction, filter_apl, segment_bursts
from .errors import InsufficientData, RejectedNotIdle, StoreParseError
from .frames import FrameRecord
from .inference import burst_has_command_activity, discovery_times, has_discovery
from .netmap import LogicalType, NodeMap
from .nwkcmds import NwkCommandShape
from .oui import OuiTable, lookup_manufacturer
from .rules import InferenceRule
from .util import format_addr16

# Reporting bursts are tight (tens of milliseconds between frames); a smaller
# gap than the command-burst default keeps a fast reporter (e.g. a 1 s
# keep-alive) from welding consecutive reports into one megaburst.
DEFAULT_SIGNATURE_GAP = 0.5
MIN_BURSTS_PER_PATTERN = 3
MIN_AGREEING_GAPS = 2
MIN_MATCH_BURSTS = 2
TOLERANCE_FLOOR = 2.0
TOLERANCE_FRACTION = 0.10

# One signature frame: (source role, destination role, payload length).
FrameKey = tuple[str, str, int]
PatternKey = tuple[FrameKey, ...]


def interval_tolerance(interval: float, floor: float = TOLERANCE_FLOOR,
                       fraction: float = TOLERANCE_FRACTION) -> float:
    """Allowed deviation when comparing reporting intervals."""
    return max(floor, fraction * interval)


@dataclass(frozen=True)
class SignatureFrame:
    src: str          # logical type of the sender ("ZC"/"ZR"/"ZED"/"?")
    dst: str
    payload_len: int
    interval: float   # reporting interval of the pattern this frame is part of

    def key(self) -> FrameKey:
        return (self.src, self.dst, self.payload_len)


@dataclass
class SignaturePattern:
    frames: tuple[SignatureFrame, ...]
    interval: float

    def key(self) -> PatternKey:
        return tuple(f.key() for f in self.frames)


@dataclass
class ReportingSignature:
    label: str
    oui_hint: str | None
    hub_hint: str | None
    patterns: list[SignaturePattern] = field(default_factory=list)

    def flat_frames(self) -> list[SignatureFrame]:
        out: list[SignatureFrame] = []
        for p in self.patterns:
            out.extend(p.frames)
        return out

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "oui": self.oui_hint,
            "hub": self.hub_hint,
            "frames": [
                {"src": f.src, "dst": f.dst, "pl": f.payload_len,
                 "ri": f.interval}
                for f in self.flat_frames()
            ],
        }


@dataclass
class SignatureMatch:
    node: int
    label: str
    basis: str               # "pattern+interval" | "pattern+interval+oui"
    pattern: PatternKey
    stored_interval: float
    observed_interval: float
    burst_count: int

    def as_dict(self) -> dict:
        return {
            "node": format_addr16(self.node),
            "label": self.label,
            "basis": self.basis,
            "stored_interval": self.stored_interval,
            "observed_interval": round(self.observed_interval, 3),
            "bursts": self.burst_count,
        }


def _burst_key(burst: Burst, nmap: NodeMap) -> PatternKey:
    key = []
    for f, d in zip(burst.frames, burst.directions):
        src_t = nmap.ltype_of(f.nwk.src).value
        dst_t = nmap.ltype_of(f.nwk.dst).value
        key.append((src_t, dst_t, f.nwk.apl_payload_len))
    return tuple(key)


def _group_bursts(bursts: list[Burst], nmap: NodeMap
                  ) -> dict[PatternKey, list[Burst]]:
    groups: dict[PatternKey, list[Burst]] = {}
    for b in bursts:
        groups.setdefault(_burst_key(b, nmap), []).append(b)
    return groups


def _drop_command_bursts(bursts: list[Burst], nmap: NodeMap,
                         rules: list[InferenceRule], rr_times: list[float],
                         gap: float, repeat_window: float) -> list[Burst]:
    kept = []
    for b in bursts:
        disc = has_discovery(rr_times, b.start - gap, b.end)
        if not burst_has_command_activity(b, bursts, nmap, rules,
                                          discovery=disc,
                                          repeat_window=repeat_window):
            kept.append(b)
    return kept


def extract_signature(frames: list[FrameRecord], node: int, nmap: NodeMap,
                      rules: list[InferenceRule],
                      command_table: list[NwkCommandShape],
                      oui_table: OuiTable, *, label: str,
                      hub_hint: str | None = None,
                      gap: float = DEFAULT_SIGNATURE_GAP,
                      repeat_window: float = 10.0) -> ReportingSignature:
    """Learn the reporting signature of `node` from an idle capture.

    `frames` must already be deduplicated. Raises RejectedNotIdle if any of
    the node's bursts looks like a command exchange (signatures must come
    from quiescent traffic), and InsufficientData when no pattern recurs
    often and regularly enough to establish an interval.
    """
    apl = filter_apl(frames, node)
    bursts = segment_bursts(apl, node, gap)
    if not bursts:
        raise InsufficientData(
            f"no application traffic for {format_addr16(node)}")
    rr_times = discovery_times(frames, command_table)
    for b in bursts:
        disc = has_discovery(rr_times, b.start - gap, b.end)
        if burst_has_command_activity(b, bursts, nmap, rules, discovery=disc,
                                      repeat_window=repeat_window):
            raise RejectedNotIdle(
                f"burst at {b.start:.3f} for {format_addr16(node)} matches a "
                f"command rule; capture is not idle")

    patterns: list[SignaturePattern] = []
    for key, group in _group_bursts(bursts, nmap).items():
        if len(group) < MIN_BURSTS_PER_PATTERN:
            continue
        starts = [b.start for b in group]
        gaps = [b - a for a, b in zip(starts, starts[1:])]
        med = statistics.median(gaps)
        tol = interval_tolerance(med)
        agreeing = [g for g in gaps if abs(g - med) <= tol]
        if len(agreeing) < MIN_AGREEING_GAPS:
            continue
        interval = statistics.median(agreeing)
        patterns.append(SignaturePattern(
            tuple(SignatureFrame(src, dst, pl, interval)
                  for (src, dst, pl) in key),
            interval))
    if not patterns:
        raise InsufficientData(
            f"no recurring reporting pattern for {format_addr16(node)}: "
            f"{len(bursts)} bursts observed")
    patterns.sort(key=lambda p: (p.interval, p.key()))
    manufacturer, _ = lookup_manufacturer(nmap.extended_of(node), oui_table)
    return ReportingSignature(label, manufacturer, hub_hint, patterns)


@dataclass
class CorrelationMiss:
    node: int
    reason: str          # "insufficient-data" | "collision"
    detail: str
    labels: list[str] = field(default_factory=list)


def correlate(frames: list[FrameRecord], store: list[ReportingSignature],
              nmap: NodeMap, rules: list[InferenceRule],
              command_table: list[NwkCommandShape],
              oui_table: OuiTable, *,
              gap: float = DEFAULT_SIGNATURE_GAP,
              repeat_window: float = 10.0
              ) -> tuple[list[SignatureMatch], list[CorrelationMiss]]:
    """Match every mapped node's idle traffic against a signature store.

    Command-claimed bursts are discarded first; a store entry matches when at
    least two surviving bursts reproduce one of its patterns and the observed
    recurrence interval agrees with the stored one within tolerance. Nodes
    matching several labels are settled by the sender-OUI hint; unresolved
    collisions and thin traffic are reported as misses.
    """
    rr_times = discovery_times(frames, command_table)
    matches: list[SignatureMatch] = []
    misses: list[CorrelationMiss] = []
    for addr in sorted(nmap.entries):
        if nmap.entries[addr].ltype is LogicalType.ZC:
            continue
        apl = filter_apl(frames, addr)
        if not apl:
            continue
        bursts = segment_bursts(apl, addr, gap)
        idle = _drop_command_bursts(bursts, nmap, rules, rr_times, gap,
                                    repeat_window)
        groups = _group_bursts(idle, nmap)
        candidates: list[tuple[ReportingSignature, SignaturePattern, float, int]] = []
        for sig in store:
            for pattern in sig.patterns:
                group = groups.get(pattern.key())
                if group is None or len(group) < MIN_MATCH_BURSTS:
                    continue
                starts = [b.start for b in group]
                gaps = [b - a for a, b in zip(starts, starts[1:])]
                observed = statistics.median(gaps)
                if abs(observed - pattern.interval) \
                        <= interval_tolerance(pattern.interval):
                    candidates.append((sig, pattern, observed, len(group)))
                    break  # one reproduced pattern per signature suffices
        if not candidates:
            if groups:
                misses.append(CorrelationMiss(
                    addr, "insufficient-data",
                    f"{sum(len(g) for g in groups.values())} idle bursts, "
                    f"none reproduce a stored pattern at its interval"))
            continue
        if len(candidates) == 1:
            sig, pattern, observed, n = candidates[0]
            matches.append(SignatureMatch(addr, sig.label, "pattern+interval",
                                          pattern.key(), pattern.interval,
                                          observed, n))
            continue
        manufacturer, _ = lookup_manufacturer(nmap.extended_of(addr), oui_table)
        narrowed = [c for c in candidates
                    if manufacturer is not None and c[0].oui_hint == manufacturer]
        if len(narrowed) == 1:
            sig, pattern, observed, n = narrowed[0]
            matches.append(SignatureMatch(addr, sig.label,
                                          "pattern+interval+oui",
                                          pattern.key(), pattern.interval,
                                          observed, n))
        else:
            misses.append(CorrelationMiss(
                addr, "collision",
                "several stored signatures fit and the sender OUI does not "
                "single one out",
                labels=sorted(c[0].label for c in candidates)))
    return matches, misses


# ---------------------------------------------------------------------------
# Store I/O: one JSON object per line.

def save_store(signatures: list[ReportingSignature], path: str) -> None:
    seen: set[str] = set()
    for sig in signatures:
        if sig.label in seen:
            raise StoreParseError(f"duplicate label {sig.label!r}", None)
        seen.add(sig.label)
    with open(path, "w", encoding="utf-8") as fh:
        for sig in signatures:
            fh.write(json.dumps(sig.as_dict(), separators=(", ", ": ")) + "\n")


def _rebuild_patterns(frames: list[SignatureFrame]) -> list[SignaturePattern]:
    """Regroup a flat frame list into patterns: runs sharing one interval."""
    patterns: list[SignaturePattern] = []
    run: list[SignatureFrame] = []
    for f in frames:
        if run and f.interval != run[-1].interval:
            patterns.append(SignaturePattern(tuple(run), run[-1].interval))
            run = []
        run.append(f)
    if run:
        patterns.append(SignaturePattern(tuple(run), run[-1].interval))
    return patterns


def load_store(path: str) -> list[ReportingSignature]:
    signatures: list[ReportingSignature] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StoreParseError(f"line {lineno}: not valid JSON ({exc})",
                                      lineno) from exc
            if not isinstance(obj, dict):
                raise StoreParseError(f"line {lineno}: expected an object",
                                      lineno)
            try:
                label = obj["label"]
                raw_frames = obj["frames"]
                frames = [SignatureFrame(f["src"], f["dst"], int(f["pl"]),
                                         float(f["ri"]))
                          for f in raw_frames]
            except (KeyError, TypeError, ValueError) as exc:
                raise StoreParseError(
                    f"line {lineno}: malformed signature record ({exc})",
                    lineno) from exc
            if not isinstance(label, str) or not label:
                raise StoreParseError(f"line {lineno}: label must be a "
                                      f"non-empty string", lineno)
            if label in seen:
                raise StoreParseError(
                    f"line {lineno}: duplicate label {label!r}", lineno)
            seen.add(label)
            if not frames:
                raise StoreParseError(f"line {lineno}: signature {label!r} "
                                      f"has no frames", lineno)
            signatures.append(ReportingSignature(
                label, obj.get("oui"), obj.get("hub"),
                _rebuild_patterns(frames)))
    return signatures
