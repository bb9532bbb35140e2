"""End-to-end analysis pipeline over one capture file.

parse → role mapping → duplicate removal → per-node burst inference, plus
optional signature correlation when a store is supplied. Everything an
output writer or evaluator needs afterwards is carried on AnalysisResult.
"""

import hashlib
from dataclasses import dataclass, field

from .bursts import Burst, dedup
from .frames import FrameRecord, ParseStats, parse_capture
from .inference import Diagnostic, Identification, identify_events
from .netmap import NodeMap, map_network
from .nwkcmds import load_command_table
from .oui import load_oui_table
from .rules import load_rules
from .signatures import (DEFAULT_SIGNATURE_GAP, CorrelationMiss,
                         ReportingSignature, SignatureMatch, correlate)
from .util import format_addr16


@dataclass
class AnalysisConfig:
    burst_gap: float = 1.0
    signature_gap: float = DEFAULT_SIGNATURE_GAP
    repeat_window: float = 10.0
    len_offset: int = 0
    rules_path: str | None = None
    oui_path: str | None = None
    commands_path: str | None = None


@dataclass
class AnalysisResult:
    capture: str | None
    capture_id: str | None
    stats: ParseStats
    node_map: NodeMap
    identifications: list[Identification]
    diagnostics: list[Diagnostic]
    matches: list[SignatureMatch] = field(default_factory=list)
    misses: list[CorrelationMiss] = field(default_factory=list)
    node_bursts: dict[int, list[Burst]] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "capture": self.capture,
            "capture_id": self.capture_id,
            "frames": {"total": self.stats.total, "parsed": self.stats.parsed,
                       "skipped": self.stats.skipped,
                       "invalid_length": self.stats.invalid_length},
            "nodes": [{"addr": format_addr16(e.logical_addr),
                       "type": e.ltype.value,
                       "rules": e.rules()} for e in self.node_map.nodes()],
            "conflicts": list(self.node_map.conflicts),
            "identifications": [i.as_dict() for i in self.identifications],
            "diagnostics": [d.as_dict() for d in self.diagnostics],
            "signature_matches": [m.as_dict() for m in self.matches],
            "signature_misses": [{"node": format_addr16(m.node),
                                  "reason": m.reason, "detail": m.detail,
                                  "labels": m.labels} for m in self.misses],
        }


def capture_digest(path: str) -> str:
    digest = hashlib.sha1()
    with open(path, "rb") as fh:
        while chunk := fh.read(1 << 20):
            digest.update(chunk)
    return digest.hexdigest()


def _load_tables(config: AnalysisConfig):
    rules = load_rules(config.rules_path) if config.rules_path \
        else load_rules()
    oui = load_oui_table(config.oui_path) if config.oui_path \
        else load_oui_table()
    commands = load_command_table(config.commands_path) \
        if config.commands_path else load_command_table()
    return rules, oui, commands


def analyze_capture(capture: str | list[FrameRecord],
                    config: AnalysisConfig | None = None, *,
                    store: list[ReportingSignature] | None = None,
                    stats: ParseStats | None = None,
                    capture_id: str | None = None) -> AnalysisResult:
    """Analyze a capture file (or already-parsed frames).

    With a signature store, idle traffic is additionally correlated against
    it. Passing parsed frames skips file I/O; supply `stats`/`capture_id`
    then if they should appear in the result.
    """
    config = config or AnalysisConfig()
    rules, oui_table, command_table = _load_tables(config)
    if isinstance(capture, str):
        path = capture
        capture_id = capture_digest(path)
        records, stats = parse_capture(path, config.len_offset)
    else:
        path = None
        records = capture
        stats = stats or ParseStats(total=len(records), parsed=len(records))

    records = dedup(records)
    nmap = map_network(records, command_table)
    identifications, diagnostics, node_bursts = identify_events(
        records, nmap, rules, oui_table, command_table,
        burst_gap=config.burst_gap, repeat_window=config.repeat_window)
    result = AnalysisResult(path, capture_id, stats, nmap, identifications,
                            diagnostics, node_bursts=node_bursts)
    if store is not None:
        result.matches, result.misses = correlate(
            records, store, nmap, rules, command_table, oui_table,
            gap=config.signature_gap, repeat_window=config.repeat_window)
    return result
