"""Detection metrics and evaluation of analysis output against ground truth.

An identification is credited to a ground-truth event when its evidence
frames overlap the event's frames on the same node, the claimed event label
covers the true one, and the claimed device kind is compatible with the true
device archetype. Identifications touching no event frames at all (noise or
reporting traffic promoted to a command) count as false positives.
"""

import statistics
from dataclasses import dataclass, field

from .errors import MismatchedInputs, UndefinedMetric

# True archetype -> device kinds an identification may claim for it.
COMPATIBLE_DEVICES = {
    "doorlock": {"doorlock"},
    "outlet": {"outlet", "outlet-or-bulb"},
    "colorbulb": {"bulb", "outlet-or-bulb"},
    "whitebulb": {"bulb", "outlet-or-bulb"},
    "motion": {"motion"},
    "door": {"door"},
    "flood": {"flood"},
    "audio": {"audio"},
}


@dataclass
class Metrics:
    true_positives: int = 0
    false_negatives: int = 0
    false_positives: int = 0
    true_negatives: int = 0
    average_score: float | None = None
    events_total: int = 0
    identifications_total: int = 0
    per_event: list[dict] = field(default_factory=list)
    unmatched_identifications: list[dict] = field(default_factory=list)

    @property
    def true_positive_rate(self) -> float:
        denom = self.true_positives + self.false_negatives
        if denom == 0:
            raise UndefinedMetric("true-positive rate undefined: no positives "
                                  "in ground truth")
        return self.true_positives / denom

    @property
    def false_negative_rate(self) -> float:
        return 1.0 - self.true_positive_rate

    @property
    def accuracy(self) -> float:
        denom = (self.true_positives + self.true_negatives
                 + self.false_positives + self.false_negatives)
        if denom == 0:
            raise UndefinedMetric("accuracy undefined: empty confusion matrix")
        return (self.true_positives + self.true_negatives) / denom

    def as_dict(self) -> dict:
        out = {
            "tp": self.true_positives,
            "fn": self.false_negatives,
            "fp": self.false_positives,
            "tn": self.true_negatives,
            "events": self.events_total,
            "identifications": self.identifications_total,
            "average_score": self.average_score,
        }
        try:
            out["tpr"] = self.true_positive_rate
        except UndefinedMetric:
            out["tpr"] = None
        return out

    @classmethod
    def from_counts(cls, tp: int, fn: int, fp: int = 0, tn: int = 0) -> "Metrics":
        return cls(true_positives=tp, false_negatives=fn,
                   false_positives=fp, true_negatives=tn,
                   events_total=tp + fn)


def _norm_addr(value) -> int:
    if isinstance(value, str):
        return int(value, 16)
    return int(value)


def _analysis_view(analysis) -> tuple[str | None, list[dict]]:
    """Accept an AnalysisResult or its JSON dict; return (capture_id, idents)."""
    if hasattr(analysis, "identifications"):
        cap = getattr(analysis, "capture_id", None)
        idents = [i.as_dict() for i in analysis.identifications]
    else:
        cap = analysis.get("capture_id")
        idents = analysis.get("identifications", [])
    return cap, idents


def _truth_view(truth) -> dict:
    if hasattr(truth, "to_json_dict"):
        return truth.to_json_dict()
    return truth


def evaluate(analysis, truth) -> Metrics:
    """Score analysis output against the generator's ground truth.

    Both arguments may be the in-memory objects or their parsed JSON forms.
    Raises MismatchedInputs when the two refer to different captures.
    """
    cap_a, idents = _analysis_view(analysis)
    t = _truth_view(truth)
    cap_t = t.get("capture_id")
    if cap_a is not None and cap_t is not None and cap_a != cap_t:
        raise MismatchedInputs(
            f"analysis is for capture {cap_a} but ground truth describes "
            f"{cap_t}")

    events = {e["id"]: e for e in t.get("events", [])}
    frame_event: dict[int, int] = {}
    for row in t.get("frames", []):
        index, kind, ref = row[0], row[1], row[2]
        if kind in ("event", "retransmission") and isinstance(ref, int):
            frame_event[index] = ref

    credited: set[int] = set()
    scores: list[float] = []
    m = Metrics(events_total=len(events), identifications_total=len(idents))
    for ident in idents:
        scores.append(ident["score"])
        node = _norm_addr(ident["node"])
        touched = {frame_event[i] for i in ident.get("evidence", [])
                   if i in frame_event}
        touched = {eid for eid in touched if events[eid]["node"] == node}
        if not touched:
            m.false_positives += 1
            m.unmatched_identifications.append(ident)
            continue
        allowed_events = set(ident["event"].split("|"))
        claimed_device = ident["device"]
        for eid in touched:
            ev = events[eid]
            if (ev["name"] in allowed_events
                    and claimed_device in COMPATIBLE_DEVICES[ev["archetype"]]):
                credited.add(eid)

    m.true_positives = len(credited)
    m.false_negatives = len(events) - len(credited)
    if scores:
        m.average_score = statistics.fmean(scores)
    for eid, ev in sorted(events.items()):
        m.per_event.append({"id": eid, "time": ev["time"], "node": ev["node"],
                            "name": ev["name"], "detected": eid in credited})
    return m


def evaluate_signatures(matches, truth) -> dict:
    """Compare signature-correlation matches with each node's true label.

    Returns {"correct": n, "wrong": n, "missed": n, "nodes": total-labelled}.
    """
    t = _truth_view(truth)
    expected = {n["addr"]: n["sig_label"] for n in t.get("nodes", [])
                if n.get("sig_label")}
    got: dict[int, str] = {}
    for match in matches:
        if hasattr(match, "node"):
            got[match.node] = match.label
        else:
            got[_norm_addr(match["node"])] = match["label"]
    correct = sum(1 for addr, label in expected.items()
                  if got.get(addr) == label)
    wrong = sum(1 for addr, label in got.items()
                if addr in expected and expected[addr] != label)
    missed = len(expected) - correct - wrong
    return {"correct": correct, "wrong": wrong, "missed": missed,
            "nodes": len(expected)}
