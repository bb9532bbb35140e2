"""Loading of the functionality-specific command rule table.

Rules are data, not code: each row names a candidate frame shape (direction
and exact application payload length) plus side conditions over the rest of
the burst, and says what a match reveals. The packaged default table carries
the eight known device behaviors; users may point the CLI at an edited copy.
"""

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import RuleParseError
from .scoring import Resolution

DEFAULT_RULES_FILE = Path(__file__).parent / "data" / "rules.tsv"

CANDIDATE_MIN_LEN = 11
CANDIDATE_MAX_LEN = 17


class RuleDirection(Enum):
    ZC_TO_ZED = "zc-zed"
    ZC_TO_DEVICE = "zc-d"
    ZED_TO_ZC = "zed-zc"


class DeviceType(Enum):
    DOOR_LOCK = "doorlock"
    OUTLET = "outlet"
    BULB = "bulb"
    OUTLET_OR_BULB = "outlet-or-bulb"
    MOTION_SENSOR = "motion"
    DOOR_SENSOR = "door"
    FLOOD_SENSOR = "flood"
    AUDIO_SENSOR = "audio"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class InferenceRule:
    rule_id: str
    direction: RuleDirection
    target_len: int
    response_in: frozenset[int] | None = None
    response_not_in: frozenset[int] | None = None
    response_not_broadcast: int | None = None
    preceding_not: int | None = None
    preceding_not_broadcast: int | None = None
    requires_discovery: bool = False
    zone_count: int | None = None
    burst_repeats: bool = False
    command: str = ""
    device: DeviceType = DeviceType.UNKNOWN
    event: str = ""
    device_resolution: Resolution = Resolution.IDENTIFIED
    event_resolution: Resolution = Resolution.IDENTIFIED

    @property
    def is_zone_rule(self) -> bool:
        return self.zone_count is not None


def _cell(row: dict, key: str) -> str | None:
    value = (row.get(key) or "").strip()
    return None if value in ("", "-") else value


def _int_set(text: str | None) -> frozenset[int] | None:
    if text is None:
        return None
    return frozenset(int(part) for part in text.split(","))


def load_rules(path: str | Path = DEFAULT_RULES_FILE) -> list[InferenceRule]:
    """Parse a rule file; raises RuleParseError with the offending line."""
    with open(path, newline="") as fh:
        lines = [(i + 1, ln) for i, ln in enumerate(fh)
                 if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise RuleParseError("rule file has no rows")
    reader = csv.DictReader([ln for _, ln in lines], delimiter="\t")
    rules: list[InferenceRule] = []
    seen_ids: set[str] = set()
    for (lineno, _), row in zip(lines[1:], reader):
        try:
            rule_id = _cell(row, "id")
            if rule_id is None:
                raise ValueError("missing rule id")
            if rule_id in seen_ids:
                raise ValueError(f"duplicate rule id {rule_id!r}")
            seen_ids.add(rule_id)
            target = int(row["target"])
            if not CANDIDATE_MIN_LEN <= target <= CANDIDATE_MAX_LEN:
                raise ValueError(f"target {target} outside candidate range "
                                 f"{CANDIDATE_MIN_LEN}-{CANDIDATE_MAX_LEN}")
            zone = _cell(row, "zone_count")
            rules.append(InferenceRule(
                rule_id=rule_id,
                direction=RuleDirection(row["direction"].strip()),
                target_len=target,
                response_in=_int_set(_cell(row, "resp_in")),
                response_not_in=_int_set(_cell(row, "resp_not_in")),
                response_not_broadcast=(int(v) if (v := _cell(row, "resp_not_bcast"))
                                        else None),
                preceding_not=(int(v) if (v := _cell(row, "prec_not")) else None),
                preceding_not_broadcast=(int(v) if (v := _cell(row, "prec_not_bcast"))
                                         else None),
                requires_discovery=row["nd"].strip() == "1",
                zone_count=int(zone) if zone else None,
                burst_repeats=row["repeats"].strip() == "1",
                command=row["command"].strip(),
                device=DeviceType(row["device"].strip()),
                event=row["event"].strip(),
                device_resolution=Resolution(row["dt"].strip()),
                event_resolution=Resolution(row["et"].strip()),
            ))
        except (KeyError, ValueError) as exc:
            raise RuleParseError(f"bad rule row: {exc}", lineno)
    return rules
