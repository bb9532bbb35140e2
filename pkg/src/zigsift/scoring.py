"""Leakage scoring of an identification.

An identification is worth the sum of three parts: whether the manufacturer
is exposed by a real-vendor OUI (0 or 1), how precisely the device type was
pinned down, and how precisely the event was (0, 1, 1.5 or 2 each). A fully
exposed device therefore scores 5.
"""

from dataclasses import dataclass
from enum import Enum

from .oui import OuiClass


class Resolution(Enum):
    UNIDENTIFIED = "unidentified"  # nothing learned
    UNCERTAIN = "uncertain"        # narrowed to alternatives of different kinds
    INDISTINCT = "indistinct"      # exact command, alternatives within it
    IDENTIFIED = "identified"      # pinned exactly

    @property
    def points(self) -> float:
        return _POINTS[self]


_POINTS = {
    Resolution.UNIDENTIFIED: 0.0,
    Resolution.UNCERTAIN: 1.0,
    Resolution.INDISTINCT: 1.5,
    Resolution.IDENTIFIED: 2.0,
}


@dataclass(frozen=True)
class ScoreBreakdown:
    manufacturer: int          # 1 iff a real-vendor OUI names the maker
    device_type: float
    event_type: float

    @property
    def total(self) -> float:
        return self.manufacturer + self.device_type + self.event_type


def score(command: str, device_resolution: Resolution,
          event_resolution: Resolution, oui_class: OuiClass) -> ScoreBreakdown:
    """Score one inferred command given its resolution levels and OUI class.

    `command` is carried for reporting only; the knowledge levels are the
    scored inputs. The result is always within [0, 5].
    """
    del command
    m = 1 if oui_class is OuiClass.REAL else 0
    return ScoreBreakdown(m, device_resolution.points, event_resolution.points)
