"""Manufacturer lookup from 64-bit hardware address prefixes."""

import csv
from enum import Enum
from pathlib import Path

from .errors import RuleParseError

DEFAULT_OUI_FILE = Path(__file__).parent / "data" / "oui.csv"


class OuiClass(Enum):
    REAL = "real"        # consumer vendor: names the product line
    SOC = "soc"          # radio chip maker: generic
    PRIVATE = "private"  # unlisted or locally administered


OuiTable = dict[int, tuple[str, OuiClass]]


def _parse_prefix(text: str) -> int:
    digits = text.replace("-", "").replace(":", "").strip()
    if len(digits) != 6:
        raise ValueError(f"OUI prefix must be 24 bits: {text!r}")
    return int(digits, 16)


def load_oui_table(path: str | Path = DEFAULT_OUI_FILE) -> OuiTable:
    table: OuiTable = {}
    with open(path, newline="") as fh:
        lines = [(i + 1, ln) for i, ln in enumerate(fh)
                 if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        return table
    reader = csv.DictReader([ln for _, ln in lines])
    for (lineno, _), row in zip(lines[1:], reader):
        try:
            prefix = _parse_prefix(row["prefix"])
            klass = OuiClass(row["class"].strip().lower())
        except (KeyError, ValueError) as exc:
            raise RuleParseError(f"bad OUI row: {exc}", lineno)
        table[prefix] = (row["name"].strip(), klass)
    return table


def oui_prefix(extended_addr: int) -> int:
    """Top three octets of a 64-bit address."""
    return (extended_addr >> 40) & 0xFFFFFF


def lookup_manufacturer(extended_addr: int | None,
                        table: OuiTable) -> tuple[str | None, OuiClass]:
    """Vendor name and class for an extended address; unknowns are private."""
    if extended_addr is None:
        return None, OuiClass.PRIVATE
    hit = table.get(oui_prefix(extended_addr))
    if hit is None:
        return None, OuiClass.PRIVATE
    return hit


def prefix_of_name(name: str, table: OuiTable) -> int:
    for prefix, (vendor, _) in table.items():
        if vendor.lower() == name.lower():
            return prefix
    raise KeyError(f"no OUI prefix recorded for vendor {name!r}")
