"""Synthetic Zigbee capture generator with ground truth.

Scenarios are described by a small config (devices, their mesh parents,
scheduled or randomly placed events, noise and retransmission levels,
countermeasure toggles). The generator renders the scenario into a classic
pcap of 802.15.4 frames — encrypted payloads are random bytes of the right
length, because the analyzer never looks inside — plus a ground-truth JSON
sidecar labelling every frame, so analyzer output can be scored exactly.

Device behaviour is modelled per *model*: an archetype (what commands it
understands, with per-event frame-length templates) plus periodic reporting
patterns per hub. Reporting and keep-alive traffic, child polling, link
status broadcasts, route discovery, mesh relaying with source routes, MAC
acks and retransmissions are all emitted so captures exercise the same paths
real traffic would.
"""

import hashlib
import json
from dataclasses import dataclass, field
from random import Random

from .errors import ConfigError
from .oui import load_oui_table, lookup_manufacturer, prefix_of_name
from .pcapio import LINKTYPE_IEEE802_15_4_NOFCS, RawFrame, write_capture
from .util import format_addr16
from . import wire

BROADCAST_ROUTERS = 0xFFFC
POLL_INTERVAL = 7.5
LINK_STATUS_INTERVAL = 15.0
EVENT_MIN_SPACING = 15.0       # between events on one device
EVENT_REPORT_CLEARANCE = 3.0   # events keep clear of report bursts
KEEPALIVE_CUTOFF = 5.0         # patterns faster than this are keep-alives
MAX_FRAME = 127
FIXED_OVERHEAD = 35            # MAC hdr 9 + NWK hdr 8 + aux 14 + MIC 4
SOURCE_ROUTE_OVERHEAD = 4      # count + index + one relay


@dataclass(frozen=True)
class EventTemplate:
    """Frame-length shape of one command exchange, from the device's side."""
    template_id: str
    steps: tuple[tuple[str, int], ...]   # ("to"|"from", plaintext length)
    discovery: bool = False              # hub floods a route request first
    repeat: bool = False                 # whole burst repeats a few seconds on


@dataclass(frozen=True)
class ReportPattern:
    pattern_id: str
    steps: tuple[tuple[str, int], ...]
    interval: float


@dataclass(frozen=True)
class DeviceModel:
    label: str
    archetype: str
    ltype: str                 # "ZED" or "ZR"
    oui: str
    soc_oui: str
    events: dict[str, tuple[EventTemplate, ...]]
    reporting: dict[str, tuple[ReportPattern, ...]]


def _t(tid, steps, **kw):
    return EventTemplate(tid, tuple(steps), **kw)


def _p(pid, steps, interval):
    return ReportPattern(pid, tuple(steps), interval)


_LOCK_TEMPLATES = (
    _t("lock/short", [("to", 11), ("from", 12), ("to", 9)]),
    _t("lock/long", [("to", 11), ("from", 21), ("to", 9)]),
)
_ONOFF_TEMPLATES = (
    _t("onoff/reported", [("to", 11), ("from", 13), ("from", 18), ("to", 9)]),
    _t("onoff/short", [("to", 11), ("from", 15), ("to", 9)]),
)
_LEVEL_TEMPLATE = (
    _t("level/set", [("to", 14), ("from", 13), ("to", 18)], discovery=True),
)
_COLOR_TEMPLATE = (
    _t("color/set", [("to", 15), ("from", 13), ("to", 22)], discovery=True),
)
_MOTION_TEMPLATE = (
    _t("motion/status", [("from", 17), ("to", 10)], repeat=True),
)
_DOOR_TEMPLATE = (
    _t("door/status", [("from", 17), ("to", 10)]),
)
_FLOOD_TEMPLATE = (
    _t("flood/status", [("from", 17), ("from", 17), ("to", 10)]),
)
_AUDIO_TEMPLATE = (
    _t("audio/status", [("from", 17), ("from", 17), ("from", 17), ("to", 10)]),
)

EVENTS_BY_ARCHETYPE: dict[str, dict[str, tuple[EventTemplate, ...]]] = {
    "doorlock": {"lock": _LOCK_TEMPLATES, "unlock": _LOCK_TEMPLATES},
    "outlet": {"on": _ONOFF_TEMPLATES, "off": _ONOFF_TEMPLATES},
    "colorbulb": {"on": _ONOFF_TEMPLATES, "off": _ONOFF_TEMPLATES,
                  "level": _LEVEL_TEMPLATE, "color": _COLOR_TEMPLATE},
    "whitebulb": {"on": _ONOFF_TEMPLATES, "off": _ONOFF_TEMPLATES,
                  "level": _LEVEL_TEMPLATE},
    "motion": {"motion": _MOTION_TEMPLATE},
    "door": {"open": _DOOR_TEMPLATE, "close": _DOOR_TEMPLATE},
    "flood": {"leak": _FLOOD_TEMPLATE},
    "audio": {"audio": _AUDIO_TEMPLATE},
}

ARCHETYPES = tuple(EVENTS_BY_ARCHETYPE)


def _model(label, archetype, ltype, oui, reporting, soc_oui="SiliconL"):
    return DeviceModel(label, archetype, ltype, oui, soc_oui,
                       EVENTS_BY_ARCHETYPE[archetype], reporting)


MODEL_REGISTRY: dict[str, DeviceModel] = {m.label: m for m in [
    # Generic archetypes — one device per command family, real-vendor OUIs.
    _model("doorlock", "doorlock", "ZED", "Ember",
           {"smt": (_p("hourly", [("from", 28)], 3600.0),)}),
    _model("outlet", "outlet", "ZR", "SmartThi",
           {"smt": (_p("5m", [("from", 22), ("from", 18)], 300.0),)}),
    _model("colorbulb", "colorbulb", "ZR", "PhilipsL",
           {"smt": (_p("5m", [("from", 25), ("to", 10)], 300.0),)}),
    _model("whitebulb", "whitebulb", "ZR", "Zhejiang",
           {"smt": (_p("5m", [("from", 19), ("from", 21)], 300.0),)}),
    _model("motion", "motion", "ZED", "SmartThi",
           {"smt": (_p("5m", [("from", 13), ("from", 19)], 300.0),)}),
    _model("door", "door", "ZED", "samjin",
           {"smt": (_p("10m", [("from", 13), ("from", 17)], 600.0),)}),
    _model("flood", "flood", "ZED", "Ember",
           {"smt": (_p("30s", [("from", 16)], 30.0),)}),
    _model("audio", "audio", "ZED", "Ember",
           {"smt": (_p("27s", [("from", 15)], 27.0),)}),

    # Branded models with hub-specific reporting signatures.
    _model("centralite-outlet", "outlet", "ZR", "Ember",
           {"smt": (_p("5m", [("from", 22)], 300.0),
                    _p("10m", [("from", 25), ("to", 9)], 600.0)),
            "echo": (_p("5m", [("from", 22)], 300.0),
                     _p("9m", [("from", 25)], 540.0))}),
    _model("sonoff-outlet", "outlet", "ZR", "TexasIns",
           {"smt": (_p("5m", [("from", 23)], 300.0),),
            "echo": (_p("5m", [("from", 23)], 300.0),
                     _p("10m", [("from", 27)], 600.0))}),
    _model("smt-outlet", "outlet", "ZR", "SmartThi",
           {"smt": (_p("5m", [("from", 24)], 300.0),
                    _p("10m", [("from", 26)], 600.0)),
            "echo": (_p("10m", [("from", 26)], 600.0),)}),
    _model("sengled-white-bulb", "whitebulb", "ZR", "Zhejiang",
           {"smt": (_p("5m", [("from", 21), ("from", 19)], 300.0),),
            "echo": (_p("10m", [("from", 21), ("from", 19)], 600.0),),
            "sengled": (_p("5m", [("from", 21)], 300.0),
                        _p("20m", [("from", 19), ("from", 21)], 1200.0),
                        _p("25m", [("from", 28)], 1500.0))}),
    _model("sengled-color-bulb", "colorbulb", "ZR", "Zhejiang",
           {"smt": (_p("10m", [("from", 22), ("from", 20)], 600.0),
                    _p("1h", [("from", 29)], 3600.0)),
            "echo": (_p("10m", [("from", 22), ("from", 20)], 600.0),),
            "sengled": (_p("10m", [("from", 20)], 600.0),
                        _p("1h", [("from", 29)], 3600.0))}),
    _model("philips-hue-bulb", "colorbulb", "ZR", "PhilipsL",
           {"smt": (_p("ping", [("from", 9)], 1.0),
                    _p("2m", [("from", 25), ("to", 10), ("from", 27)], 120.0)),
            "echo": (_p("ping", [("from", 9)], 1.0),
                     _p("2m", [("from", 25), ("to", 10), ("from", 27)], 120.0)),
            "philips": (_p("ping", [("from", 9)], 1.0),
                        _p("2m", [("from", 25), ("to", 10), ("from", 27)],
                           120.0))}),
    _model("smt-motion", "motion", "ZED", "SmartThi",
           {"smt": (_p("5m", [("from", 13), ("from", 18)], 300.0),)}),
    _model("smt-multisensor", "door", "ZED", "samjin",
           {"smt": (_p("5m", [("from", 13), ("from", 17), ("to", 10)], 300.0),
                    _p("1h", [("from", 31)], 3600.0))}),
    _model("ecolink-water", "flood", "ZED", "Ember",
           {"smt": (_p("30s", [("from", 12)], 30.0),
                    _p("30m", [("from", 20), ("from", 24)], 1800.0))}),
    _model("ecolink-sound", "audio", "ZED", "Ember",
           {"smt": (_p("27s", [("from", 14)], 27.0),
                    _p("30m", [("from", 20), ("from", 26)], 1800.0))}),
    _model("yale-lock", "doorlock", "ZED", "Ember",
           {"smt": (_p("1h", [("from", 30)], 3600.0),),
            "echo": (_p("10m", [("from", 30)], 600.0),)}),

    # Same pattern and interval as the Yale lock on purpose: only the sender
    # OUI separates them, which is exactly what correlation falls back to.
    _model("schlage-lock", "doorlock", "ZED", "SiliconL",
           {"smt": (_p("1h", [("from", 30)], 3600.0),)}),
    _model("aqara-outlet", "outlet", "ZR", "jennic",
           {"smt": (_p("5m", [("from", 23), ("from", 25)], 300.0),)}),
    _model("osram-bulb", "whitebulb", "ZR", "ledvance",
           {"smt": (_p("5m", [("from", 24), ("to", 10)], 300.0),)}),
    _model("visonic-door", "door", "ZED", "Ember",
           {"smt": (_p("20m", [("from", 13), ("from", 17)], 1200.0),)}),
    _model("ewelink-outlet", "outlet", "ZR", "TexasIns",
           {"smt": (_p("5m", [("from", 21)], 300.0),)}),
    _model("smt-bulb", "whitebulb", "ZR", "SiliconL",
           {"smt": (_p("5m", [("from", 26), ("to", 10)], 300.0),)}),
]}

# Background chatter shapes. None may ever satisfy a command rule: lengths in
# the candidate range only appear where no rule's direction/length/response
# conditions can line up (13, 12 and 16 have no rule at all; a leading 13
# also shields anything behind it, since only the first in-range frame of a
# burst is ever tested).
NOISE_TEMPLATES: tuple[tuple[tuple[str, int], ...], ...] = (
    (("to", 20), ("from", 24)),
    (("to", 9), ("from", 10), ("to", 22), ("from", 18)),
    (("to", 18), ("from", 19), ("to", 12), ("from", 13)),
    (("to", 13), ("from", 16), ("to", 25)),
    (("from", 13), ("from", 16), ("to", 10)),
    (("from", 60), ("to", 75)),
    (("to", 88), ("from", 90), ("from", 82)),
)

# The "bulk" noise profile keeps only the heavyweight exchanges (firmware
# transfers and the like): templates whose largest payload reaches this size.
BULK_NOISE_MIN = 60

HUB_EXTENDED_OUI = {"smt": "SmartThi", "philips": "PhilipsL",
                    "sengled": "Zhejiang"}


@dataclass
class DeviceSpec:
    model: str
    addr: int
    parent: int = 0x0000       # 0x0000 = direct child of the hub
    extended: int | None = None
    quiet: bool = False        # router that never sends link status


@dataclass
class EventSpec:
    time: float
    addr: int
    name: str


@dataclass
class ScenarioConfig:
    seed: int = 0
    duration: float = 300.0
    hub: str = "smt"
    devices: list[DeviceSpec] = field(default_factory=list)
    events: list[EventSpec] = field(default_factory=list)
    random_events: int = 0
    event_names: list[str] | None = None
    noise_fraction: float = 0.0
    noise_bursts: int = 0
    noise_profile: str = "mixed"
    retransmission_rate: float = 0.0
    pad_random_0_3: bool = False
    soc_oui_mask: bool = False
    emit_acks: bool = True
    reporting: bool = True
    background: bool = True
    relay: bool = True
    payload_salt: int = 0
    link_type: int = LINKTYPE_IEEE802_15_4_NOFCS

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ScenarioConfig":
        def addr(v):
            return int(v, 16) if isinstance(v, str) else int(v)
        try:
            devices = [DeviceSpec(d["model"], addr(d["addr"]),
                                  addr(d.get("parent", 0)),
                                  (addr(d["extended"])
                                   if d.get("extended") is not None else None),
                                  bool(d.get("quiet", False)))
                       for d in obj.get("devices", [])]
            events = [EventSpec(float(e["time"]), addr(e["addr"]), e["name"])
                      for e in obj.get("events", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed scenario config: {exc}") from exc
        kwargs = {k: obj[k] for k in (
            "seed", "duration", "hub", "random_events", "event_names",
            "noise_fraction", "noise_bursts", "noise_profile",
            "retransmission_rate",
            "pad_random_0_3", "soc_oui_mask", "emit_acks", "reporting",
            "background", "relay", "payload_salt", "link_type") if k in obj}
        unknown = set(obj) - set(kwargs) - {"devices", "events"}
        if unknown:
            raise ConfigError(f"unknown scenario config keys: "
                              f"{', '.join(sorted(unknown))}")
        return cls(devices=devices, events=events, **kwargs)

    @classmethod
    def load(cls, path: str) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                obj = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        if not isinstance(obj, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_json_dict(obj)


def validate_config(config: ScenarioConfig) -> None:
    if not isinstance(config.seed, int) or isinstance(config.seed, bool):
        raise ConfigError("seed must be an integer")
    if not isinstance(config.duration, (int, float)) \
            or isinstance(config.duration, bool):
        raise ConfigError("duration must be a number")
    if config.duration <= 0:
        raise ConfigError("duration must be positive")
    if not (0.0 <= config.noise_fraction):
        raise ConfigError("noise_fraction must be non-negative")
    if not (0.0 <= config.retransmission_rate <= 1.0):
        raise ConfigError("retransmission_rate must be within [0, 1]")
    if config.random_events < 0 or config.noise_bursts < 0:
        raise ConfigError("counts must be non-negative")
    if config.noise_profile not in ("mixed", "bulk"):
        raise ConfigError(f"unknown noise profile {config.noise_profile!r}")
    if (config.random_events or config.noise_bursts or config.noise_fraction) \
            and not config.devices:
        raise ConfigError("random events and noise need at least one device")
    seen: set[int] = set()
    by_addr: dict[int, DeviceSpec] = {}
    for dev in config.devices:
        if dev.model not in MODEL_REGISTRY:
            raise ConfigError(f"unknown device model {dev.model!r}")
        if dev.addr == 0x0000:
            raise ConfigError("address 0x0000 is reserved for the hub")
        if not (0 < dev.addr < 0xFFF8):
            raise ConfigError(f"device address {dev.addr:#06x} out of range")
        if dev.addr in seen:
            raise ConfigError(f"duplicate device address {dev.addr:#06x}")
        seen.add(dev.addr)
        by_addr[dev.addr] = dev
    for dev in config.devices:
        if dev.parent != 0x0000:
            parent = by_addr.get(dev.parent)
            if parent is None:
                raise ConfigError(f"device {dev.addr:#06x} has unknown parent "
                                  f"{dev.parent:#06x}")
            if MODEL_REGISTRY[parent.model].ltype != "ZR":
                raise ConfigError(f"parent {dev.parent:#06x} is not a router")
    for ev in config.events:
        dev = by_addr.get(ev.addr)
        if dev is None:
            raise ConfigError(f"event at {ev.time} names unknown device "
                              f"{ev.addr:#06x}")
        model = MODEL_REGISTRY[dev.model]
        if ev.name not in model.events:
            raise ConfigError(f"device model {dev.model!r} has no event "
                              f"{ev.name!r}")
        if not (0 <= ev.time <= config.duration):
            raise ConfigError(f"event time {ev.time} outside capture window")
    if config.event_names is not None:
        known = {n for a in EVENTS_BY_ARCHETYPE.values() for n in a}
        bad = set(config.event_names) - known
        if bad:
            raise ConfigError(f"unknown event names: {', '.join(sorted(bad))}")


# ---------------------------------------------------------------------------
# Ground truth

@dataclass
class TruthNode:
    addr: int
    extended: int
    ltype: str
    model: str
    archetype: str | None
    oui_class: str
    sig_label: str | None

    def as_dict(self) -> dict:
        return {"addr": self.addr, "extended": self.extended,
                "ltype": self.ltype, "model": self.model,
                "archetype": self.archetype, "oui_class": self.oui_class,
                "sig_label": self.sig_label}


@dataclass
class TruthEvent:
    event_id: int
    time: float
    addr: int
    name: str
    archetype: str
    template_id: str

    def as_dict(self) -> dict:
        return {"id": self.event_id, "time": round(self.time, 6),
                "node": self.addr, "name": self.name,
                "archetype": self.archetype, "template": self.template_id}


@dataclass
class GroundTruth:
    capture_id: str | None
    seed: int
    duration: float
    hub: str
    nodes: list[TruthNode]
    events: list[TruthEvent]
    # One row per written frame: [index, kind, ref, pad]. kind is one of
    # event / report / noise / retransmission / background; ref is the event
    # id, the "addr/pattern" tag for reports, or None.
    frames: list[list]

    def to_json_dict(self) -> dict:
        return {"capture_id": self.capture_id, "seed": self.seed,
                "duration": self.duration, "hub": self.hub,
                "nodes": [n.as_dict() for n in self.nodes],
                "events": [e.as_dict() for e in self.events],
                "frames": self.frames}

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "GroundTruth":
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        return cls(obj.get("capture_id"), obj.get("seed", 0),
                   obj.get("duration", 0.0), obj.get("hub", "smt"),
                   [TruthNode(n["addr"], n["extended"], n["ltype"],
                              n["model"], n.get("archetype"),
                              n.get("oui_class", "private"),
                              n.get("sig_label"))
                    for n in obj.get("nodes", [])],
                   [TruthEvent(e["id"], e["time"], e["node"], e["name"],
                               e["archetype"], e.get("template", ""))
                    for e in obj.get("events", [])],
                   [list(row) for row in obj.get("frames", [])])


# ---------------------------------------------------------------------------
# Planner

class _Plan:
    __slots__ = ("time", "wire", "kind", "ref", "pad", "mac_src", "mac_dst",
                 "nwk_src", "nwk_dst", "plain_len", "relay_list", "acked",
                 "relay_of", "retrans_of", "seq", "payload", "data",
                 "counter", "nseq")

    def __init__(self, time, wire_kind, kind, ref=None, pad=0, mac_src=0,
                 mac_dst=0, nwk_src=0, nwk_dst=0, plain_len=0,
                 relay_list=None, acked=None, relay_of=None, retrans_of=None):
        self.time = time
        self.wire = wire_kind        # "data" | "cmd" | "dr" | "ack"
        self.kind = kind
        self.ref = ref
        self.pad = pad
        self.mac_src = mac_src
        self.mac_dst = mac_dst
        self.nwk_src = nwk_src
        self.nwk_dst = nwk_dst
        self.plain_len = plain_len
        self.relay_list = relay_list
        self.acked = acked
        self.relay_of = relay_of
        self.retrans_of = retrans_of
        self.seq = 0
        self.payload = b""
        self.data = b""


class _Scenario:
    """Carries everything the per-burst emitters need."""

    def __init__(self, config: ScenarioConfig, rng: Random,
                 payload_rng: Random):
        self.config = config
        self.rng = rng
        self.payload_rng = payload_rng
        self.plan: list[_Plan] = []
        self.models = {d.addr: MODEL_REGISTRY[d.model] for d in config.devices}
        self.specs = {d.addr: d for d in config.devices}

    def add(self, item: _Plan) -> _Plan:
        self.plan.append(item)
        return item

    def _ack(self, acked: _Plan) -> None:
        if self.config.emit_acks:
            self.add(_Plan(acked.time + 0.0008, "ack", "background",
                           acked=acked))

    def emit_data_request(self, t: float, src: int, dst: int,
                          kind: str = "background") -> None:
        dr = self.add(_Plan(t, "dr", kind, mac_src=src, mac_dst=dst))
        self._ack(dr)

    def emit_nwk_command(self, t: float, src: int, dst: int, plain_len: int,
                         kind: str, ref=None) -> None:
        self.add(_Plan(t, "cmd", kind, ref=ref, mac_src=src,
                       mac_dst=(0xFFFF if dst >= 0xFFF8 else dst),
                       nwk_src=src, nwk_dst=dst, plain_len=plain_len))

    def emit_app_frame(self, t: float, device: int, direction: str,
                       plain_len: int, pad: int, kind: str, ref) -> None:
        """One application data frame hub<->device, with relaying and acks."""
        spec = self.specs[device]
        relayed = self.config.relay and spec.parent != 0x0000
        if FIXED_OVERHEAD + plain_len + pad \
                + (SOURCE_ROUTE_OVERHEAD if relayed else 0) > MAX_FRAME:
            raise ConfigError(
                f"payload of {plain_len} bytes does not fit in one frame for "
                f"device {format_addr16(device)}")
        if direction == "to":
            if self.models[device].ltype == "ZED":
                self.emit_data_request(t - 0.004, device, spec.parent)
            if relayed:
                first = self.add(_Plan(t, "data", kind, ref=ref, pad=pad,
                                       mac_src=0x0000, mac_dst=spec.parent,
                                       nwk_src=0x0000, nwk_dst=device,
                                       plain_len=plain_len,
                                       relay_list=[spec.parent]))
                self._ack(first)
                second = self.add(_Plan(t + 0.003, "data", kind, ref=ref,
                                        pad=pad, mac_src=spec.parent,
                                        mac_dst=device, nwk_src=0x0000,
                                        nwk_dst=device, plain_len=plain_len,
                                        relay_of=first))
                self._ack(second)
            else:
                item = self.add(_Plan(t, "data", kind, ref=ref, pad=pad,
                                      mac_src=0x0000, mac_dst=device,
                                      nwk_src=0x0000, nwk_dst=device,
                                      plain_len=plain_len))
                self._ack(item)
        else:
            if relayed:
                first = self.add(_Plan(t, "data", kind, ref=ref, pad=pad,
                                       mac_src=device, mac_dst=spec.parent,
                                       nwk_src=device, nwk_dst=0x0000,
                                       plain_len=plain_len))
                self._ack(first)
                second = self.add(_Plan(t + 0.003, "data", kind, ref=ref,
                                        pad=pad, mac_src=spec.parent,
                                        mac_dst=0x0000, nwk_src=device,
                                        nwk_dst=0x0000, plain_len=plain_len,
                                        relay_of=first))
                self._ack(second)
            else:
                item = self.add(_Plan(t, "data", kind, ref=ref, pad=pad,
                                      mac_src=device, mac_dst=0x0000,
                                      nwk_src=device, nwk_dst=0x0000,
                                      plain_len=plain_len))
                self._ack(item)

    def emit_app_burst(self, t0: float, device: int,
                       steps: tuple[tuple[str, int], ...],
                       kind: str, ref) -> float:
        t = t0
        for direction, plain_len in steps:
            pad = self.rng.randint(0, 3) if self.config.pad_random_0_3 else 0
            self.emit_app_frame(t, device, direction, plain_len, pad, kind, ref)
            t += self.rng.uniform(0.01, 0.1)
        return t


def _resolve_extended(config: ScenarioConfig, rng: Random, oui_table,
                      spec: DeviceSpec, model: DeviceModel) -> int:
    suffix = rng.getrandbits(40)
    if spec.extended is not None:
        return spec.extended
    name = model.soc_oui if config.soc_oui_mask else model.oui
    try:
        prefix = prefix_of_name(name, oui_table)
    except KeyError as exc:
        raise ConfigError(f"OUI vendor {name!r} not in the vendor table") from exc
    return (prefix << 40) | suffix


def _schedule_reports(scn: _Scenario) -> dict[int, list[tuple[float, ReportPattern]]]:
    config, rng = scn.config, scn.rng
    out: dict[int, list[tuple[float, ReportPattern]]] = {}
    if not config.reporting:
        return {d.addr: [] for d in config.devices}
    for dev in config.devices:
        model = scn.models[dev.addr]
        patterns = model.reporting.get(config.hub) \
            or model.reporting.get("smt") or ()
        starts: list[tuple[float, ReportPattern]] = []
        for pattern in patterns:
            t = rng.uniform(3.0, min(pattern.interval, 120.0))
            while t < config.duration - 1.0:
                starts.append((t, pattern))
                t += pattern.interval * (1.0 + rng.uniform(-0.02, 0.02))
        out[dev.addr] = starts
    return out


def _schedule_events(scn: _Scenario,
                     reports: dict[int, list[tuple[float, ReportPattern]]]
                     ) -> list[TruthEvent]:
    config, rng = scn.config, scn.rng
    chosen: list[tuple[float, int, str]] = [
        (e.time, e.addr, e.name) for e in config.events]
    if config.random_events:
        pairs: list[tuple[int, str]] = []
        for dev in config.devices:
            for name in sorted(scn.models[dev.addr].events):
                if config.event_names is None or name in config.event_names:
                    pairs.append((dev.addr, name))
        if not pairs:
            raise ConfigError("no device offers any of the requested events")
        avoid = {addr: sorted(t for t, p in starts
                              if p.interval >= KEEPALIVE_CUTOFF)
                 for addr, starts in reports.items()}
        if config.duration < 40.0:
            raise ConfigError("duration too short to place random events")
        budget = 500 * config.random_events
        placed = 0
        while placed < config.random_events:
            if budget <= 0:
                raise ConfigError("could not place random events; extend the "
                                  "capture duration or reduce the count")
            budget -= 1
            addr, name = pairs[rng.randrange(len(pairs))]
            t = rng.uniform(5.0, config.duration - 15.0)
            if any(a == addr and abs(t - t2) < EVENT_MIN_SPACING
                   for t2, a, _ in chosen):
                continue
            if any(abs(t - r) < EVENT_REPORT_CLEARANCE for r in avoid[addr]):
                continue
            chosen.append((t, addr, name))
            placed += 1
    chosen.sort()
    events: list[TruthEvent] = []
    for eid, (t, addr, name) in enumerate(chosen):
        model = scn.models[addr]
        templates = model.events[name]
        template = templates[rng.randrange(len(templates))]
        events.append(TruthEvent(eid, t, addr, name, model.archetype,
                                 template.template_id))
    return events


def _suppress_keepalives(scn: _Scenario,
                         reports: dict[int, list[tuple[float, ReportPattern]]],
                         events: list[TruthEvent]) -> None:
    """Fast keep-alives pause around slower reports and around events.

    Mirrors devices that stop pinging while they have real traffic to send;
    without it a one-second keep-alive would weld every neighbouring burst
    into one, erasing the very patterns being modelled.
    """
    event_times: dict[int, list[float]] = {}
    for ev in events:
        event_times.setdefault(ev.addr, []).append(ev.time)
    for addr, starts in reports.items():
        slow = [t for t, p in starts if p.interval >= KEEPALIVE_CUTOFF]
        busy = slow + event_times.get(addr, [])
        if not busy:
            continue
        reports[addr] = [
            (t, p) for t, p in starts
            if p.interval >= KEEPALIVE_CUTOFF
            or not any(b - 1.5 <= t <= b + 8.0 for b in busy)]


def _emit_background(scn: _Scenario) -> None:
    config, rng = scn.config, scn.rng
    if not config.background:
        return
    routers = [0x0000] + [d.addr for d in config.devices
                          if scn.models[d.addr].ltype == "ZR"]
    neighbour_count = min(len(routers) - 1, 10)
    link_status_len = 2 + 3 * neighbour_count
    for addr in routers:
        spec = scn.specs.get(addr)
        if spec is not None and spec.quiet:
            continue
        t = rng.uniform(1.0, LINK_STATUS_INTERVAL)
        while t < config.duration:
            scn.emit_nwk_command(t, addr, BROADCAST_ROUTERS, link_status_len,
                                 "background")
            t += LINK_STATUS_INTERVAL * (1.0 + rng.uniform(-0.05, 0.05))
    for dev in config.devices:
        if scn.models[dev.addr].ltype != "ZED":
            continue
        t = rng.uniform(0.5, POLL_INTERVAL)
        while t < config.duration:
            scn.emit_data_request(t, dev.addr, dev.parent)
            t += POLL_INTERVAL * (1.0 + rng.uniform(-0.1, 0.1))


def _emit_events(scn: _Scenario, events: list[TruthEvent]) -> None:
    rng = scn.rng
    for ev in events:
        model = scn.models[ev.addr]
        template = next(t for t in model.events[ev.name]
                        if t.template_id == ev.template_id)
        if template.discovery:
            scn.emit_nwk_command(ev.time - 0.03, 0x0000, BROADCAST_ROUTERS, 6,
                                 "event", ev.event_id)
        end = scn.emit_app_burst(ev.time, ev.addr, template.steps, "event",
                                 ev.event_id)
        if template.repeat:
            again = end + rng.uniform(3.0, 5.0)
            scn.emit_app_burst(again, ev.addr, template.steps, "event",
                               ev.event_id)


def _emit_reports(scn: _Scenario,
                  reports: dict[int, list[tuple[float, ReportPattern]]]) -> None:
    for addr in sorted(reports):
        for t, pattern in reports[addr]:
            scn.emit_app_burst(t, addr, pattern.steps, "report",
                               f"{format_addr16(addr)}/{pattern.pattern_id}")


def _emit_noise(scn: _Scenario, n_events: int) -> None:
    config, rng = scn.config, scn.rng
    count = config.noise_bursts + round(config.noise_fraction * n_events)
    if count <= 0:
        return
    devices = sorted(scn.specs)
    pad_slack = 3 if config.pad_random_0_3 else 0
    pool = NOISE_TEMPLATES if config.noise_profile == "mixed" else tuple(
        tpl for tpl in NOISE_TEMPLATES
        if max(plen for _, plen in tpl) >= BULK_NOISE_MIN)
    for _ in range(count):
        addr = devices[rng.randrange(len(devices))]
        relayed = config.relay and scn.specs[addr].parent != 0x0000
        limit = MAX_FRAME - FIXED_OVERHEAD - pad_slack \
            - (SOURCE_ROUTE_OVERHEAD if relayed else 0)
        usable = [tpl for tpl in pool
                  if max(plen for _, plen in tpl) <= limit]
        template = usable[rng.randrange(len(usable))]
        t = rng.uniform(5.0, config.duration - 5.0)
        scn.emit_app_burst(t, addr, template, "noise", None)


def _inject_retransmissions(scn: _Scenario) -> None:
    config, rng = scn.config, scn.rng
    if config.retransmission_rate <= 0:
        return
    for item in list(scn.plan):
        if item.wire == "ack" or item.retrans_of is not None:
            continue
        if rng.random() < config.retransmission_rate:
            copy = _Plan(item.time + rng.uniform(0.005, 0.05), item.wire,
                         "retransmission",
                         ref=item.ref if item.kind == "event" else None,
                         retrans_of=item)
            scn.add(copy)


def _build_frames(scn: _Scenario) -> None:
    payload_rng = scn.payload_rng
    extended = scn.node_extended  # type: ignore[attr-defined]
    mac_seq: dict[int, int] = {}
    frame_counter: dict[int, int] = {}
    nwk_seq: dict[int, int] = {}

    def next_of(table: dict[int, int], key: int, mod: int) -> int:
        value = table.get(key, 0)
        table[key] = (value + 1) % mod
        return value

    for item in scn.plan:
        if item.wire == "ack":
            item.data = wire.build_ack(item.acked.seq)
            continue
        if item.retrans_of is not None:
            src = item.retrans_of
            item.seq = src.seq
            item.data = src.data
            continue
        if item.wire == "dr":
            item.seq = next_of(mac_seq, item.mac_src, 256)
            item.data = wire.build_data_request(item.mac_src, item.mac_dst,
                                                item.seq)
            continue
        item.seq = next_of(mac_seq, item.mac_src, 256)
        if item.relay_of is not None:
            origin = item.relay_of
            counter = origin.counter  # type: ignore[attr-defined]
            seq = origin.nseq         # type: ignore[attr-defined]
            item.payload = origin.payload
        else:
            counter = next_of(frame_counter, item.nwk_src, 1 << 32)
            seq = next_of(nwk_seq, item.nwk_src, 256)
            item.payload = payload_rng.randbytes(item.plain_len + item.pad)
        # Stash NWK-level values for a relay copy to reuse.
        item.counter = counter    # type: ignore[attr-defined]
        item.nseq = seq           # type: ignore[attr-defined]
        builder = wire.build_nwk_data if item.wire == "data" \
            else wire.build_nwk_command
        item.data = builder(mac_src=item.mac_src, mac_dst=item.mac_dst,
                            mac_seq=item.seq, nwk_src=item.nwk_src,
                            nwk_dst=item.nwk_dst, nwk_seq=seq,
                            payload=item.payload, frame_counter=counter,
                            ext_src=extended[item.nwk_src],
                            relay_list=item.relay_list)


def generate(config: ScenarioConfig, capture_path: str,
             truth_path: str | None = None) -> GroundTruth:
    """Render a scenario to a pcap file (and optional truth sidecar).

    Deterministic: the same config yields byte-identical output. Returns the
    ground truth whether or not it was written to disk.
    """
    validate_config(config)
    rng = Random(f"scenario:{config.seed}")
    payload_rng = Random(f"payload:{config.seed}:{config.payload_salt}")
    oui_table = load_oui_table()
    scn = _Scenario(config, rng, payload_rng)

    hub_oui = HUB_EXTENDED_OUI.get(config.hub)
    if hub_oui is not None:
        hub_ext = (prefix_of_name(hub_oui, oui_table) << 40) \
            | rng.getrandbits(40)
    else:
        hub_ext = (0xF8F005 << 40) | rng.getrandbits(40)
    nodes = [TruthNode(0x0000, hub_ext, "ZC", f"hub-{config.hub}", None,
                       lookup_manufacturer(hub_ext, oui_table)[1].value, None)]
    extended = {0x0000: hub_ext}
    for dev in config.devices:
        model = scn.models[dev.addr]
        ext = _resolve_extended(config, rng, oui_table, dev, model)
        extended[dev.addr] = ext
        patterns = model.reporting.get(config.hub) \
            or model.reporting.get("smt") or ()
        sig_label = f"{model.label}@{config.hub}" \
            if (config.reporting and patterns) else None
        nodes.append(TruthNode(dev.addr, ext, model.ltype, model.label,
                               model.archetype,
                               lookup_manufacturer(ext, oui_table)[1].value,
                               sig_label))
    scn.node_extended = extended  # type: ignore[attr-defined]

    reports = _schedule_reports(scn)
    events = _schedule_events(scn, reports)
    _suppress_keepalives(scn, reports, events)
    _emit_background(scn)
    _emit_events(scn, events)
    _emit_reports(scn, reports)
    _emit_noise(scn, len(events))
    _inject_retransmissions(scn)

    scn.plan.sort(key=lambda item: item.time)
    _build_frames(scn)

    # Builders emit no checksum; captures claiming link type 195 carry one.
    fcs = b"\x00\x00" if config.link_type == 195 else b""
    raw: list[RawFrame] = []
    rows: list[list] = []
    for i, item in enumerate(scn.plan):
        sec = int(item.time)
        usec = round((item.time - sec) * 1e6)
        if usec >= 1_000_000:
            sec += 1
            usec -= 1_000_000
        raw.append(RawFrame(i, sec, usec, item.data + fcs, config.link_type))
        rows.append([i, item.kind, item.ref, item.pad])
    write_capture(raw, capture_path, link_type=config.link_type)

    digest = hashlib.sha1()
    with open(capture_path, "rb") as fh:
        while chunk := fh.read(1 << 20):
            digest.update(chunk)
    truth = GroundTruth(digest.hexdigest(), config.seed, config.duration,
                        config.hub, nodes, events, rows)
    if truth_path is not None:
        truth.save(truth_path)
    return truth
