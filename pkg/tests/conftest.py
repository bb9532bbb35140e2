"""Shared builders for hand-assembled frames, bursts and node maps."""

import pytest

from zigsift.bursts import Burst, direction_of
from zigsift.frames import FrameRecord, MacFrameType, NwkFrameType, NwkMeta
from zigsift.netmap import (RULE_DATA_REQUEST_SRC, RULE_NWK_COMMAND_SRC,
                            LogicalType, NodeMap)

# Verdict lines collected by the acceptance checks; replayed after the run so
# pytest's output capture cannot swallow them.
ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


def make_nwk(src, dst, apl, *, frame_type=NwkFrameType.DATA, secured=True,
             counter=0, ext_src=None, source_route=False):
    """A network-layer view with a given application payload length."""
    aux = 14 if secured else 0
    return NwkMeta(frame_type=frame_type, src=src, dst=dst, radius=30, seq=0,
                   security_enabled=secured, frame_counter=counter if secured else None,
                   ext_src=ext_src, has_source_route=source_route,
                   aux_len=aux, nwk_payload_len=(apl or 0) + aux + (4 if secured else 0),
                   apl_payload_len=apl)


_counter = iter(range(10 ** 9))


def make_frame(ts, src, dst, apl, *, index=None, frame_type=NwkFrameType.DATA,
               secured=True, counter=None, ext_src=None, source_route=False):
    """A parsed data-frame record carrying encrypted application payload."""
    idx = next(_counter) if index is None else index
    ctr = idx if counter is None else counter
    return FrameRecord(
        index=idx, timestamp=ts, mac_frame_type=MacFrameType.DATA,
        mac_seq=idx % 256, mac_src=src, mac_dst=dst,
        nwk=make_nwk(src, dst, apl, frame_type=frame_type, secured=secured,
                     counter=ctr, ext_src=ext_src, source_route=source_route),
        frame_len=35 + (apl or 0), frame_hash=hash((src, dst, apl, idx)))


def make_burst(node, steps, *, t0=100.0, spacing=0.05):
    """Build a burst from (direction, apl_len) steps.

    Directions are relative to `node`: "to" frames come from the hub
    (0x0000), "from" frames go to it.
    """
    frames = []
    t = t0
    for direction, apl in steps:
        if direction == "to":
            frames.append(make_frame(t, 0x0000, node, apl))
        else:
            frames.append(make_frame(t, node, 0x0000, apl))
        t += spacing
    return Burst(node, frames, [direction_of(f, node) for f in frames])


def role_map(zr=(), zed=()):
    """A resolved node map: hub at 0x0000 plus the given routers/end devices."""
    nmap = NodeMap()
    nmap.observe(0x0000)
    for addr in zr:
        nmap.add_evidence(addr, RULE_NWK_COMMAND_SRC, 0)
    for addr in zed:
        nmap.add_evidence(addr, RULE_DATA_REQUEST_SRC, 0)
    nmap.resolve()
    return nmap


@pytest.fixture
def hub_and_devices():
    return role_map(zr=[0x2001], zed=[0x1001])


def assert_types(nmap, expected):
    for addr, ltype in expected.items():
        assert nmap.ltype_of(addr) is LogicalType(ltype), (
            f"{addr:#06x}: wanted {ltype}, got {nmap.ltype_of(addr)}")
