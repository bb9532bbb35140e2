"""Byte-level construction of IEEE 802.15.4 / Zigbee network-layer frames.

Used by the synthetic generator and by tests that need hand-assembled frames.
All builders return the over-the-air bytes *without* a trailing FCS (matching
link type 230); append two checksum bytes yourself when writing link type 195.

Frame control layout (little-endian u16), 802.15.4:

    bits 0-2   frame type (0 beacon, 1 data, 2 ack, 3 command)
    bit  3     security enabled
    bit  4     frame pending
    bit  5     ack request
    bit  6     PAN id compression
    bits 10-11 destination addressing mode (0 none, 2 short, 3 extended)
    bits 12-13 frame version
    bits 14-15 source addressing mode

Zigbee network-layer frame control (little-endian u16):

    bits 0-1   frame type (0 data, 1 command)
    bits 2-5   protocol version
    bit  8     multicast
    bit  9     security
    bit  10    source route present
    bit  11    destination IEEE address present
    bit  12    source IEEE address present
"""

import struct

MAC_BEACON = 0
MAC_DATA = 1
MAC_ACK = 2
MAC_COMMAND = 3

ADDR_NONE = 0
ADDR_SHORT = 2
ADDR_EXTENDED = 3

MAC_CMD_DATA_REQUEST = 0x04

NWK_DATA = 0
NWK_COMMAND = 1

NWK_SECURITY_BIT = 0x0200
NWK_SOURCE_ROUTE_BIT = 0x0400
NWK_DST_IEEE_BIT = 0x0800
NWK_SRC_IEEE_BIT = 0x1000

# security control: level masked to 0 on air, key id "network" (1), extended nonce
AUX_CONTROL_NWK_KEY = 0x28
AUX_HEADER_LEN = 14   # control + counter(4) + source(8) + key sequence
MIC_LEN = 4

DEFAULT_PAN = 0x1A62


def mac_fcf(frame_type: int, *, security: bool = False, pending: bool = False,
            ack_request: bool = False, pan_compression: bool = False,
            dst_mode: int = ADDR_NONE, version: int = 0,
            src_mode: int = ADDR_NONE) -> int:
    return (frame_type | security << 3 | pending << 4 | ack_request << 5
            | pan_compression << 6 | dst_mode << 10 | version << 12
            | src_mode << 14)


def build_ack(seq: int) -> bytes:
    """Acknowledgment: frame control + sequence only, no addressing."""
    return struct.pack("<HB", mac_fcf(MAC_ACK), seq & 0xFF)


def build_data_request(src: int, dst: int, seq: int,
                       pan: int = DEFAULT_PAN) -> bytes:
    """MAC Data Request command (a sleepy device polling its parent)."""
    fcf = mac_fcf(MAC_COMMAND, ack_request=True, pan_compression=True,
                  dst_mode=ADDR_SHORT, src_mode=ADDR_SHORT)
    return struct.pack("<HBHHHB", fcf, seq & 0xFF, pan, dst, src,
                       MAC_CMD_DATA_REQUEST)


def build_beacon(src: int, seq: int, pan: int = DEFAULT_PAN,
                 payload: bytes = b"") -> bytes:
    fcf = mac_fcf(MAC_BEACON, src_mode=ADDR_SHORT)
    return struct.pack("<HBHH", fcf, seq & 0xFF, pan, src) + payload


def _mac_data_header(src: int, dst: int, seq: int, pan: int,
                     ack_request: bool) -> bytes:
    fcf = mac_fcf(MAC_DATA, ack_request=ack_request, pan_compression=True,
                  dst_mode=ADDR_SHORT, version=1, src_mode=ADDR_SHORT)
    return struct.pack("<HBHHH", fcf, seq & 0xFF, pan, dst, src)


def _aux_header(frame_counter: int, ext_src: int) -> bytes:
    return (bytes([AUX_CONTROL_NWK_KEY])
            + struct.pack("<I", frame_counter & 0xFFFFFFFF)
            + (ext_src & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
            + b"\x00")  # key sequence number


def build_nwk_frame(*, nwk_type: int, mac_src: int, mac_dst: int, mac_seq: int,
                    nwk_src: int, nwk_dst: int, nwk_seq: int,
                    payload: bytes, radius: int = 30,
                    secured: bool = True, frame_counter: int = 0,
                    ext_src: int = 0, relay_list: list[int] | None = None,
                    include_src_ieee: bool = False,
                    pan: int = DEFAULT_PAN, ack_request: bool | None = None) -> bytes:
    """Assemble a full 802.15.4 data frame carrying a Zigbee network frame.

    For secured frames `payload` is the ciphertext (same length as the
    plaintext it stands in for); the auxiliary header and integrity code are
    added around it. For unsecured frames `payload` goes in as-is.
    """
    broadcast = nwk_dst >= 0xFFF8
    if ack_request is None:
        ack_request = not broadcast
    mac = _mac_data_header(mac_src, 0xFFFF if broadcast else mac_dst,
                           mac_seq, pan, ack_request)

    fcf = nwk_type | (2 << 2)  # protocol version 2
    if secured:
        fcf |= NWK_SECURITY_BIT
    if relay_list is not None:
        fcf |= NWK_SOURCE_ROUTE_BIT
    if include_src_ieee:
        fcf |= NWK_SRC_IEEE_BIT
    hdr = struct.pack("<HHHBB", fcf, nwk_dst, nwk_src, radius & 0xFF,
                      nwk_seq & 0xFF)
    if include_src_ieee:
        hdr += (ext_src & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    if relay_list is not None:
        hdr += bytes([len(relay_list), 0])
        hdr += b"".join(struct.pack("<H", r) for r in relay_list)

    if secured:
        body = _aux_header(frame_counter, ext_src) + payload + b"\x00" * MIC_LEN
    else:
        body = payload
    frame = mac + hdr + body
    if len(frame) > 127:
        raise ValueError(f"assembled frame exceeds 127 bytes ({len(frame)})")
    return frame


def build_nwk_data(**kw) -> bytes:
    return build_nwk_frame(nwk_type=NWK_DATA, **kw)


def build_nwk_command(**kw) -> bytes:
    return build_nwk_frame(nwk_type=NWK_COMMAND, **kw)
