"""Small shared helpers (address formatting/parsing)."""

BROADCAST_FLOOR = 0xFFF8


def format_addr16(addr: int) -> str:
    return f"0x{addr:04x}"


def parse_addr16(text: str) -> int:
    value = int(text, 16) if text.lower().startswith("0x") else int(text, 0)
    if not 0 <= value <= 0xFFFF:
        raise ValueError(f"not a 16-bit address: {text!r}")
    return value


def format_addr64(addr: int) -> str:
    raw = addr.to_bytes(8, "big")
    return ":".join(f"{b:02x}" for b in raw)


def parse_addr64(text: str) -> int:
    digits = text.replace(":", "").replace("-", "")
    if len(digits) != 16:
        raise ValueError(f"not a 64-bit address: {text!r}")
    return int(digits, 16)


def is_broadcast(addr: int | None) -> bool:
    return addr is not None and addr >= BROADCAST_FLOOR
