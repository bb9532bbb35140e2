"""Exception types shared across the package."""


class ZigsiftError(Exception):
    """Base class for all errors raised by this package."""


class UnsupportedLinkType(ZigsiftError):
    def __init__(self, link_type: int):
        super().__init__(f"unsupported pcap link type {link_type} "
                         f"(expected IEEE 802.15.4: 195 or 230)")
        self.link_type = link_type


class TruncatedFile(ZigsiftError):
    """The capture file ended in the middle of a header or record."""


class MalformedMacHeader(ZigsiftError):
    """Frame bytes are shorter than the addressing its header declares."""


class NegativeLength(ZigsiftError):
    """Computed application payload length fell below zero."""


class RuleParseError(ZigsiftError):
    def __init__(self, message: str, line: int | None = None):
        loc = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{loc}")
        self.line = line


class AmbiguousMatch(ZigsiftError):
    """More than one inference rule fired for the same candidate frame."""


class RejectedNotIdle(ZigsiftError):
    """Signature extraction was asked to run on a capture with command activity."""


class InsufficientData(ZigsiftError):
    """Not enough concordant reporting bursts to derive a signature."""


class StoreParseError(ZigsiftError):
    def __init__(self, message: str, record: int | None = None):
        loc = f" (record {record})" if record is not None else ""
        super().__init__(f"{message}{loc}")
        self.record = record


class ConfigError(ZigsiftError):
    """A scenario or analysis configuration is invalid."""


class MismatchedInputs(ZigsiftError):
    """Predictions and ground truth come from different captures."""


class UndefinedMetric(ZigsiftError):
    """A ratio metric was requested but its denominator is zero."""
