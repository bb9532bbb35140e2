"""Passive analysis of encrypted Zigbee home-automation traffic.

The package turns raw 802.15.4 captures into: device roles, inferred
commands/events with leakage scores, and periodic reporting signatures —
without ever decrypting a payload. A synthetic scenario generator with exact
ground truth supports evaluation end to end.
"""

__version__ = "0.1.0"

from .errors import (AmbiguousMatch, ConfigError, InsufficientData,
                     MalformedMacHeader, MismatchedInputs, NegativeLength,
                     RejectedNotIdle, RuleParseError, StoreParseError,
                     TruncatedFile, UndefinedMetric, UnsupportedLinkType,
                     ZigsiftError)
from .pcapio import RawFrame, iter_capture, read_capture, write_capture
from .frames import (FrameRecord, MacCommand, MacFrameType, NwkFrameType,
                     NwkMeta, ParseStats, compute_apl_payload_len,
                     parse_capture, parse_frame)
from .netmap import LogicalType, NodeMap, load_map, map_network, save_map
from .bursts import Burst, Direction, dedup, filter_apl, segment_bursts
from .nwkcmds import NwkCommandShape, classify_nwk_command, load_command_table
from .oui import OuiClass, load_oui_table, lookup_manufacturer
from .rules import DeviceType, InferenceRule, RuleDirection, load_rules
from .scoring import Resolution, ScoreBreakdown, score
from .inference import (Diagnostic, Identification, find_candidate,
                        identify_events, infer_command)
from .signatures import (ReportingSignature, SignatureFrame, SignatureMatch,
                         SignaturePattern, correlate, extract_signature,
                         load_store, save_store)
from .metrics import Metrics, evaluate, evaluate_signatures
from .pipeline import AnalysisConfig, AnalysisResult, analyze_capture
from .synth import (MODEL_REGISTRY, DeviceModel, DeviceSpec, EventSpec,
                    GroundTruth, ScenarioConfig, TruthEvent, TruthNode,
                    generate)

__all__ = [name for name in dir() if not name.startswith("_")]
