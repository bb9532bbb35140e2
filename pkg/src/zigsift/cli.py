"""Command-line interface.

Subcommands:

    analyze             infer commands/events from a capture
    map                 infer device roles only
    signatures extract  learn a device's reporting signature from idle traffic
    signatures match    correlate a capture against a signature store
    generate            render a synthetic scenario to pcap (+ ground truth)
    evaluate            score an analysis JSON against generated ground truth

All subcommands exit 0 on success — including analyses that find nothing —
and 2 on any input or processing error.
"""

import argparse
import json
import sys

from . import __version__
from .errors import ZigsiftError
from .metrics import evaluate
from .netmap import map_network, save_map
from .nwkcmds import load_command_table
from .oui import load_oui_table
from .pipeline import AnalysisConfig, analyze_capture, capture_digest
from .report import (render_figures, write_identifications, write_json_report,
                     write_matches)
from .frames import parse_capture
from .bursts import dedup
from .rules import load_rules
from .signatures import extract_signature, load_store, save_store
from .synth import ScenarioConfig, generate
from .util import format_addr16, format_addr64, parse_addr16


def _analysis_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("capture", help="pcap capture file")
    parser.add_argument("--rules", help="alternative command rule table (TSV)")
    parser.add_argument("--oui", help="alternative OUI vendor table (CSV)")
    parser.add_argument("--commands",
                        help="alternative network-command table (CSV)")
    parser.add_argument("--burst-gap", type=float, default=1.0,
                        help="seconds of silence that split bursts "
                             "(default: %(default)s)")
    parser.add_argument("--len-offset", type=int, default=0,
                        help="signed correction added to application payload "
                             "lengths (for stacks with extra overhead)")
    parser.add_argument("--repeat-window", type=float, default=10.0,
                        help="window for burst-repetition checks "
                             "(default: %(default)s s)")


def _config_from(args: argparse.Namespace) -> AnalysisConfig:
    return AnalysisConfig(burst_gap=args.burst_gap,
                          len_offset=args.len_offset,
                          repeat_window=args.repeat_window,
                          rules_path=args.rules, oui_path=args.oui,
                          commands_path=args.commands)


def _cmd_analyze(args: argparse.Namespace) -> int:
    store = load_store(args.store) if args.store else None
    result = analyze_capture(args.capture, _config_from(args), store=store)
    out = open(args.output, "w", encoding="utf-8") if args.output \
        else sys.stdout
    try:
        write_identifications(result, out)
        if result.matches or store is not None:
            out.write("\n")
            write_matches(result, out)
        if args.dump_bursts:
            out.write("\nnode\tstart\tframes\tpattern\n")
            for addr in sorted(result.node_bursts):
                for burst in result.node_bursts[addr]:
                    shape = " ".join(f"{d.value}:{ln}"
                                     for d, ln in burst.pattern())
                    out.write(f"{format_addr16(addr)}\t{burst.start:.6f}\t"
                              f"{len(burst)}\t{shape}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if args.json:
        write_json_report(result, args.json)
    if args.figures:
        for path in render_figures(result, args.figures):
            print(f"wrote {path}", file=sys.stderr)
    for conflict in result.node_map.conflicts:
        print(f"warning: {conflict}", file=sys.stderr)
    return 0


def _cmd_map(args: argparse.Namespace) -> int:
    records, _ = parse_capture(args.capture, args.len_offset)
    records = dedup(records)
    table = load_command_table(args.commands) if args.commands \
        else load_command_table()
    nmap = map_network(records, table)
    if args.output:
        save_map(nmap, args.output)
    else:
        sys.stdout.write("# addr\textended\ttype\trules\n")
        for entry in nmap.nodes():
            ext = "-" if entry.extended_addr is None \
                else format_addr64(entry.extended_addr)
            sys.stdout.write(f"{format_addr16(entry.logical_addr)}\t{ext}\t"
                             f"{entry.ltype.value}\t"
                             f"{','.join(entry.rules()) or '-'}\n")
    for conflict in nmap.conflicts:
        print(f"warning: {conflict}", file=sys.stderr)
    return 0


def _cmd_sig_extract(args: argparse.Namespace) -> int:
    config = _config_from(args)
    rules, oui_table, command_table = (
        load_rules(args.rules) if args.rules else load_rules(),
        load_oui_table(args.oui) if args.oui else load_oui_table(),
        load_command_table(args.commands) if args.commands
        else load_command_table(),
    )
    records, _ = parse_capture(args.capture, config.len_offset)
    records = dedup(records)
    nmap = map_network(records, command_table)
    node = parse_addr16(args.node)
    signature = extract_signature(records, node, nmap, rules, command_table,
                                  oui_table, label=args.label,
                                  hub_hint=args.hub,
                                  repeat_window=config.repeat_window)
    existing = load_store(args.store) if args.append else []
    save_store(existing + [signature], args.store)
    for pattern in signature.patterns:
        shape = " ".join(f"{f.src}>{f.dst}:{f.payload_len}"
                         for f in pattern.frames)
        print(f"{signature.label}\tinterval {pattern.interval:.3f}s\t{shape}")
    return 0


def _cmd_sig_match(args: argparse.Namespace) -> int:
    store = load_store(args.store)
    result = analyze_capture(args.capture, _config_from(args), store=store)
    write_matches(result, sys.stdout)
    for miss in result.misses:
        labels = f" ({', '.join(miss.labels)})" if miss.labels else ""
        print(f"miss: {format_addr16(miss.node)}: {miss.reason}{labels}",
              file=sys.stderr)
    if args.json:
        write_json_report(result, args.json)
    return 0


def _cmd_generate(args: argparse.Namespace) -> int:
    config = ScenarioConfig.load(args.config)
    if args.seed is not None:
        config.seed = args.seed
    truth = generate(config, args.output, args.truth)
    print(f"wrote {args.output}: {len(truth.frames)} frames, "
          f"{len(truth.events)} events, capture id {truth.capture_id}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    with open(args.analysis, "r", encoding="utf-8") as fh:
        analysis = json.load(fh)
    with open(args.truth, "r", encoding="utf-8") as fh:
        truth = json.load(fh)
    m = evaluate(analysis, truth)
    out = m.as_dict()
    if args.json:
        json.dump(out, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        for key in ("tp", "fn", "fp", "events", "identifications"):
            print(f"{key}\t{out[key]}")
        tpr = out["tpr"]
        print(f"tpr\t{tpr:.4f}" if tpr is not None else "tpr\t-")
        avg = out["average_score"]
        print(f"average_score\t{avg:.4f}" if avg is not None
              else "average_score\t-")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zigsift",
        description="Passive analysis of encrypted Zigbee captures: device "
                    "roles, issued commands, and reporting signatures.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="infer commands and events")
    _analysis_options(p)
    p.add_argument("--store", help="signature store to correlate against")
    p.add_argument("-o", "--output", help="write the report here instead of "
                                          "stdout")
    p.add_argument("--json", help="also write the full result as JSON")
    p.add_argument("--figures", metavar="DIR",
                   help="render summary figures (PNG) into this directory")
    p.add_argument("--dump-bursts", action="store_true",
                   help="append every segmented burst to the report")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("map", help="infer device roles only")
    p.add_argument("capture")
    p.add_argument("--commands")
    p.add_argument("--len-offset", type=int, default=0)
    p.add_argument("-o", "--output", help="write the map here (TSV)")
    p.set_defaults(func=_cmd_map)

    sig = sub.add_parser("signatures", help="reporting-signature operations")
    sig_sub = sig.add_subparsers(dest="sig_command", required=True)

    p = sig_sub.add_parser("extract",
                           help="learn a signature from an idle capture")
    _analysis_options(p)
    p.add_argument("--node", required=True, help="device address (hex)")
    p.add_argument("--label", required=True,
                   help="name to store the signature under")
    p.add_argument("--hub", help="hub the device was paired with")
    p.add_argument("--store", required=True, help="signature store file")
    p.add_argument("--append", action="store_true",
                   help="add to an existing store instead of overwriting")
    p.set_defaults(func=_cmd_sig_extract)

    p = sig_sub.add_parser("match", help="correlate against a store")
    _analysis_options(p)
    p.add_argument("--store", required=True)
    p.add_argument("--json", help="also write the full result as JSON")
    p.set_defaults(func=_cmd_sig_match)

    p = sub.add_parser("generate", help="render a synthetic scenario")
    p.add_argument("config", help="scenario config (JSON)")
    p.add_argument("-o", "--output", required=True, help="pcap to write")
    p.add_argument("--truth", help="also write ground truth JSON here")
    p.add_argument("--seed", type=int, help="override the config's seed")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("evaluate",
                       help="score analysis output against ground truth")
    p.add_argument("analysis", help="JSON from `analyze --json`")
    p.add_argument("truth", help="ground truth from `generate --truth`")
    p.add_argument("--json", action="store_true", help="emit JSON")
    p.set_defaults(func=_cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ZigsiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
