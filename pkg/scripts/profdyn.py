"""
profdyn: analyse self-maps of towers of finite quotients.

    python -m scripts.profdyn analyze "zp 3 depth 4; poly [1,1]"
    python -m scripts.profdyn orbit "zp 2 depth 4; shift" --x 11 --level 4 --output-level 1 --length 4

Exit codes: 0 ok, 1 equivalent criteria disagreed, 2 invalid spec or input,
3 precision exhausted.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from config.settings import SettingsError, get_settings, reset_settings
from tools import dsl
from tools.analysis import analysis_report, orbit, precision_report, ratio
from tools.maps import CompatibleFamily, MapError, PrecisionError
from tools.metric import build_metric, verify_isometry
from tools.product import product_ergodicity
from tools.render import build_report_text
from tools.shift_factor import SymbolSequence, cylinder_frequencies, sequence_csv
from tools.tower import CapacityError, TowerError

log = logging.getLogger("profdyn")

EXIT_OK, EXIT_SPEC, EXIT_PRECISION = 0, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="profdyn", description="Dynamics on towers of finite quotients.")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="decide measure preservation and ergodicity level by level")
    analyze.add_argument("spec", help='e.g. "zp 2 depth 8; poly [1,1]"; "-" reads standard input')
    analyze.add_argument("--metric", action="store_true", help="also check the isometry criterion")
    analyze.add_argument("--depth-override", type=int, default=None, metavar="INT")
    analyze.add_argument("--format", choices=("json", "text"), default="json")
    analyze.add_argument("--cylinders", type=int, default=None, metavar="W",
                         help="exact level-1 frequencies of length-W words")

    orb = sub.add_parser("orbit", help="print the level-i orbit of a point as CSV")
    orb.add_argument("spec")
    orb.add_argument("--x", type=int, default=0, help="starting point")
    orb.add_argument("--level", type=int, required=True, help="level at which x is given")
    orb.add_argument("--output-level", type=int, default=None, help="level of the symbols (default: --level)")
    orb.add_argument("--length", type=int, required=True)
    orb.add_argument("--depth-override", type=int, default=None, metavar="INT")
    return parser


def _read_spec(text: str, depth_override: Optional[int]) -> dsl.MapSpec:
    if text == "-":
        text = sys.stdin.read()
    spec = dsl.parse_spec(text)
    return dsl.with_depth(spec, depth_override) if depth_override is not None else spec


def analyze_command(args: argparse.Namespace) -> int:
    spec = _read_spec(args.spec, args.depth_override)
    tower, m = dsl.build(spec, args.depth_override)
    log.info("analysing %s", dsl.render(spec))
    if isinstance(m, CompatibleFamily):
        report = analysis_report(m)
        families = dsl.component_families(spec, tower)
        if families is not None:
            verdict = product_ergodicity(families)
            report.product = verdict.model_dump(exclude_none=True)
            report.product["agrees_with_product_map"] = verdict.holds == report.ergodic
        if args.metric:
            iso = verify_isometry(m, build_metric(tower))
            report.isometry = iso.model_dump(exclude_none=True)
            report.isometry["agrees_with_measure_preserving"] = iso.holds == report.measure_preserving
        level = tower.depth
    else:
        report = precision_report(m)
        if args.metric:
            report.notes.append("--metric applies to compatible families only")
        level = None
    if args.cylinders is not None:
        freqs = cylinder_frequencies(m, 1, args.cylinders, level)
        report.cylinders = {",".join(map(str, w)): ratio(f) for w, f in sorted(freqs.items())}

    if args.format == "json":
        print(report.model_dump_json(by_alias=True, indent=2))
    else:
        print(build_report_text(report), end="")
    if not report.equivalence_consistent:
        log.error("equivalent criteria disagreed; see the report")
        return 1
    return EXIT_OK


def orbit_command(args: argparse.Namespace) -> int:
    spec = _read_spec(args.spec, args.depth_override)
    _, m = dsl.build(spec, args.depth_override)
    i = args.level if args.output_level is None else args.output_level
    symbols = orbit(m, args.x, i, args.length, source_level=args.level)
    seq = SymbolSequence(level=i, symbols=tuple(symbols), source=m.name, start=args.x, start_level=args.level)
    sys.stdout.write(sequence_csv(seq))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    reset_settings()
    try:
        settings = get_settings()
    except SettingsError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SPEC
    logging.basicConfig(level=settings.log_level, format="[%(name)s] %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    command = analyze_command if args.command == "analyze" else orbit_command
    try:
        return command(args)
    except PrecisionError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PRECISION
    except (dsl.SpecError, TowerError, MapError, CapacityError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SPEC


if __name__ == "__main__":
    raise SystemExit(main())
