"""
Keypoint-graph pipeline entry point
"""
import argparse
import logging
import sys
from typing import Dict, List, Optional

from commands.registry import CommandRegistry, print_command_summary
from config import DEBUG_MODE, VERBOSE_LOGGING, print_config
from detection.records import dumps

log = logging.getLogger(__name__)

ARG_TYPES = {"path": str, "str": str, "int": int, "float": float}


def _floats(value: str):
    return tuple(float(v) for v in value.split(",") if v.strip())


def _ints(value: str):
    return tuple(int(v) for v in value.split(",") if v.strip())


# Shared flags: (flag, pipeline option, type, help)
SHARED_FLAGS = (
    ("--radius", "radius", float, "heatmap disc radius r (default 5)"),
    ("--peak-threshold", "peak_threshold", float, "score-map peak threshold (default 0.004)"),
    ("--peak-window", "peak_window", int, "maximum-filter window, odd (default 3)"),
    ("--match-radius", "match_radius", float, "grouping search radius (default: radius)"),
    ("--duplicate-radius", "duplicate_radius", float, "same-type duplicate radius (default: radius)"),
    ("--nms-iou", "nms_iou", float, "NMS IoU threshold (default 0.5)"),
    ("--strides", "strides", _ints, "comma-separated strides (default 4,8,16,32)"),
    ("--iou-thresholds", "eval_thresholds", _floats, "comma-separated evaluation IoU thresholds (default 0.5,0.7)"),
    ("--box-rule", "box_rule", str, "keypoint_graph or corner_pair"),
    ("--scale-object-size", "scale_object_size", float, "feature-pixel size for stride assignment (default 16)"),
    ("--seed", "seed", int, "random seed"),
)


def setup_logging(verbose: bool = False):
    if DEBUG_MODE:
        level = logging.DEBUG
    elif VERBOSE_LOGGING or verbose:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def build_parser(registry: CommandRegistry) -> argparse.ArgumentParser:
    """Top-level flags plus one subparser per command, built from its args metadata"""
    parser = argparse.ArgumentParser(
        prog="kgraph",
        description="Keypoint-graph box encoding, decoding and evaluation",
    )
    parser.add_argument("--list", action="store_true", help="list commands and exit")
    parser.add_argument("--verbose", action="store_true", help="info-level diagnostics")
    sub = parser.add_subparsers(dest="command")

    for name, command in sorted(registry.commands.items()):
        p = sub.add_parser(name, help=command.description.split("\n")[0], description=command.description,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        shared = p.add_argument_group("pipeline options")
        for flag, dest, kind, text in SHARED_FLAGS:
            shared.add_argument(flag, dest=f"opt_{dest}", type=kind, default=None, help=text)

        for arg, spec in command.args.items():
            kind, _, nullable = spec.partition("|")
            flag = "--" + arg.replace("_", "-")
            if kind == "bool":
                p.add_argument(flag, dest=arg, action="store_true")
            else:
                p.add_argument(flag, dest=arg, type=ARG_TYPES[kind], default=None, required=not nullable)

    return parser


def split_namespace(ns: argparse.Namespace) -> Dict:
    """Command kwargs, with given shared flags collected under 'options'"""
    kwargs, options = {}, {}
    for key, value in vars(ns).items():
        if key in ("command", "list", "verbose"):
            continue
        if key.startswith("opt_"):
            if value is not None:
                options[key[4:]] = value
        elif value is not None:
            kwargs[key] = value
    kwargs["options"] = options
    return kwargs


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; JSON result on stdout, diagnostics on stderr"""
    argv = sys.argv[1:] if argv is None else argv
    setup_logging("--verbose" in argv)

    registry = CommandRegistry()
    registry.load_all()
    parser = build_parser(registry)
    ns = parser.parse_args(argv)

    if ns.list:
        print_command_summary(registry)
        return 0
    if not ns.command:
        parser.print_help(sys.stderr)
        return 2
    if ns.verbose:
        print_config()

    command = registry.commands[ns.command]
    result = registry.call(ns.command, split_namespace(ns))

    if not command.is_successful(result):
        print(f"❌ {result.get('error')}: {result.get('details', '')}", file=sys.stderr)
        return 1

    print(command.get_result_summary(result), file=sys.stderr)
    print(dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
