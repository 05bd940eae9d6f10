"""
cli.py

This module wires the subcommands to the library. Every command returns its exit
status: 0 on success, 1 when verification finds a violation, 2 on usage or
configuration errors.
"""

import logging
import math
import os
import sys
from typing import List, Optional

from .config_loader import load_configuration, parse_arguments
from .display import display_bounds, display_delta, display_source_info, display_sweep, display_verification
from .harness import run_sweep, run_verify
from .plots import plot_csvs
from .source_core import ProductSource, info_stats, parse_source_spec
from .sw_codes import seeded_encoder
from .theory_bounds import BERRY_ESSEEN_C1, delta_exact, lemma2_bound, partition_report, thm2_proof_chain
from .utilities import parse_int_range

logger = logging.getLogger(__name__)


def _fail(message: str) -> int:
    print(f"Error: {message}", file=sys.stderr)
    return 2


def cmd_source_info(args) -> int:
    stats = info_stats(parse_source_spec(args.spec))
    display_source_info(args.spec, stats, bits=args.bits)
    return 0


def cmd_sweep(args) -> int:
    config = load_configuration(args)
    display_sweep(run_sweep(config))
    return 0


def cmd_delta(args) -> int:
    source = ProductSource(base=parse_source_spec(args.source), n=args.n)
    m_range = parse_int_range(args.m_range) if args.m_range else None
    display_delta(args.source, args.n, delta_exact(source, m_range))
    return 0


def cmd_bounds(args) -> int:
    source = ProductSource(base=parse_source_spec(args.source), n=args.n)
    m = args.m or max(1, math.ceil(math.exp(source.total_conditional_entropy())))
    encoder = seeded_encoder(source, m, args.seed)
    delta = delta_exact(source)
    partition = None
    if args.b > 0:
        partition = partition_report(source, delta.best_m, args.b, args.c1 or BERRY_ESSEEN_C1)
    display_bounds(args.source, args.n, lemma2_bound(source, encoder, args.b), partition,
                   thm2_proof_chain(source, encoder, args.b), delta)
    return 0


def cmd_verify(args) -> int:
    config = load_configuration(args)
    report = run_verify(config)
    display_verification(report)
    return 0 if report.passed else 1


def cmd_plot(args) -> int:
    output_dir = args.output_dir or os.path.dirname(os.path.abspath(args.csv[0]))
    for path in plot_csvs(args.csv, output_dir):
        print(f"wrote {path}")
    return 0


COMMANDS = {
    "source-info": cmd_source_info,
    "sweep": cmd_sweep,
    "delta": cmd_delta,
    "bounds": cmd_bounds,
    "verify": cmd_verify,
    "plot": cmd_plot,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parses the command line, configures logging and runs one subcommand.

    Returns:
        int: The exit status.
    """
    args = parse_arguments(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.debug else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (FileNotFoundError, ValueError, TypeError) as e:
        return _fail(str(e))
