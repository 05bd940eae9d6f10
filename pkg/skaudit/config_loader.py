"""
config_loader.py

This module parses command-line arguments and builds an ExperimentConfig from a
YAML config file, CLI flag overrides (flags win) or a plain dictionary.
"""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import yaml

from .config import ExperimentConfig
from .utilities import parse_float_list, parse_int_range

logger = logging.getLogger(__name__)

_INT_LISTS = ("n_values", "seeds", "m_list")
_FLOAT_LISTS = ("b_values",)
_INTS = ("fixed_m", "trials", "materialize_threshold", "threads", "random_joints", "random_pmfs")
_FLOATS = ("margin", "c1", "perturb_delta")
_STRINGS = ("source", "rate_policy", "mode", "output_dir")

# flag destination -> config field
_OVERRIDES = {
    "source": "source",
    "n": "n_values",
    "rate_policy": "rate_policy",
    "margin": "margin",
    "m": "fixed_m",
    "m_list": "m_list",
    "seeds": "seeds",
    "b": "b_values",
    "mode": "mode",
    "trials": "trials",
    "output_dir": "output_dir",
    "threshold": "materialize_threshold",
    "c1": "c1",
    "threads": "threads",
    "perturb_delta": "perturb_delta",
}


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Path to a YAML config file.")
    parser.add_argument("--source", help="Source preset (bsc:<p>, indep:<k>, det:<k>) or matrix file.")
    parser.add_argument("--n", help="Block lengths, e.g. 1..8 or 2,4,6.")
    parser.add_argument("--rate-policy", dest="rate_policy", choices=["fixed", "entropy", "list"])
    parser.add_argument("--margin", type=float, help="Rate margin in nats for the entropy policy.")
    parser.add_argument("--m", type=int, help="Key alphabet size for the fixed policy.")
    parser.add_argument("--m-list", dest="m_list", help="Key alphabet sizes for the list policy.")
    parser.add_argument("--seeds", help="Binning seeds, e.g. 0..19.")
    parser.add_argument("--b", help="Thresholds b, e.g. 0,0.1,0.3.")
    parser.add_argument("--mode", choices=["exact", "mc"])
    parser.add_argument("--trials", type=int, help="Monte Carlo trials in mc mode.")
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--threshold", type=int, help="Largest |X^n||Z^n| enumerated exactly.")
    parser.add_argument("--c1", type=float, help="Berry-Esseen constant.")
    parser.add_argument("--threads", type=int, help="Worker count.")


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """
    Parses the command line.

    Args:
        argv (List[str], optional): Arguments without the program name; defaults to sys.argv[1:].

    Returns:
        argparse.Namespace: Parsed arguments with the chosen subcommand in `command`.
    """
    parser = argparse.ArgumentParser(
        prog="skaudit",
        description="Audit secret-key distillation codes: security metrics, decoding error and bounds.",
    )
    parser.add_argument("--debug", action="store_true", help="Enable debug logging.")
    commands = parser.add_subparsers(dest="command", required=True)

    info = commands.add_parser("source-info", help="Print H(X|Z), sigma^2 and rho of a source.")
    info.add_argument("spec", help="Source preset or matrix file.")
    info.add_argument("--bits", action="store_true", help="Also print the statistics in bits.")

    sweep = commands.add_parser("sweep", help="Sweep (n, M, seed) and write CSV files.")
    _add_experiment_flags(sweep)

    delta = commands.add_parser("delta", help="Print the optimal distance to a uniform key.")
    delta.add_argument("--source", required=True)
    delta.add_argument("--n", type=int, required=True)
    delta.add_argument("--m-range", dest="m_range", help="Family sizes, e.g. 1..16.")

    bounds = commands.add_parser("bounds", help="Print the bound reports for one threshold b.")
    bounds.add_argument("--source", required=True)
    bounds.add_argument("--n", type=int, required=True)
    bounds.add_argument("--b", type=float, required=True)
    bounds.add_argument("--m", type=int, help="Key alphabet size; defaults to ceil(e^{nH}).")
    bounds.add_argument("--seed", type=int, default=0, help="Binning seed of the audited code.")
    bounds.add_argument("--c1", type=float)

    verify = commands.add_parser("verify", help="Run the inequality suite; exit 1 on any violation.")
    _add_experiment_flags(verify)
    verify.add_argument("--perturb-delta", dest="perturb_delta", type=float,
                        help="Shift delta in the trade-off check (harness self-test).")

    plot = commands.add_parser("plot", help="Render SVG plots from sweep CSV files.")
    plot.add_argument("csv", nargs="+", help="CSV files written by sweep.")
    plot.add_argument("--output-dir", dest="output_dir", help="Defaults to the directory of the first CSV.")

    return parser.parse_args(argv)


def load_config_file(filename: str) -> Dict[str, Any]:
    """
    Reads a flat YAML mapping of config fields.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If the YAML is malformed or the top level is not a mapping.
    """
    if not os.path.isfile(filename):
        raise FileNotFoundError(f"Config file not found: {filename}")
    try:
        with open(filename, 'r', encoding='utf-8') as file:
            data = yaml.safe_load(file)
    except yaml.YAMLError as e:
        raise ValueError(f"Error parsing YAML file {filename}: {e}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValueError(f"Invalid format: Expected a mapping at the top level in {filename}.")
    return data


def _convert(key: str, value: Any, origin: str) -> Any:
    if key in _INT_LISTS:
        return parse_int_range(value)
    if key in _FLOAT_LISTS:
        return parse_float_list(value)
    if key in _INTS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"Field '{key}' must be an integer in {origin}.")
        return value
    if key in _FLOATS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError(f"Field '{key}' must be a number (int or float) in {origin}.")
        return float(value)
    if not isinstance(value, str):
        raise TypeError(f"Field '{key}' must be a string in {origin}.")
    return value


def load_configuration_from_dict(config_dict: Dict[str, Any], origin: str = "config") -> ExperimentConfig:
    """
    Builds an ExperimentConfig from a dictionary of config fields.

    Integer lists may be given as lists or as "a..b" strings.

    Raises:
        ValueError: If a key is unknown or a value is invalid.
        TypeError: If a value has the wrong type.
    """
    known = set(_INT_LISTS + _FLOAT_LISTS + _INTS + _FLOATS + _STRINGS)
    unknown = sorted(set(config_dict) - known)
    if unknown:
        raise ValueError(f"Unknown configuration keys in {origin}: {', '.join(unknown)}")
    values = {key: _convert(key, value, origin) for key, value in config_dict.items()}
    return ExperimentConfig(**values)


def load_configuration(args: argparse.Namespace) -> ExperimentConfig:
    """
    Loads the experiment configuration for sweep and verify.

    The config file (if any) is read first; every flag given on the command line
    then replaces the file value.

    Raises:
        SystemExit: With status 2 if the configuration cannot be loaded.
    """
    try:
        values: Dict[str, Any] = {}
        if getattr(args, "config", None):
            logger.debug("Loading config file %s", args.config)
            values.update(load_config_file(args.config))
        for dest, key in _OVERRIDES.items():
            flag_value = getattr(args, dest, None)
            if flag_value is not None:
                values[key] = flag_value
        config = load_configuration_from_dict(values, origin=getattr(args, "config", None) or "command line")
        logger.debug("Effective configuration: %s", config.echo())
        return config
    except (FileNotFoundError, ValueError, TypeError) as e:
        print(f"Error loading configuration: {e}", file=sys.stderr)
        sys.exit(2)
