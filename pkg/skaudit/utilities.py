"""
utilities.py

This module contains helper functions used across the package: number formatting
for CSV output, parsing of integer and float lists written on the command line or
in config files, unit conversion and file checksums.
"""

import hashlib
import math
from typing import Iterable, List, Union

import numpy as np


def format_number(value: float) -> str:
    """
    Formats a float for CSV output so that it reads back to the same value.

    Example:
        >>> format_number(0.1)
        '0.1'
        >>> format_number(float('inf'))
        'inf'
    """
    return repr(float(value))


def nats_to_bits(value: float, power: int = 1) -> float:
    """Converts a quantity in nats^power (entropy, variance, third moment) to bits^power."""
    return value / math.log(2.0) ** power


def parse_int_range(text: Union[str, int, Iterable[int]]) -> List[int]:
    """
    Parses an integer list written as "a..b" (inclusive), "a,b,c", a single integer,
    or an iterable of integers.

    Example:
        >>> parse_int_range("1..4")
        [1, 2, 3, 4]
        >>> parse_int_range("0,5,7")
        [0, 5, 7]

    Raises:
        ValueError: If the text is malformed or describes an empty range.
    """
    if isinstance(text, bool):
        raise ValueError(f"Expected an integer range, got {text!r}.")
    if isinstance(text, (int, np.integer)):
        return [int(text)]
    if not isinstance(text, str):
        values = list(text)
        if not all(isinstance(value, (int, np.integer)) and not isinstance(value, bool) for value in values):
            raise ValueError(f"Expected a list of integers, got {values!r}.")
        values = [int(value) for value in values]
    elif ".." in text:
        start, _, stop = text.partition("..")
        try:
            values = list(range(int(start), int(stop) + 1))
        except ValueError:
            raise ValueError(f"Malformed integer range '{text}'.")
    else:
        try:
            values = [int(part) for part in text.split(",") if part.strip()]
        except ValueError:
            raise ValueError(f"Malformed integer list '{text}'.")
    if not values:
        raise ValueError(f"Integer range '{text}' is empty.")
    return values


def parse_float_list(text: Union[str, float, Iterable[float]]) -> List[float]:
    """Parses "0.1,0.3" or a single number or an iterable of numbers into floats."""
    if isinstance(text, bool):
        raise ValueError(f"Expected numbers, got {text!r}.")
    if isinstance(text, (int, float)):
        return [float(text)]
    try:
        if isinstance(text, str):
            values = [float(part) for part in text.split(",") if part.strip()]
        else:
            values = [float(value) for value in text]
    except (TypeError, ValueError):
        raise ValueError(f"Malformed number list {text!r}.")
    if not values:
        raise ValueError(f"Number list {text!r} is empty.")
    return values


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as file:
        for chunk in iter(lambda: file.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
