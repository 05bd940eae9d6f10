"""
source_core.py

This module models finite correlated sources: the single-letter joint distribution
P_XZ, its n-fold i.i.d. extension P_{X^nZ^n}, explicit joints over tuples, the
statistics of the information density -log P_{X|Z}(X|Z), and seeded sampling.
All information quantities are in nats.

Tuples are indexed with a mixed-radix little-endian contract: the tuple
(x_1, ..., x_n) over an alphabet of size k has index x_1 + k*x_2 + ... + k^(n-1)*x_n.
Every dense array in the package follows this contract.

Classes:
    JointPMF: A validated single-letter joint distribution P_XZ.
    ProductSource: The lazy i.i.d. extension of a JointPMF.
    TupleJoint: An arbitrary explicit joint over tuples (not necessarily i.i.d.).
    SourceStats: Conditional entropy and the central moments of the information density.
    InfoSpectrum: The exact distribution of W_n obtained from type classes.

Functions:
    construct_joint(matrix) -> JointPMF
    load_joint(filename) -> JointPMF
    parse_source_spec(spec) -> JointPMF
    info_stats(pmf) -> SourceStats
    info_density(source, x, z) -> InfoDensitySample
    sample(source, seed, count) -> list of (x^n, z^n)
    info_density_spectrum(pmf, n) -> InfoSpectrum
"""

from __future__ import annotations

import itertools
import logging
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

from .utilities import nats_to_bits

logger = logging.getLogger(__name__)

DEFAULT_MATERIALIZE_THRESHOLD = 2 ** 28
CONSTRUCT_TOLERANCE = 1e-9
PMF_TOLERANCE = 1e-12
TAIL_SLACK = 1e-12
MAX_SEED = 2 ** 64


class EnumerationLimitError(ValueError):
    """Raised when an exact enumeration would exceed the materialization threshold."""


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


def _check_seed(seed: int) -> None:
    if not isinstance(seed, (int, np.integer)) or not (0 <= int(seed) < MAX_SEED):
        raise ValueError(f"Seed must be an integer in [0, 2**64), got {seed!r}.")


def tuple_index(digits, radix: int) -> np.ndarray:
    """
    Encodes tuples as mixed-radix little-endian indices.

    Args:
        digits: Integer array of shape (..., n); the last axis holds the tuple.
        radix (int): Alphabet size.

    Returns:
        np.ndarray: Integer indices of shape (...).
    """
    digits = np.asarray(digits, dtype=np.int64)
    powers = radix ** np.arange(digits.shape[-1], dtype=np.int64)
    return digits @ powers


def tuple_digits(index, radix: int, n: int) -> np.ndarray:
    """Inverse of tuple_index: returns an array of shape (..., n)."""
    index = np.asarray(index, dtype=np.int64)
    powers = radix ** np.arange(n, dtype=np.int64)
    return (index[..., None] // powers) % radix


def compositions(n: int, parts: int) -> np.ndarray:
    """
    Lists every way to write n as an ordered sum of `parts` nonnegative integers.

    The rows are the type classes of length-n sequences over an alphabet of
    size `parts` (stars and bars).
    """
    if parts == 1:
        return np.array([[n]], dtype=np.int64)
    rows = []
    for bars in itertools.combinations(range(n + parts - 1), parts - 1):
        edges = (-1,) + bars + (n + parts - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(parts)])
    return np.array(rows, dtype=np.int64)


def composition_count(n: int, parts: int) -> int:
    return math.comb(n + parts - 1, parts - 1)


def log_multinomial(n: int, counts: np.ndarray) -> np.ndarray:
    """Natural log of the multinomial coefficient n! / prod(c_j!) for each row of counts."""
    return gammaln(n + 1) - gammaln(counts + 1).sum(axis=-1)


@dataclass(frozen=True, eq=False)
class SourceStats:
    """
    Single-letter statistics of the information density -log P_{X|Z}(X|Z).

    Attributes:
        h_cond (float): Conditional entropy H(X|Z) in nats.
        sigma2 (float): Variance of the information density, nats^2.
        rho3 (float): Third absolute central moment E|-log P_{X|Z} - H|^3, nats^3.
        compression_limit (float): The Slepian-Wolf compression limit, equal to h_cond.
    """
    h_cond: float
    sigma2: float
    rho3: float
    compression_limit: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def degenerate(self) -> bool:
        return self.sigma2 == 0.0

    def in_bits(self) -> dict:
        """Display-only conversion; every computation stays in nats."""
        return {
            "h_cond": nats_to_bits(self.h_cond),
            "sigma2": nats_to_bits(self.sigma2, 2),
            "rho3": nats_to_bits(self.rho3, 3),
            "compression_limit": nats_to_bits(self.compression_limit),
        }


@dataclass(frozen=True)
class InfoDensitySample:
    """A value of W_n = sum_i log 1/P_{X|Z}(x_i|z_i) in nats (may be +inf)."""
    w: float

    def __add__(self, other: "InfoDensitySample") -> "InfoDensitySample":
        return InfoDensitySample(self.w + other.w)


@dataclass(frozen=True, eq=False)
class JointPMF:
    """
    Represents a joint distribution P_XZ over finite alphabets.

    Attributes:
        x_size (int): Size of the principal alphabet X.
        z_size (int): Size of the side-information alphabet Z.
        probs (np.ndarray): Matrix of probabilities indexed (x, z).
    """
    x_size: int
    z_size: int
    probs: np.ndarray

    def __post_init__(self):
        """
        Validates shape, sign and normalization, then freezes the matrix.

        Raises:
            ValueError: If the matrix is misshaped, has a negative or non-finite
                        entry, or does not sum to 1 within 1e-12.
        """
        if self.x_size < 1 or self.z_size < 1:
            raise ValueError("Alphabet sizes must be positive.")
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.shape != (self.x_size, self.z_size):
            raise ValueError(
                f"Joint matrix has shape {probs.shape}, expected ({self.x_size}, {self.z_size})."
            )
        if not np.all(np.isfinite(probs)):
            raise ValueError("Joint matrix has a non-finite entry.")
        if np.any(probs < 0):
            raise ValueError("Joint matrix has a negative entry.")
        if abs(probs.sum() - 1.0) > PMF_TOLERANCE:
            raise ValueError(f"Joint matrix sums to {probs.sum()!r}, not 1.")
        object.__setattr__(self, "probs", _frozen_array(probs))

    @property
    def p_z(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    @property
    def p_x(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def conditional(self) -> np.ndarray:
        """
        Returns P_{X|Z} as an (x, z) matrix.

        Columns with P_Z(z) = 0 carry no mass; they are left as zeros and must
        not be read as distributions.
        """
        p_z = self.p_z
        out = np.zeros_like(self.probs)
        np.divide(self.probs, p_z[None, :], out=out, where=p_z[None, :] > 0)
        return out

    def info_density_values(self) -> np.ndarray:
        """Returns -log P_{X|Z}(x|z) per cell; +inf on cells with zero joint mass."""
        values = np.full(self.probs.shape, np.inf)
        support = self.probs > 0
        values[support] = -np.log(self.conditional()[support])
        return values


def construct_joint(matrix) -> JointPMF:
    """
    Builds a JointPMF from a rectangular matrix of nonnegative numbers.

    The matrix must sum to 1 within 1e-9; it is renormalized internally so the
    stored distribution sums to 1 to machine precision.

    Args:
        matrix: Nested sequence or array indexed (x, z).

    Returns:
        JointPMF: The validated distribution.

    Raises:
        ValueError: If the matrix is empty, ragged, has a negative entry, or its
                    sum deviates from 1 by more than 1e-9.
    """
    try:
        probs = np.array(matrix, dtype=np.float64)
    except (ValueError, TypeError) as e:
        raise ValueError(f"Joint matrix must be a rectangular matrix of numbers: {e}")
    if probs.ndim != 2 or probs.size == 0:
        raise ValueError("Joint matrix must be a non-empty 2-D matrix.")
    if not np.all(np.isfinite(probs)):
        raise ValueError("Joint matrix has a non-finite entry.")
    if np.any(probs < 0):
        raise ValueError("Joint matrix has a negative entry.")
    total = probs.sum()
    if abs(total - 1.0) > CONSTRUCT_TOLERANCE:
        raise ValueError(f"Joint matrix sums to {total!r}; it must be 1 within {CONSTRUCT_TOLERANCE}.")
    probs = probs / total
    return JointPMF(x_size=probs.shape[0], z_size=probs.shape[1], probs=probs)


def bsc_joint(p: float) -> JointPMF:
    """Uniform binary X observed through a binary symmetric channel with crossover p."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"Crossover probability must lie in [0, 1], got {p}.")
    return construct_joint([[(1 - p) / 2, p / 2], [p / 2, (1 - p) / 2]])


def indep_joint(k: int) -> JointPMF:
    if k < 1:
        raise ValueError(f"Alphabet size must be positive, got {k}.")
    return construct_joint(np.full((k, k), 1.0 / (k * k)))


def det_joint(k: int) -> JointPMF:
    if k < 1:
        raise ValueError(f"Alphabet size must be positive, got {k}.")
    return construct_joint(np.eye(k) / k)


def load_joint(filename: str) -> JointPMF:
    """
    Loads a JointPMF from a plain matrix file.

    The file holds one row of whitespace-separated decimals per x value, columns
    indexed by z. Text after `#` is a comment:

    ```
    # BSC(0.1) with uniform input
    0.45 0.05
    0.05 0.45
    ```

    Args:
        filename (str): Path to the matrix file.

    Returns:
        JointPMF: The validated distribution.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If a token is not a number or the matrix is invalid.
    """
    if not os.path.isfile(filename):
        raise FileNotFoundError(f"Joint matrix file not found: {filename}")

    rows: List[List[float]] = []
    with open(filename, 'r', encoding='utf-8') as file:
        for line_number, line in enumerate(file, start=1):
            content = line.split('#', 1)[0].strip()
            if not content:
                continue
            try:
                rows.append([float(token) for token in content.split()])
            except ValueError:
                raise ValueError(f"Invalid number on line {line_number} of {filename}: {content!r}")

    try:
        return construct_joint(rows)
    except ValueError as e:
        raise ValueError(f"Invalid joint matrix in {filename}: {e}")


_PRESETS = {
    "bsc": (float, bsc_joint),
    "indep": (int, indep_joint),
    "det": (int, det_joint),
}


def parse_source_spec(spec: str) -> JointPMF:
    """
    Resolves a source specification: a named preset or a matrix file path.

    Presets are `bsc:<p>`, `indep:<k>` and `det:<k>`.

    Raises:
        ValueError: If the specification is malformed.
        FileNotFoundError: If it names a matrix file that does not exist.
    """
    name, sep, argument = spec.partition(':')
    if sep and name in _PRESETS:
        convert, build = _PRESETS[name]
        try:
            value = convert(argument)
        except ValueError:
            raise ValueError(f"Malformed source preset '{spec}': '{argument}' is not a valid {convert.__name__}.")
        return build(value)
    if os.path.isfile(spec):
        return load_joint(spec)
    if sep:
        raise ValueError(f"Unknown source preset '{name}' in '{spec}'; expected one of {sorted(_PRESETS)}.")
    raise FileNotFoundError(f"Source '{spec}' is neither a preset nor an existing matrix file.")


def is_degenerate(pmf: JointPMF, tol: float = 1e-12) -> bool:
    """True when -log P_{X|Z}(x|z) is constant over the support, i.e. sigma^2 = 0."""
    values = pmf.info_density_values()[pmf.probs > 0]
    spread = values.max() - values.min()
    return bool(spread <= tol * max(1.0, float(np.abs(values).max())))


def info_stats(pmf: JointPMF) -> SourceStats:
    """
    Computes H(X|Z), the variance sigma^2 and the third absolute central moment of
    the information density, exactly over the single-letter joint.

    Cells with zero joint mass contribute nothing (0 log 1/0 = 0).
    """
    support = pmf.probs > 0
    weights = pmf.probs[support]
    values = pmf.info_density_values()[support]
    h_cond = float(np.dot(weights, values)) + 0.0
    if is_degenerate(pmf):
        sigma2 = rho3 = 0.0
    else:
        deviation = values - h_cond
        sigma2 = float(np.dot(weights, deviation ** 2))
        rho3 = float(np.dot(weights, np.abs(deviation) ** 3))
    return SourceStats(h_cond=h_cond, sigma2=sigma2, rho3=rho3, compression_limit=h_cond)


@dataclass(frozen=True, eq=False)
class InfoSpectrum:
    """
    An exact finite distribution of the information density W_n.

    Attributes:
        values (np.ndarray): Sorted attainable values of W_n in nats.
        probs (np.ndarray): Their probabilities.
    """
    values: np.ndarray
    probs: np.ndarray

    def tail(self, alpha: float) -> float:
        """Pr{W_n >= alpha}, comparing with a relative slack of 1e-12."""
        slack = TAIL_SLACK * max(1.0, abs(alpha))
        return float(self.probs[self.values >= alpha - slack].sum())

    def below(self, alpha: float) -> float:
        """Pr{W_n < alpha} with the same slack as tail()."""
        return 1.0 - self.tail(alpha)

    def mean(self) -> float:
        return float(np.dot(self.probs, self.values))

    def variance(self) -> float:
        return float(np.dot(self.probs, (self.values - self.mean()) ** 2))


def _merged_letter_values(pmf: JointPMF) -> Tuple[np.ndarray, np.ndarray]:
    support = pmf.probs > 0
    order = np.argsort(pmf.info_density_values()[support], kind='stable')
    values = pmf.info_density_values()[support][order]
    masses = pmf.probs[support][order]
    merged_values, merged_masses = [values[0]], [masses[0]]
    for value, mass in zip(values[1:], masses[1:]):
        if value - merged_values[-1] <= TAIL_SLACK * max(1.0, abs(value)):
            merged_masses[-1] += mass
        else:
            merged_values.append(value)
            merged_masses.append(mass)
    return np.array(merged_values), np.array(merged_masses)


def info_density_spectrum(pmf: JointPMF, n: int,
                          max_types: int = DEFAULT_MATERIALIZE_THRESHOLD) -> InfoSpectrum:
    """
    Computes the exact distribution of W_n for the i.i.d. extension of pmf.

    W_n only depends on how many coordinates take each distinct single-letter
    value of -log P_{X|Z}, so the distribution is a multinomial over the
    compositions of n. The cost is the number of compositions, C(n+k-1, k-1)
    for k distinct values, instead of the size of the joint alphabet.

    Raises:
        EnumerationLimitError: If the number of compositions exceeds max_types.
    """
    if n < 1:
        raise ValueError(f"Block length must be positive, got {n}.")
    letter_values, letter_masses = _merged_letter_values(pmf)
    parts = len(letter_values)
    if composition_count(n, parts) > max_types:
        raise EnumerationLimitError(
            f"W_n spectrum needs {composition_count(n, parts)} type classes (limit {max_types})."
        )
    counts = compositions(n, parts)
    log_probs = log_multinomial(n, counts) + counts @ np.log(letter_masses)
    values = counts @ letter_values
    order = np.argsort(values, kind='stable')
    return InfoSpectrum(values=_frozen_array(values[order]), probs=_frozen_array(np.exp(log_probs[order])))


@dataclass(frozen=True, eq=False)
class ConditionalProfile:
    """
    The conditional distribution of X^n given one side-information value (or one
    group of values sharing the same multiset of conditional masses).

    Attributes:
        weight (float): Total P_{Z^n} mass of the group.
        masses (np.ndarray): Conditional masses P_{X^n|Z^n}(.|z^n), sorted descending.
    """
    weight: float
    masses: np.ndarray


@dataclass(frozen=True, eq=False)
class ProductSource:
    """
    The n-fold i.i.d. extension of a JointPMF.

    Single tuples are evaluated exactly for any n; dense enumeration refuses to
    run when |X|^n * |Z|^n exceeds materialize_threshold.

    Attributes:
        base (JointPMF): The single-letter distribution.
        n (int): Block length.
        materialize_threshold (int): Maximum number of joint outcomes to enumerate.
    """
    base: JointPMF
    n: int
    materialize_threshold: int = DEFAULT_MATERIALIZE_THRESHOLD

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Block length must be positive, got {self.n}.")
        if self.materialize_threshold < 1:
            raise ValueError("materialize_threshold must be positive.")

    @property
    def x_count(self) -> int:
        return self.base.x_size ** self.n

    @property
    def z_count(self) -> int:
        return self.base.z_size ** self.n

    def check_enumerable(self, outcomes: int = 0) -> None:
        outcomes = outcomes or self.x_count * self.z_count
        if outcomes > self.materialize_threshold:
            raise EnumerationLimitError(
                f"n={self.n} needs {outcomes} outcomes (materialize_threshold {self.materialize_threshold})."
            )

    def probability(self, x: Sequence[int], z: Sequence[int]) -> float:
        """P_{X^nZ^n}(x^n, z^n) as an exact product of single-letter terms."""
        if len(x) != self.n or len(z) != self.n:
            raise ValueError(f"Tuples must have length {self.n}.")
        return math.prod(float(self.base.probs[xi, zi]) for xi, zi in zip(x, z))

    @cached_property
    def joint_matrix(self) -> np.ndarray:
        """Dense P_{X^nZ^n} indexed (x^n-index, z^n-index)."""
        self.check_enumerable()
        logger.debug("Materializing joint for n=%d (%d cells)", self.n, self.x_count * self.z_count)
        joint = self.base.probs
        for _ in range(self.n - 1):
            joint = np.kron(self.base.probs, joint)
        return _frozen_array(joint)

    @cached_property
    def density_matrix(self) -> np.ndarray:
        """Dense -log P_{X^n|Z^n}(x^n|z^n); +inf on zero-mass cells."""
        self.check_enumerable()
        letter = self.base.info_density_values()
        values = letter
        for _ in range(self.n - 1):
            values = (letter[:, None, :, None] + values[None, :, None, :]).reshape(
                letter.shape[0] * values.shape[0], letter.shape[1] * values.shape[1]
            )
        return _frozen_array(values)

    def z_marginal(self) -> np.ndarray:
        marginal = self.base.p_z
        for _ in range(self.n - 1):
            marginal = np.kron(self.base.p_z, marginal)
        return marginal

    def stats(self) -> SourceStats:
        return info_stats(self.base)

    def total_conditional_entropy(self) -> float:
        """H(X^n|Z^n) = n H(X|Z)."""
        return self.n * self.stats().h_cond

    def spectrum(self) -> InfoSpectrum:
        return info_density_spectrum(self.base, self.n, self.materialize_threshold)

    def conditional_profiles(self) -> List[ConditionalProfile]:
        """
        Groups z^n by type class: every z^n with the same symbol counts has the same
        multiset of conditional masses, so only one representative per type is built.
        """
        z_size = self.base.z_size
        types = composition_count(self.n, z_size)
        self.check_enumerable(self.x_count * types)
        conditional = self.base.conditional()
        p_z = self.base.p_z
        profiles = []
        for counts in compositions(self.n, z_size):
            if np.any((counts > 0) & (p_z == 0)):
                continue
            log_weight = log_multinomial(self.n, counts) + float(np.dot(counts[p_z > 0], np.log(p_z[p_z > 0])))
            masses = np.ones(1)
            for symbol, count in enumerate(counts):
                for _ in range(count):
                    masses = np.kron(conditional[:, symbol], masses)
            profiles.append(ConditionalProfile(weight=float(np.exp(log_weight)), masses=np.sort(masses)[::-1]))
        return profiles


@dataclass(frozen=True, eq=False)
class TupleJoint:
    """
    An explicit joint distribution over (x^n, z^n) index pairs, with no i.i.d.
    structure assumed. Single-letter statistics are reported per coordinate.

    Attributes:
        pmf (JointPMF): Distribution over tuple indices.
        n (int): Nominal block length of the tuples.
    """
    pmf: JointPMF
    n: int = 1
    materialize_threshold: int = DEFAULT_MATERIALIZE_THRESHOLD

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Block length must be positive, got {self.n}.")

    @property
    def x_count(self) -> int:
        return self.pmf.x_size

    @property
    def z_count(self) -> int:
        return self.pmf.z_size

    def check_enumerable(self, outcomes: int = 0) -> None:
        outcomes = outcomes or self.x_count * self.z_count
        if outcomes > self.materialize_threshold:
            raise EnumerationLimitError(f"Tuple joint needs {outcomes} outcomes.")

    @property
    def joint_matrix(self) -> np.ndarray:
        return self.pmf.probs

    @cached_property
    def density_matrix(self) -> np.ndarray:
        return _frozen_array(self.pmf.info_density_values())

    def z_marginal(self) -> np.ndarray:
        return self.pmf.p_z

    def stats(self) -> SourceStats:
        whole = info_stats(self.pmf)
        return SourceStats(
            h_cond=whole.h_cond / self.n,
            sigma2=whole.sigma2 / self.n,
            rho3=whole.rho3 / self.n,
            compression_limit=whole.h_cond / self.n,
        )

    def total_conditional_entropy(self) -> float:
        return info_stats(self.pmf).h_cond

    def spectrum(self) -> InfoSpectrum:
        support = self.pmf.probs > 0
        values = self.density_matrix[support]
        order = np.argsort(values, kind='stable')
        return InfoSpectrum(values=_frozen_array(values[order]),
                            probs=_frozen_array(self.pmf.probs[support][order]))

    def conditional_profiles(self) -> List[ConditionalProfile]:
        conditional = self.pmf.conditional()
        return [
            ConditionalProfile(weight=float(weight), masses=np.sort(conditional[:, z])[::-1])
            for z, weight in enumerate(self.pmf.p_z) if weight > 0
        ]


Source = Union[ProductSource, TupleJoint]


def random_tuple_joint(x_count: int, z_count: int, seed: int, n: int = 1) -> TupleJoint:
    """Draws a joint over x_count * z_count tuple pairs from a flat Dirichlet."""
    _check_seed(seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    weights = rng.dirichlet(np.ones(x_count * z_count)).reshape(x_count, z_count)
    return TupleJoint(pmf=construct_joint(weights / weights.sum()), n=n)


def info_density(source: ProductSource, x: Sequence[int], z: Sequence[int]) -> InfoDensitySample:
    """
    Evaluates W_n = sum_i log 1/P_{X|Z}(x_i|z_i) for one pair of tuples.

    Args:
        source (ProductSource): The i.i.d. source.
        x (Sequence[int]): Symbols x_1..x_n.
        z (Sequence[int]): Symbols z_1..z_n.

    Returns:
        InfoDensitySample: The value in nats; +inf when some P_{X|Z}(x_i|z_i) = 0.

    Raises:
        ValueError: If a tuple has the wrong length, a symbol is out of range, or
                    some coordinate has P_Z(z_i) = 0.
    """
    if len(x) != source.n or len(z) != source.n:
        raise ValueError(f"Tuples must have length {source.n}.")
    base = source.base
    p_z = base.p_z
    terms = []
    for position, (xi, zi) in enumerate(zip(x, z)):
        if not (0 <= xi < base.x_size and 0 <= zi < base.z_size):
            raise ValueError(f"Symbol out of range at coordinate {position}: ({xi}, {zi}).")
        if p_z[zi] == 0:
            raise ValueError(f"P_Z({zi}) = 0 at coordinate {position}; the conditional is undefined.")
        conditional = base.probs[xi, zi] / p_z[zi]
        terms.append(math.inf if conditional == 0 else -math.log(conditional))
    return InfoDensitySample(w=math.fsum(terms))


def sample_arrays(source: ProductSource, seed: int, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draws `count` i.i.d. pairs (x^n, z^n) with a PCG64 generator seeded by `seed`.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Symbol arrays of shape (count, n) for X and Z.
    """
    if count < 1:
        raise ValueError(f"Sample count must be at least 1, got {count}.")
    _check_seed(seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    base = source.base
    cells = rng.choice(base.x_size * base.z_size, size=(count, source.n), p=base.probs.ravel())
    return cells // base.z_size, cells % base.z_size


def sample(source: ProductSource, seed: int, count: int) -> List[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """Seeded samples as a list of (x^n, z^n) tuples; see sample_arrays."""
    xs, zs = sample_arrays(source, seed, count)
    return [(tuple(int(v) for v in x), tuple(int(v) for v in z)) for x, z in zip(xs, zs)]


def sample_indices(source: Source, seed: int, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """Seeded samples as (x^n-index, z^n-index) arrays for either kind of source."""
    if isinstance(source, ProductSource):
        xs, zs = sample_arrays(source, seed, count)
        return tuple_index(xs, source.base.x_size), tuple_index(zs, source.base.z_size)
    if count < 1:
        raise ValueError(f"Sample count must be at least 1, got {count}.")
    _check_seed(seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    cells = rng.choice(source.x_count * source.z_count, size=count, p=source.joint_matrix.ravel())
    return cells // source.z_count, cells % source.z_count


def sample_info_density(pmf: JointPMF, n: int, seed: int, count: int) -> np.ndarray:
    """Monte Carlo draws of W_n, for block lengths whose spectrum is too large to enumerate."""
    if count < 1:
        raise ValueError(f"Sample count must be at least 1, got {count}.")
    _check_seed(seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    support = pmf.probs > 0
    letter_values = pmf.info_density_values()[support]
    masses = pmf.probs[support] / pmf.probs[support].sum()
    cells = rng.choice(len(letter_values), size=(count, n), p=masses)
    return letter_values[cells].sum(axis=1)
