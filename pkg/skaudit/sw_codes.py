"""
sw_codes.py

This module builds Slepian-Wolf codes with full side information: an encoder
f_n: X^n -> {0..M_n-1} that sends a bin index, and a decoder
phi_n: {0..M_n-1} x Z^n -> X^n that recovers x^n from the bin and z^n. The same
encoder doubles as the privacy amplification function that distills the key.

Encoders are either explicit tables or seeded random binnings. A seeded binning
hashes every tuple index with SplitMix64, so a code is reproducible from
(n, M, seed) alone and can be stored in a small manifest.

Classes:
    EncoderMap: An encoder table, optionally tagged with the seed that produced it.
    Decoder: A decoder table indexed (bin, z^n-index).
    CodePair: An encoder with a matching decoder.
    ErrorEstimate: A decoding error probability, exact or Monte Carlo.

Functions:
    random_binning(n, m, seed, x_size) -> EncoderMap
    map_decoder(source, encoder) -> Decoder
    repair_decoder(code) -> CodePair
    error_probability(source, code, mode) -> ErrorEstimate
    converse_bound(source, m, alpha_grid) -> float
    second_order_rate(n, m, h_cond) -> float
    save_code_manifest(code, filename) / load_code_manifest(filename, source)
"""

from __future__ import annotations

import itertools
import logging
import math
import os
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np
import yaml
from scipy import stats as scipy_stats

from .source_core import EnumerationLimitError, Source, _check_seed, sample_indices, sample_info_density

logger = logging.getLogger(__name__)

DEFAULT_TRIALS = 100_000
CONFIDENCE = 0.99
CONVERSE_GRID_POINTS = 61
EXHAUSTIVE_DECODER_LIMIT = 2 ** 16
COLUMN_BLOCK = 2 ** 22

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)


def _splitmix64(values: np.ndarray) -> np.ndarray:
    z = values + _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * _MIX_1
    z = (z ^ (z >> np.uint64(27))) * _MIX_2
    return z ^ (z >> np.uint64(31))


def _seeded_table(x_count: int, m: int, seed: int) -> np.ndarray:
    key = _splitmix64(np.array([seed], dtype=np.uint64))[0]
    hashed = _splitmix64(np.arange(x_count, dtype=np.uint64) ^ key)
    return (hashed % np.uint64(m)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class EncoderMap:
    """
    An encoder f_n given by its table over all x^n indices.

    Attributes:
        n (int): Block length.
        m (int): Number of bins M_n.
        x_count (int): |X|^n.
        table (np.ndarray): Bin of every x^n index.
        seed (Optional[int]): Seed of a random binning, None for explicit tables.
    """
    n: int
    m: int
    x_count: int
    table: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"An encoder needs at least one bin, got M={self.m}.")
        table = np.array(self.table, dtype=np.int64)
        if table.shape != (self.x_count,):
            raise ValueError(f"Encoder table must have {self.x_count} entries, got shape {table.shape}.")
        if table.size and (table.min() < 0 or table.max() >= self.m):
            raise ValueError(f"Encoder table values must lie in range({self.m}).")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    def encode(self, index):
        return self.table[index]

    def preimage(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.table == s)

    def bin_sizes(self) -> np.ndarray:
        return np.bincount(self.table, minlength=self.m)


@dataclass(frozen=True, eq=False)
class Decoder:
    """
    A decoder phi_n as a table indexed (bin, z^n-index).

    Attributes:
        n (int): Block length.
        m (int): Number of bins.
        z_count (int): |Z|^n.
        table (np.ndarray): Decoded x^n index for every (bin, z^n) pair.
        repaired (bool): Whether the table went through repair_decoder.
        is_map (bool): Whether the table was built by map_decoder.
    """
    n: int
    m: int
    z_count: int
    table: np.ndarray
    repaired: bool = False
    is_map: bool = False

    def __post_init__(self):
        table = np.array(self.table, dtype=np.int64)
        if table.shape != (self.m, self.z_count):
            raise ValueError(f"Decoder table must have shape {(self.m, self.z_count)}, got {table.shape}.")
        if table.size and table.min() < 0:
            raise ValueError("Decoder table holds a negative index.")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)


@dataclass(frozen=True, eq=False)
class CodePair:
    encoder: EncoderMap
    decoder: Decoder

    def __post_init__(self):
        if self.encoder.n != self.decoder.n or self.encoder.m != self.decoder.m:
            raise ValueError(
                f"Encoder (n={self.encoder.n}, M={self.encoder.m}) and decoder "
                f"(n={self.decoder.n}, M={self.decoder.m}) do not match."
            )
        if self.decoder.table.size and self.decoder.table.max() >= self.encoder.x_count:
            raise ValueError(f"Decoder outputs must lie in range({self.encoder.x_count}).")

    def is_injective_on_bins(self) -> bool:
        """True when f_n(phi_n(s, z^n)) = s for every nonempty bin s and every z^n."""
        nonempty = self.encoder.bin_sizes() > 0
        consistent = self.encoder.table[self.decoder.table] == np.arange(self.encoder.m)[:, None]
        return bool(consistent[nonempty].all())


def random_binning(n: int, m: int, seed: int, x_size: int = 2) -> EncoderMap:
    """
    Assigns every x^n a bin by hashing its index with a seeded SplitMix64.

    Args:
        n (int): Block length.
        m (int): Number of bins, at least 1.
        seed (int): Seed in [0, 2^64).
        x_size (int): Single-letter alphabet size |X|.

    Returns:
        EncoderMap: The same table for the same (n, m, seed, x_size).
    """
    if n < 1:
        raise ValueError(f"Block length must be positive, got {n}.")
    if m < 1:
        raise ValueError(f"An encoder needs at least one bin, got M={m}.")
    _check_seed(seed)
    x_count = x_size ** n
    return EncoderMap(n=n, m=m, x_count=x_count, table=_seeded_table(x_count, m, int(seed)), seed=int(seed))


def seeded_encoder(source: Source, m: int, seed: int) -> EncoderMap:
    """A seeded binning sized for any source; equals random_binning for product sources."""
    if m < 1:
        raise ValueError(f"An encoder needs at least one bin, got M={m}.")
    _check_seed(seed)
    return EncoderMap(n=source.n, m=m, x_count=source.x_count,
                      table=_seeded_table(source.x_count, m, int(seed)), seed=int(seed))


def identity_encoder(n: int, x_size: int = 2) -> EncoderMap:
    x_count = x_size ** n
    return EncoderMap(n=n, m=x_count, x_count=x_count, table=np.arange(x_count))


def constant_encoder(n: int, x_size: int = 2) -> EncoderMap:
    x_count = x_size ** n
    return EncoderMap(n=n, m=1, x_count=x_count, table=np.zeros(x_count, dtype=np.int64))


def encoder_from_table(table, n: int, m: int) -> EncoderMap:
    table = np.asarray(table, dtype=np.int64)
    return EncoderMap(n=n, m=m, x_count=len(table), table=table)


def compose_encoder(encoder: EncoderMap, g_table, m_out: int) -> EncoderMap:
    """Returns g o f_n for a post-map g: range(encoder.m) -> range(m_out)."""
    g_table = np.asarray(g_table, dtype=np.int64)
    if g_table.shape != (encoder.m,):
        raise ValueError(f"Post-map must have {encoder.m} entries, got shape {g_table.shape}.")
    return EncoderMap(n=encoder.n, m=m_out, x_count=encoder.x_count, table=g_table[encoder.table])


def _check_compatible(source: Source, encoder: EncoderMap) -> None:
    if encoder.n != source.n or encoder.x_count != source.x_count:
        raise ValueError(
            f"Encoder (n={encoder.n}, |X^n|={encoder.x_count}) does not match "
            f"source (n={source.n}, |X^n|={source.x_count})."
        )


def map_decoder(source: Source, encoder: EncoderMap) -> Decoder:
    """
    Builds the maximum a posteriori decoder for an encoder.

    For every bin s and side information z^n the decoder picks the x^n in
    f_n^{-1}(s) with the largest P_{X^nZ^n}(x^n, z^n), breaking ties by the
    smallest index. Empty bins decode to index 0.

    Raises:
        ValueError: If encoder and source do not match.
        EnumerationLimitError: If the joint cannot be materialized.
    """
    _check_compatible(source, encoder)
    source.check_enumerable()
    joint = source.joint_matrix
    order = np.argsort(encoder.table, kind='stable')
    sizes = encoder.bin_sizes()
    nonempty = np.flatnonzero(sizes)
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))[nonempty]
    row_group = np.repeat(np.arange(len(nonempty)), sizes[nonempty])
    table = np.zeros((encoder.m, source.z_count), dtype=np.int64)
    block = max(1, COLUMN_BLOCK // max(1, source.x_count))
    for first in range(0, source.z_count, block):
        grouped = joint[order, first:first + block]
        best = np.maximum.reduceat(grouped, starts, axis=0)
        candidates = np.where(grouped == best[row_group], order[:, None], source.x_count)
        table[nonempty, first:first + block] = np.minimum.reduceat(candidates, starts, axis=0)
    logger.debug("MAP decoder for n=%d, M=%d: %d nonempty bins", encoder.n, encoder.m, len(nonempty))
    return Decoder(n=encoder.n, m=encoder.m, z_count=source.z_count, table=table, is_map=True)


def repair_decoder(code: CodePair) -> CodePair:
    """
    Forces f_n(phi_n(s, z^n)) = s on every nonempty bin.

    Whenever the decoded index lies outside bin s, it is replaced by the smallest
    index of that bin. The decoding error probability can only go down. A MAP
    table already decodes inside every nonempty bin and stays a MAP table.
    """
    encoder = code.encoder
    sizes = encoder.bin_sizes()
    smallest = np.full(encoder.m, encoder.x_count, dtype=np.int64)
    np.minimum.at(smallest, encoder.table, np.arange(encoder.x_count))
    table = np.array(code.decoder.table)
    wrong_bin = encoder.table[table] != np.arange(encoder.m)[:, None]
    fix = wrong_bin & (sizes > 0)[:, None]
    table[fix] = np.broadcast_to(smallest[:, None], table.shape)[fix]
    if fix.any():
        logger.debug("Repaired %d decoder entries", int(fix.sum()))
    decoder = Decoder(n=code.decoder.n, m=code.decoder.m, z_count=code.decoder.z_count,
                      table=table, repaired=True, is_map=code.decoder.is_map)
    return CodePair(encoder=encoder, decoder=decoder)


@dataclass(frozen=True)
class ErrorEstimate:
    """
    A decoding error probability.

    Attributes:
        eps (float): Exact value or Monte Carlo estimate.
        half_width (float): Largest distance from eps to a bound of the 99%
            Clopper-Pearson interval; 0 for exact values.
        trials (int): Monte Carlo trials; 0 for exact values.
        ci_low (float): Lower end of the interval.
        ci_high (float): Upper end of the interval.
    """
    eps: float
    half_width: float = 0.0
    trials: int = 0
    ci_low: float = 0.0
    ci_high: float = 0.0

    @property
    def exact(self) -> bool:
        return self.trials == 0


def error_probability(source: Source, code: CodePair, mode: str = "exact",
                      seed: int = 0, trials: int = DEFAULT_TRIALS) -> ErrorEstimate:
    """
    Computes eps_n = Pr{phi_n(f_n(X^n), Z^n) != X^n}.

    Args:
        source: The source the code is used on.
        code (CodePair): Encoder and decoder.
        mode (str): "exact" sums the joint over all error cells; "mc" samples.
        seed (int): Sampling seed for "mc".
        trials (int): Number of samples for "mc".

    Returns:
        ErrorEstimate: With an exact 99% binomial interval in "mc" mode. The interval keeps
            a positive width when no errors are observed.
    """
    _check_compatible(source, code.encoder)
    encoder, decoder = code.encoder, code.decoder
    if mode == "exact":
        source.check_enumerable()
        joint = source.joint_matrix
        eps = 0.0
        block = max(1, COLUMN_BLOCK // max(1, source.z_count))
        for first in range(0, source.x_count, block):
            indices = np.arange(first, min(first + block, source.x_count))
            decoded = decoder.table[encoder.table[indices]]
            eps += float(joint[indices][decoded != indices[:, None]].sum())
        eps = min(max(eps, 0.0), 1.0)
        return ErrorEstimate(eps=eps, ci_low=eps, ci_high=eps)
    if mode == "mc":
        xs, zs = sample_indices(source, seed, trials)
        errors = int(np.count_nonzero(decoder.table[encoder.table[xs], zs] != xs))
        eps = errors / trials
        interval = scipy_stats.binomtest(errors, trials).proportion_ci(confidence_level=CONFIDENCE, method="exact")
        low, high = float(interval.low), float(interval.high)
        return ErrorEstimate(eps=eps, half_width=max(eps - low, high - eps), trials=trials, ci_low=low, ci_high=high)
    raise ValueError(f"Unknown error mode '{mode}'; expected 'exact' or 'mc'.")


def second_order_rate(n: int, m: int, h_cond: float) -> float:
    """b_n = (ln M_n - n H(X|Z)) / sqrt(n)."""
    if n < 1:
        raise ValueError(f"Block length must be positive, got {n}.")
    if m < 1:
        raise ValueError(f"Key alphabet size must be at least 1, got {m}.")
    return (math.log(m) - n * h_cond) / math.sqrt(n)


def default_alpha_grid(source: Source, points: int = CONVERSE_GRID_POINTS) -> np.ndarray:
    """Evenly spaced thresholds over n H(X|Z) +- 3 sigma sqrt(n)."""
    stats = source.stats()
    center = source.total_conditional_entropy()
    spread = 3.0 * stats.sigma * math.sqrt(source.n) if stats.sigma > 0 else 1.0
    return np.linspace(center - spread, center + spread, points)


def converse_terms(source: Source, m: int, alpha_grid: Iterable[float],
                   seed: Optional[int] = None, trials: Optional[int] = None) -> np.ndarray:
    """
    Evaluates Pr{W_n >= alpha} - M_n e^{-alpha} on every threshold of the grid.

    The tail comes from the exact spectrum of W_n; when that is too large and a
    seed and trial count are given, it is estimated from samples instead.
    """
    alphas = np.asarray(list(alpha_grid), dtype=np.float64)
    if alphas.size == 0:
        raise ValueError("The alpha grid is empty.")
    try:
        spectrum = source.spectrum()
        tails = np.array([spectrum.tail(alpha) for alpha in alphas])
    except EnumerationLimitError:
        if seed is None or trials is None or not hasattr(source, "base"):
            raise
        draws = sample_info_density(source.base, source.n, seed, trials)
        tails = np.array([np.mean(draws >= alpha) for alpha in alphas])
    return tails - m * np.exp(-alphas)


def converse_bound(source: Source, m: int, alpha_grid: Optional[Iterable[float]] = None,
                   seed: Optional[int] = None, trials: Optional[int] = None) -> float:
    """
    Lower bound on the error of any code with M_n bins:
    eps_n >= sup over alpha of Pr{W_n >= alpha} - M_n e^{-alpha}.
    """
    if alpha_grid is None:
        alpha_grid = default_alpha_grid(source)
    return float(np.max(converse_terms(source, m, alpha_grid, seed=seed, trials=trials)))


def best_code_search(source: Source, m: int, seeds: Iterable[int]) -> Tuple[CodePair, ErrorEstimate]:
    """Keeps the repaired MAP code with the smallest exact error over a list of seeds."""
    best = None
    for seed in seeds:
        encoder = seeded_encoder(source, m, seed)
        code = repair_decoder(CodePair(encoder, map_decoder(source, encoder)))
        estimate = error_probability(source, code)
        if best is None or estimate.eps < best[1].eps:
            best = (code, estimate)
    if best is None:
        raise ValueError("No seeds to search over.")
    return best


def exhaustive_best_decoder(source: Source, encoder: EncoderMap) -> float:
    """
    Minimal error over every decoder table for a fixed encoder.

    Only for tiny cases: the number of tables, |X^n|^(M_n |Z^n|), must not exceed 2^16.
    """
    _check_compatible(source, encoder)
    cells = encoder.m * source.z_count
    if encoder.x_count ** cells > EXHAUSTIVE_DECODER_LIMIT:
        raise ValueError(f"{encoder.x_count}^{cells} decoder tables exceed the limit of {EXHAUSTIVE_DECODER_LIMIT}.")
    joint = source.joint_matrix
    in_bin = encoder.table[None, :] == np.arange(encoder.m)[:, None]
    # gain[s, z, x]: probability of decoding correctly when (s, z) decodes to x
    gain = in_bin[:, None, :] * joint.T[None, :, :]
    gain = gain.reshape(cells, encoder.x_count)
    choices = np.array(list(itertools.product(range(encoder.x_count), repeat=cells)), dtype=np.int64)
    correct = gain[np.arange(cells)[None, :], choices].sum(axis=1)
    return float(max(0.0, 1.0 - correct.max()))


def save_code_manifest(code: CodePair, filename: str) -> List[str]:
    """
    Writes a code as a YAML manifest. Seeded encoders are stored by seed; explicit
    encoder tables go to a .npy file next to the manifest. A MAP decoder is stored
    as "map" and rebuilt on load; any other decoder table is saved as a .npy file.

    Returns:
        List[str]: Every file written.
    """
    encoder = code.encoder
    manifest = {
        "n": encoder.n,
        "m": encoder.m,
        "x_count": encoder.x_count,
        "decoder": "map",
        "repaired": bool(code.decoder.repaired),
    }
    written = [filename]
    stem = os.path.splitext(filename)[0]
    if encoder.seed is not None:
        manifest["encoder"] = "seeded"
        manifest["seed"] = encoder.seed
    else:
        table_path = stem + "_encoder.npy"
        np.save(table_path, encoder.table)
        manifest["encoder"] = "table"
        manifest["table_path"] = os.path.basename(table_path)
        written.append(table_path)
    if not code.decoder.is_map:
        decoder_path = stem + "_decoder.npy"
        np.save(decoder_path, code.decoder.table)
        manifest["decoder"] = "table"
        manifest["decoder_path"] = os.path.basename(decoder_path)
        written.append(decoder_path)
    with open(filename, "w", encoding="utf-8") as file:
        yaml.safe_dump(manifest, file, sort_keys=True)
    return written


def load_code_manifest(filename: str, source: Source) -> CodePair:
    """
    Rebuilds a code from a YAML manifest. A MAP decoder is recomputed from the
    source; a stored decoder table is read back as it was saved.

    Raises:
        FileNotFoundError: If the manifest or its table file is missing.
        ValueError: If the manifest is malformed or does not fit the source.
    """
    if not os.path.isfile(filename):
        raise FileNotFoundError(f"Code manifest '{filename}' not found.")
    with open(filename, "r", encoding="utf-8") as file:
        try:
            manifest = yaml.safe_load(file)
        except yaml.YAMLError as exc:
            raise ValueError(f"Error parsing code manifest '{filename}': {exc}")
    if not isinstance(manifest, dict):
        raise ValueError(f"Code manifest '{filename}' must be a mapping.")
    missing = [key for key in ("n", "m", "x_count", "encoder") if key not in manifest]
    if missing:
        raise ValueError(f"Code manifest '{filename}' lacks {', '.join(missing)}.")
    n, m, x_count = int(manifest["n"]), int(manifest["m"]), int(manifest["x_count"])
    if manifest["encoder"] == "seeded":
        seed = int(manifest["seed"])
        _check_seed(seed)
        encoder = EncoderMap(n=n, m=m, x_count=x_count, table=_seeded_table(x_count, m, seed), seed=seed)
    elif manifest["encoder"] == "table":
        table_path = os.path.join(os.path.dirname(filename), manifest.get("table_path", ""))
        if not os.path.isfile(table_path):
            raise FileNotFoundError(f"Encoder table '{table_path}' not found.")
        encoder = EncoderMap(n=n, m=m, x_count=x_count, table=np.load(table_path))
    else:
        raise ValueError(f"Unknown encoder form '{manifest['encoder']}' in '{filename}'.")
    decoder_form = manifest.get("decoder", "map")
    if decoder_form == "table":
        decoder_path = os.path.join(os.path.dirname(filename), manifest.get("decoder_path", ""))
        if not os.path.isfile(decoder_path):
            raise FileNotFoundError(f"Decoder table '{decoder_path}' not found.")
        decoder = Decoder(n=n, m=m, z_count=source.z_count, table=np.load(decoder_path),
                          repaired=bool(manifest.get("repaired", False)))
        return CodePair(encoder, decoder)
    if decoder_form != "map":
        raise ValueError(f"Unknown decoder '{decoder_form}' in '{filename}'.")
    code = CodePair(encoder, map_decoder(source, encoder))
    return repair_decoder(code) if manifest.get("repaired", False) else code
