"""
security_metrics.py

This module measures how far a distilled key is from an ideal one. It builds the
key-Eve joint P_{S_nZ^n} induced by an encoder f_n, compares it with the ideal
P_{U_n} x P_{Z^n} under the variational distance and the divergence, and packs the
three secrecy criteria (normalized divergence, variational distance, divergence)
together with the optimal distinguishing probability into a SecurityReport.

Classes:
    KeyEveJoint: The distribution of (S_n, Z^n) for a given encoder.
    SecurityReport: All secrecy figures of one encoder on one source.

Functions:
    variational_distance(p, q) -> float
    kl_divergence(p, q) -> float
    key_eve_joint(source, encoder) -> KeyEveJoint
    security_report(source, encoder) -> SecurityReport
    brute_force_discrimination(kj) -> float
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.special import entr, rel_entr

from .source_core import PMF_TOLERANCE, Source
from .sw_codes import EncoderMap, second_order_rate
from .utilities import format_number

logger = logging.getLogger(__name__)

DISTRIBUTION_TOLERANCE = 1e-9
IDENTITY_TOLERANCE = 1e-9
DISCRIMINATION_LIMIT = 2 ** 24
EXHAUSTIVE_SUBSET_LIMIT = 16

REPORT_CSV_FIELDS = [
    "n", "M", "seed", "eps", "delta", "D_nats", "D_over_n", "D_over_sqrt_n", "b_n", "distinguish",
]


def _as_distributions(p, q):
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"Distributions are indexed differently: {p.shape} vs {q.shape}.")
    for name, dist in (("p", p), ("q", q)):
        if abs(dist.sum() - 1.0) > DISTRIBUTION_TOLERANCE:
            raise ValueError(f"Distribution {name} sums to {dist.sum()!r}, not 1.")
    return p, q


def variational_distance(p, q) -> float:
    """
    Returns d(p, q) = (1/2) sum |p - q|, the variational distance divided by 2.

    Raises:
        ValueError: If the index sets differ or either input is not normalized.
    """
    p, q = _as_distributions(p, q)
    return float(min(1.0, 0.5 * np.abs(p - q).sum()))


def kl_divergence(p, q) -> float:
    """
    Returns D(p || q) in nats, with 0 log(0/q) = 0 and +inf when p puts mass
    where q has none.

    Raises:
        ValueError: If the index sets differ or either input is not normalized.
    """
    p, q = _as_distributions(p, q)
    return float(rel_entr(p, q).sum())


def _bin_sums(table: np.ndarray, m: int, rows: np.ndarray) -> np.ndarray:
    """Row sums of `rows` grouped by bin; empty bins stay zero."""
    sizes = np.bincount(table, minlength=m)
    nonempty = np.flatnonzero(sizes)
    sums = np.zeros((m, rows.shape[1]))
    if nonempty.size:
        starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))[nonempty]
        sums[nonempty] = np.add.reduceat(rows[np.argsort(table, kind="stable")], starts, axis=0)
    return sums


@dataclass(frozen=True, eq=False)
class KeyEveJoint:
    """
    The joint distribution of the key S_n and Eve's observation Z^n.

    Attributes:
        n (int): Block length.
        m (int): Key alphabet size M_n.
        probs (np.ndarray): Matrix indexed (s, z^n-index).
    """
    n: int
    m: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[0] != self.m:
            raise ValueError(f"Key-Eve matrix must have {self.m} rows, got shape {probs.shape}.")
        if abs(probs.sum() - 1.0) > PMF_TOLERANCE:
            raise ValueError(f"Key-Eve matrix sums to {probs.sum()!r}, not 1.")
        probs = probs.copy()
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def z_marginal(self) -> np.ndarray:
        return self.probs.sum(axis=0)

    @property
    def cells(self) -> int:
        return self.probs.size


def key_eve_joint(source: Source, encoder: EncoderMap) -> KeyEveJoint:
    """
    Computes P_{S_nZ^n}(s, z^n) = sum over x^n in f_n^{-1}(s) of P_{X^nZ^n}(x^n, z^n).

    Args:
        source: A ProductSource or TupleJoint.
        encoder (EncoderMap): The privacy amplification function f_n.

    Returns:
        KeyEveJoint: The induced joint; its z-marginal equals P_{Z^n}.

    Raises:
        ValueError: If encoder and source disagree on n or on |X^n|.
        EnumerationLimitError: If the joint is too large to enumerate.
    """
    if encoder.n != source.n or encoder.x_count != source.x_count:
        raise ValueError(
            f"Encoder (n={encoder.n}, |X^n|={encoder.x_count}) does not match "
            f"source (n={source.n}, |X^n|={source.x_count})."
        )
    source.check_enumerable()
    probs = _bin_sums(encoder.table, encoder.m, source.joint_matrix)
    return KeyEveJoint(n=source.n, m=encoder.m, probs=probs)


def regroup(kj: KeyEveJoint, g_table, m_out: int) -> KeyEveJoint:
    """Applies a post-map g: {0..m-1} -> {0..m_out-1} to the key alphabet."""
    g_table = np.asarray(g_table, dtype=np.int64)
    if g_table.shape != (kj.m,) or g_table.min() < 0 or g_table.max() >= m_out:
        raise ValueError(f"Post-map must send {kj.m} key values into range({m_out}).")
    return KeyEveJoint(n=kj.n, m=m_out, probs=_bin_sums(g_table, m_out, kj.probs))


def ideal_joint(kj: KeyEveJoint) -> np.ndarray:
    """P_{U_n} x P_{Z^n}: a uniform key independent of Eve."""
    return np.outer(np.full(kj.m, 1.0 / kj.m), kj.z_marginal)


def conditional_entropy(kj: KeyEveJoint) -> float:
    """H(S_n|Z^n) = H(S_n, Z^n) - H(Z^n) in nats."""
    return max(0.0, float(entr(kj.probs).sum() - entr(kj.z_marginal).sum()))


@dataclass(frozen=True)
class SecurityReport:
    """
    Secrecy figures of one encoder.

    Attributes:
        n (int): Block length.
        m (int): Key alphabet size.
        delta_metric (float): Delta(f_n), the variational distance to the ideal.
        divergence (float): D(f_n) in nats.
        normalized (float): D(f_n)/n.
        root_scaled (float): D(f_n)/sqrt(n).
        second_order_rate (float): b_n = (ln M_n - n H(X|Z)) / sqrt(n).
        distinguish_prob (float): Optimal probability of telling actual from ideal.
        h_sz (float): H(S_n|Z^n) in nats.
        identity_residual (float): |direct divergence sum - (ln M_n - H(S_n|Z^n))|.
    """
    n: int
    m: int
    delta_metric: float
    divergence: float
    normalized: float
    root_scaled: float
    second_order_rate: float
    distinguish_prob: float
    h_sz: float
    identity_residual: float

    @property
    def pinsker_slack(self) -> float:
        """sqrt(D/2) - Delta; nonnegative by Pinsker's inequality."""
        return math.sqrt(self.divergence / 2.0) - self.delta_metric

    @property
    def divergence_floor_slack(self) -> float:
        """D - 2 Delta^2; nonnegative by Pinsker's inequality in nats."""
        return self.divergence - 2.0 * self.delta_metric ** 2


def security_report(source: Source, encoder: EncoderMap) -> SecurityReport:
    """
    Evaluates every secrecy criterion of an encoder exactly.

    The divergence is computed through D = ln M - H(S_n|Z^n), which avoids summing
    many near-zero p log(p/q) terms; the direct sum is kept as a cross-check and
    its disagreement is stored in identity_residual.
    """
    kj = key_eve_joint(source, encoder)
    ideal = ideal_joint(kj)
    h_sz = conditional_entropy(kj)
    divergence = max(math.log(kj.m) - h_sz, 0.0)
    direct = kl_divergence(kj.probs, ideal)
    residual = abs(direct - divergence)
    if residual > IDENTITY_TOLERANCE:
        logger.warning("Divergence identity off by %.3g for n=%d, M=%d", residual, kj.n, kj.m)
    delta_metric = variational_distance(kj.probs, ideal)
    n = source.n
    return SecurityReport(
        n=n,
        m=kj.m,
        delta_metric=delta_metric,
        divergence=divergence,
        normalized=divergence / n,
        root_scaled=divergence / math.sqrt(n),
        second_order_rate=second_order_rate(n, kj.m, source.total_conditional_entropy() / n),
        distinguish_prob=(1.0 + delta_metric) / 2.0,
        h_sz=h_sz,
        identity_residual=residual,
    )


def brute_force_discrimination(kj: KeyEveJoint) -> float:
    """
    Maximizes (1/2)[P_{SZ}(A) + P_{UZ}(A^c)] over subsets A of M_n x Z^n.

    Up to 16 cells every subset is enumerated; beyond that the maximizing subset
    is taken cell by cell (A = cells where the actual mass is at least the ideal
    mass), which is exact.

    Raises:
        ValueError: If the table has more than 2^24 cells.
    """
    if kj.cells > DISCRIMINATION_LIMIT:
        raise ValueError(f"Discrimination needs {kj.cells} cells (limit {DISCRIMINATION_LIMIT}).")
    actual = kj.probs.ravel()
    ideal = ideal_joint(kj).ravel()
    if kj.cells <= EXHAUSTIVE_SUBSET_LIMIT:
        subsets = ((np.arange(2 ** kj.cells)[:, None] >> np.arange(kj.cells)) & 1).astype(bool)
        scores = 0.5 * (subsets @ actual + (~subsets) @ ideal)
        return float(scores.max())
    chosen = actual >= ideal
    return float(0.5 * (actual[chosen].sum() + ideal[~chosen].sum()))


def report_row(report: SecurityReport, seed: int, eps: float) -> List[str]:
    """Formats a report under REPORT_CSV_FIELDS."""
    return [
        str(report.n),
        str(report.m),
        str(seed),
        format_number(eps),
        format_number(report.delta_metric),
        format_number(report.divergence),
        format_number(report.normalized),
        format_number(report.root_scaled),
        format_number(report.second_order_rate),
        format_number(report.distinguish_prob),
    ]
