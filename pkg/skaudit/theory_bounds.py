"""
theory_bounds.py

This module computes the reference quantities that the measured codes are checked
against: the optimal distance to a uniform key, the Gaussian lower bound on the
root-n scaled divergence, the single-shot entropy bound behind it, and the
partition of the information density that certifies a floor on the optimal
distance.

Classes:
    DeltaResult: The optimal distance min over M_n and families C of d(P, P_C).
    BoundReport: The Gaussian and single-shot bounds for one threshold b.
    ChainStep: One inequality of the divergence lower-bound chain.
    PartitionReport: The masses of the three information-density regions.
    TailCheck: Exact tail of W_n next to its Gaussian approximation.

Functions:
    gaussian(t) -> (G(t), g(t))
    thm2_lower_bound(b, sigma) -> float
    delta_exact(source) -> DeltaResult
    delta_brute(source) -> DeltaResult
    lemma2_bound(source, encoder, b) -> BoundReport
    thm2_proof_chain(source, encoder, b) -> List[ChainStep]
    partition_report(source, m, b) -> PartitionReport
    thm4_lower_bound(source, b) -> float
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
from scipy import integrate
from scipy.special import erfcx, ndtr

from .security_metrics import conditional_entropy, key_eve_joint, security_report, variational_distance
from .source_core import JointPMF, Source, info_density_spectrum, info_stats
from .sw_codes import EncoderMap

logger = logging.getLogger(__name__)

BERRY_ESSEEN_C1 = 0.4748
BRUTE_FORCE_MAX_SIZE = 4
_STABLE_CUTOFF = -5.0


def gaussian(t: float) -> Tuple[float, float]:
    """Standard normal CDF and density at t; t may be infinite."""
    if math.isnan(t):
        raise ValueError("Gaussian evaluated at NaN.")
    density = math.exp(-t * t / 2.0) / math.sqrt(2.0 * math.pi) if math.isfinite(t) else 0.0
    return float(ndtr(t)), density


def thm2_lower_bound(b: float, sigma: float) -> float:
    """
    Asymptotic floor of D(f_n)/sqrt(n) at second-order rate b:
    b G(b/sigma) + sigma g(b/sigma), which is positive for every finite b.
    """
    if sigma <= 0:
        raise ValueError(f"The Gaussian bound needs sigma > 0, got {sigma}.")
    t = b / sigma
    cdf, density = gaussian(t)
    if t >= _STABLE_CUTOFF:
        return b * cdf + sigma * density
    # t G(t) + g(t) = g(t) [1 + t sqrt(pi/2) erfcx(-t/sqrt(2))]
    return sigma * density * (1.0 + t * math.sqrt(math.pi / 2.0) * float(erfcx(-t / math.sqrt(2.0))))


def thm2_quadrature(b: float, sigma: float) -> float:
    """The same floor as the integral of (b - sigma u) g(u) over u <= b/sigma."""
    if sigma <= 0:
        raise ValueError(f"The Gaussian bound needs sigma > 0, got {sigma}.")
    value, _ = integrate.quad(lambda u: (b - sigma * u) * gaussian(u)[1], -np.inf, b / sigma,
                              epsabs=1e-13, epsrel=1e-12, limit=200)
    return float(value)


@dataclass(frozen=True)
class DeltaResult:
    """
    Attributes:
        delta (float): min over M and C of d(P_{X^nZ^n}, P_C).
        best_m (int): Smallest M attaining the minimum.
        curve (Dict[int, float]): The minimum over C for every M considered.
    """
    delta: float
    best_m: int
    curve: Dict[int, float] = field(default_factory=dict)


def _m_values(source: Source, m_range: Optional[Iterable[int]]) -> np.ndarray:
    if m_range is None:
        return np.arange(1, source.x_count + 1)
    ms = np.array(sorted(set(int(m) for m in m_range)), dtype=np.int64)
    if ms.size == 0 or ms[0] < 1 or ms[-1] > source.x_count:
        raise ValueError(f"Family sizes must lie in 1..{source.x_count}.")
    return ms


def delta_exact(source: Source, m_range: Optional[Iterable[int]] = None) -> DeltaResult:
    """
    Optimal distance between the source and a uniform distribution on M-subsets.

    For a fixed z^n the best M-subset holds the M largest conditional masses.
    With those sorted as p_1 >= p_2 >= ..., prefix sums S(k) and
    r = min(M, #{i: p_i >= 1/M}), the conditional distance is
    S(r) - S(M) + 1 - r/M; the joint distance averages it under P_{Z^n}.
    Product sources group side-information tuples by type, so the cost is one
    sort per type instead of one per z^n.
    """
    ms = _m_values(source, m_range)
    curve = np.zeros(len(ms))
    for profile in source.conditional_profiles():
        masses = profile.masses
        prefix = np.concatenate(([0.0], np.cumsum(masses)))
        count_at_least = len(masses) - np.searchsorted(masses[::-1], 1.0 / ms, side='left')
        r = np.minimum(ms, count_at_least)
        curve += profile.weight * 0.5 * (2.0 * prefix[r] - 2.0 * prefix[ms] + 1.0 + prefix[-1] - 2.0 * r / ms)
    curve = np.clip(curve, 0.0, 1.0)
    best = int(np.argmin(curve))
    logger.debug("delta for n=%d: %.6g at M=%d", source.n, curve[best], ms[best])
    return DeltaResult(delta=float(curve[best]), best_m=int(ms[best]),
                       curve={int(m): float(value) for m, value in zip(ms, curve)})


def delta_brute(source: Source, max_size: int = BRUTE_FORCE_MAX_SIZE) -> DeltaResult:
    """Enumerates every M and every family of M-subsets; only for |X^n|, |Z^n| <= max_size."""
    if source.x_count > max_size or source.z_count > max_size:
        raise ValueError(
            f"Brute force needs |X^n|, |Z^n| <= {max_size}, got {source.x_count} and {source.z_count}."
        )
    joint = source.joint_matrix
    p_z = joint.sum(axis=0)
    curve = {}
    for m in range(1, source.x_count + 1):
        best = math.inf
        subsets = list(itertools.combinations(range(source.x_count), m))
        for family in itertools.product(subsets, repeat=source.z_count):
            target = np.zeros_like(joint)
            for z, members in enumerate(family):
                target[list(members), z] = p_z[z] / m
            best = min(best, variational_distance(joint, target))
        curve[m] = best
    best_m = min(curve, key=lambda m: (curve[m], m))
    return DeltaResult(delta=curve[best_m], best_m=best_m, curve=curve)


@dataclass(frozen=True)
class BoundReport:
    """
    Attributes:
        b (float): Threshold parameter.
        m (int): Key alphabet size of the encoder.
        thm2_rhs (float): b G(b/sigma) + sigma g(b/sigma), or max(b, 0) when sigma = 0.
        lemma2_rhs (float): The single-shot upper bound on H(S_n|Z^n).
        h_sz (float): Exact H(S_n|Z^n).
        tn_mass (float): P(T_n) with T_n = {W_n - nH <= b sqrt(n)}.
        partial_expectation (float): Sum over T_n of P (W_n - nH).
    """
    b: float
    m: int
    thm2_rhs: float
    lemma2_rhs: float
    h_sz: float
    tn_mass: float
    partial_expectation: float

    @property
    def lemma2_slack(self) -> float:
        return self.lemma2_rhs - self.h_sz


def _asymptotic_floor(b: float, sigma: float) -> float:
    return thm2_lower_bound(b, sigma) if sigma > 0 else max(b, 0.0)


def lemma2_bound(source: Source, encoder: EncoderMap, b: float) -> BoundReport:
    """
    Evaluates H(S_n|Z^n) <= sum_{T_n} P W_n + P(T_n^c) (ln M_n - ln P(T_n^c)).

    Raises:
        EnumerationLimitError: If the joint cannot be materialized.
    """
    source.check_enumerable()
    joint = source.joint_matrix
    density = source.density_matrix
    nh = source.total_conditional_entropy()
    support = joint > 0
    in_t = support & (density - nh <= b * math.sqrt(source.n))
    tn_mass = float(joint[in_t].sum())
    outside = float(joint[support & ~in_t].sum())
    on_t = float(np.dot(joint[in_t], density[in_t]))
    tail_term = outside * (math.log(encoder.m) - math.log(outside)) if outside > 0 else 0.0
    h_sz = conditional_entropy(key_eve_joint(source, encoder))
    return BoundReport(
        b=b,
        m=encoder.m,
        thm2_rhs=_asymptotic_floor(b, source.stats().sigma),
        lemma2_rhs=on_t + tail_term,
        h_sz=h_sz,
        tn_mass=tn_mass,
        partial_expectation=on_t - nh * tn_mass,
    )


@dataclass(frozen=True)
class ChainStep:
    """
    One step lhs >= rhs (or lhs == rhs) of the divergence lower-bound chain.
    The residual is lhs - rhs for inequalities and -|lhs - rhs| for equalities.
    """
    name: str
    lhs: float
    rhs: float
    equality: bool = False

    @property
    def residual(self) -> float:
        return -abs(self.lhs - self.rhs) if self.equality else self.lhs - self.rhs

    def holds(self, tolerance: float = 1e-9) -> bool:
        return self.residual >= -tolerance


def thm2_proof_chain(source: Source, encoder: EncoderMap, b: float) -> List[ChainStep]:
    """
    Evaluates every step from D(f_n) down to the finite-n Gaussian-type bound

        D/sqrt(n) >= P(T_n) b_n - sum_{T_n} P (W_n - nH)/sqrt(n) + P(T_n^c) ln P(T_n^c)/sqrt(n),

    plus b sqrt(n) P(T_n) >= sum_{T_n} P (W_n - nH), which makes the middle term
    at least -b P(T_n).
    """
    report = lemma2_bound(source, encoder, b)
    security = security_report(source, encoder)
    root_n = math.sqrt(source.n)
    nh = source.total_conditional_entropy()
    log_m = math.log(encoder.m)
    b_n = (log_m - nh) / root_n
    outside = 1.0 - report.tn_mass
    tail_log = outside * math.log(outside) if outside > 0 else 0.0
    return [
        ChainStep("divergence_identity", security.divergence / root_n,
                  (log_m - report.h_sz) / root_n, equality=True),
        ChainStep("entropy_bound", report.lemma2_rhs, report.h_sz),
        ChainStep("divergence_chain", security.divergence / root_n,
                  report.tn_mass * b_n - report.partial_expectation / root_n + tail_log / root_n),
        ChainStep("partial_expectation", b * root_n * report.tn_mass, report.partial_expectation),
    ]


@dataclass(frozen=True)
class PartitionReport:
    """
    Masses of the regions A+ = {p > e^{b sqrt n}/M}, A- = {p <= e^{-b sqrt n}/M} and
    A0 (the rest) of the conditional probability p = P_{X^n|Z^n}, measured
    against the top-M family C.

    Attributes:
        m (int): Family size.
        b (float): Threshold parameter.
        p_c_aplus (float): P_C(A+).
        p_aminus_cbar (float): P(A- restricted to the family C); min(P, P_C) <= P there.
        p_a0 (float): P(A0).
        bound_exp (float): e^{-b sqrt n}, the bound on each of the first two.
        bound_a0 (float): 2b/(sigma sqrt(2 pi)) + 2 c1 rho/(sigma^3 sqrt(n)); inf when sigma = 0.
    """
    m: int
    b: float
    p_c_aplus: float
    p_aminus_cbar: float
    p_a0: float
    bound_exp: float
    bound_a0: float

    @property
    def lower_bound(self) -> float:
        return 1.0 - (self.p_c_aplus + self.p_aminus_cbar + self.p_a0)


def partition_report(source: Source, m: int, b: float, c1: float = BERRY_ESSEEN_C1) -> PartitionReport:
    """
    Splits the conditional probabilities around 1/M by the factors e^{+-b sqrt n}.

    Raises:
        ValueError: If b <= 0 or m is outside 1..|X^n|.
    """
    if b <= 0:
        raise ValueError(f"The partition needs b > 0, got {b}.")
    if not 1 <= m <= source.x_count:
        raise ValueError(f"Family size must lie in 1..{source.x_count}, got {m}.")
    root_n = math.sqrt(source.n)
    high = math.exp(b * root_n) / m
    low = math.exp(-b * root_n) / m
    c_aplus = aminus_cbar = a0 = 0.0
    for profile in source.conditional_profiles():
        top = profile.masses[:m]
        c_aplus += profile.weight * np.count_nonzero(top > high) / m
        aminus_cbar += profile.weight * float(top[top <= low].sum())
        middle = profile.masses[(profile.masses > low) & (profile.masses <= high)]
        a0 += profile.weight * float(middle.sum())
    stats = source.stats()
    if stats.sigma > 0:
        bound_a0 = 2.0 * b / (stats.sigma * math.sqrt(2.0 * math.pi)) \
            + 2.0 * c1 * stats.rho3 / (stats.sigma ** 3 * root_n)
    else:
        bound_a0 = math.inf
    return PartitionReport(m=m, b=b, p_c_aplus=c_aplus, p_aminus_cbar=aminus_cbar, p_a0=a0,
                           bound_exp=math.exp(-b * root_n), bound_a0=bound_a0)


def thm4_lower_bound(source: Source, b: float, delta: Optional[DeltaResult] = None,
                     c1: float = BERRY_ESSEEN_C1) -> float:
    """
    Certified floor on the optimal distance: 1 - P_C(A+) - P(A- in C) - P(A0),
    evaluated at the family size that attains delta.
    """
    delta = delta or delta_exact(source)
    return partition_report(source, delta.best_m, b, c1).lower_bound


@dataclass(frozen=True)
class TailCheck:
    n: int
    b: float
    exact: float
    gaussian: float
    tolerance: float

    @property
    def within(self) -> bool:
        return abs(self.exact - self.gaussian) <= self.tolerance


def clt_tail_check(pmf: JointPMF, n: int, b: float, c1: float = BERRY_ESSEEN_C1) -> TailCheck:
    """Compares Pr{W_n >= nH + b sqrt n} with 1 - G(b/sigma) under the Berry-Esseen tolerance."""
    stats = info_stats(pmf)
    if stats.sigma <= 0:
        raise ValueError("A degenerate source has no Gaussian tail.")
    spectrum = info_density_spectrum(pmf, n)
    exact = spectrum.tail(n * stats.h_cond + b * math.sqrt(n))
    return TailCheck(n=n, b=b, exact=exact, gaussian=1.0 - gaussian(b / stats.sigma)[0],
                     tolerance=c1 * stats.rho3 / (stats.sigma ** 3 * math.sqrt(n)))


def fit_root_n_slope(ns: Iterable[int], values: Iterable[float]) -> float:
    """Least-squares K in values ~ K sqrt(n), fitted through the origin."""
    roots = np.sqrt(np.asarray(list(ns), dtype=np.float64))
    values = np.asarray(list(values), dtype=np.float64)
    if roots.size == 0 or roots.size != values.size:
        raise ValueError("Slope fit needs matching, nonempty samples.")
    return float(np.dot(roots, values) / np.dot(roots, roots))
