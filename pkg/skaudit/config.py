"""
config.py

This module defines the ExperimentConfig dataclass, the single container for every
setting of a sweep or a verification run: the source, the grid of block lengths,
the rate policy that picks M_n, the binning seeds, the thresholds b, the error
evaluation mode and the output location.
"""

import math
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List

from .source_core import DEFAULT_MATERIALIZE_THRESHOLD, MAX_SEED, parse_source_spec
from .theory_bounds import BERRY_ESSEEN_C1

RATE_POLICIES = ("fixed", "entropy", "list")
ERROR_MODES = ("exact", "mc")
THREADS_ENV = "SKAUDIT_THREADS"


@dataclass
class ExperimentConfig:
    """
    Settings of one experiment.

    Attributes:
        source (str): Preset ("bsc:0.1", "indep:2", "det:3") or path to a matrix file.
        n_values (List[int]): Block lengths to sweep.
        rate_policy (str): "fixed" uses fixed_m, "entropy" uses M = ceil(e^{n(H+margin)}),
            "list" uses every value of m_list.
        margin (float): Rate margin in nats for the entropy policy.
        fixed_m (int): Key alphabet size for the fixed policy.
        m_list (List[int]): Key alphabet sizes for the list policy.
        seeds (List[int]): Binning seeds.
        b_values (List[float]): Thresholds for the bound computations.
        mode (str): "exact" or "mc" decoding error evaluation.
        trials (int): Monte Carlo trials in mc mode.
        output_dir (str): Directory for CSV files and the manifest.
        materialize_threshold (int): Largest |X^n||Z^n| enumerated exactly.
        c1 (float): Berry-Esseen constant.
        threads (int): Worker count; 0 means one per CPU.
        random_joints (int): Random 4x4 tuple joints in the verification suite.
        random_pmfs (int): Random small PMFs checked against the brute-force oracle.
        perturb_delta (float): Added to delta in the trade-off check; nonzero only to
            make sure the check can fail.
    """
    source: str = "bsc:0.1"
    n_values: List[int] = field(default_factory=lambda: list(range(1, 9)))
    rate_policy: str = "entropy"
    margin: float = 0.0
    fixed_m: int = 2
    m_list: List[int] = field(default_factory=lambda: [1, 2])
    seeds: List[int] = field(default_factory=lambda: list(range(20)))
    b_values: List[float] = field(default_factory=lambda: [0.0, 0.1, 0.3, 0.5])
    mode: str = "exact"
    trials: int = 100_000
    output_dir: str = "results"
    materialize_threshold: int = DEFAULT_MATERIALIZE_THRESHOLD
    c1: float = BERRY_ESSEEN_C1
    threads: int = 0
    random_joints: int = 20
    random_pmfs: int = 50
    perturb_delta: float = 0.0

    def __post_init__(self):
        """
        Validates the settings.

        Raises:
            ValueError: If a range is empty or a value is out of bounds; the message
                        names the offending field.
        """
        parse_source_spec(self.source)
        if not self.n_values or min(self.n_values) < 1:
            raise ValueError("n_values must be a nonempty list of positive block lengths.")
        if self.rate_policy not in RATE_POLICIES:
            raise ValueError(f"rate_policy must be one of {', '.join(RATE_POLICIES)}, got '{self.rate_policy}'.")
        if not math.isfinite(self.margin):
            raise ValueError("margin must be finite.")
        if self.fixed_m < 1:
            raise ValueError("fixed_m must be at least 1.")
        if not self.m_list or min(self.m_list) < 1:
            raise ValueError("m_list must be a nonempty list of sizes >= 1.")
        if not self.seeds or min(self.seeds) < 0 or max(self.seeds) >= MAX_SEED:
            raise ValueError("seeds must be a nonempty list of integers in [0, 2**64).")
        if not self.b_values or not all(math.isfinite(b) for b in self.b_values):
            raise ValueError("b_values must be a nonempty list of finite numbers.")
        if self.mode not in ERROR_MODES:
            raise ValueError(f"mode must be 'exact' or 'mc', got '{self.mode}'.")
        if self.trials < 1:
            raise ValueError("trials must be at least 1.")
        if self.materialize_threshold < 1:
            raise ValueError("materialize_threshold must be positive.")
        if not self.c1 > 0:
            raise ValueError("c1 must be positive.")
        if self.threads < 0:
            raise ValueError("threads cannot be negative.")
        if self.random_joints < 0 or self.random_pmfs < 0:
            raise ValueError("random_joints and random_pmfs cannot be negative.")
        if not math.isfinite(self.perturb_delta):
            raise ValueError("perturb_delta must be finite.")

    def policy_m(self, n: int, h_cond: float) -> List[int]:
        """Key alphabet sizes the rate policy assigns to block length n."""
        if self.rate_policy == "fixed":
            return [self.fixed_m]
        if self.rate_policy == "list":
            return sorted(set(self.m_list))
        return [max(1, math.ceil(math.exp(n * (h_cond + self.margin))))]

    def worker_count(self) -> int:
        """min(SKAUDIT_THREADS, threads, cpu count), ignoring settings that are absent."""
        limits = [os.cpu_count() or 1]
        if self.threads:
            limits.append(self.threads)
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                limits.append(max(1, int(env)))
            except ValueError:
                raise ValueError(f"{THREADS_ENV} must be an integer, got '{env}'.")
        return min(limits)

    def echo(self) -> Dict[str, Any]:
        """Every effective value, for the run manifest."""
        return asdict(self)
